#include "stdtex/reconstruct.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stdtex/errors.hpp"

namespace stdtex {

namespace {

void require_scalar(const Field& f, const char* what) {
  if (f.channels() != 1) throw ParameterError(std::string(what) + " needs a scalar field");
}

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

Mask select_top(const Field& map, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ParameterError("fraction must lie in [0, 1]");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map.present(i)) order.push_back(i);
  }
  if (order.empty()) throw ParameterError("select_top: map has no defined value");
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size())));
  const auto values = map.data();
  const auto channels = static_cast<std::size_t>(map.channels());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a * channels] > values[b * channels]; });
  Mask mask(map.size(), 0);
  for (std::size_t i = 0; i < keep; ++i) mask[order[i]] = 1;
  return mask;
}

Field solve_gradients(const Field& original, std::span<const GradientTerm> terms, const SolverOptions& options) {
  require_scalar(original, "reconstruction");
  const std::size_t size = original.size();
  std::vector<std::size_t> node(size, kNone);
  std::size_t unknowns = 0;
  for (std::size_t i = 0; i < size; ++i) {
    if (original.present(i)) node[i] = unknowns++;
  }
  Field out(original.width(), original.height(), 1, original.domain());
  if (unknowns == 0) return out;

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(4 * terms.size() + unknowns);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(unknowns));
  std::vector<std::size_t> parent(unknowns);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  for (const GradientTerm& t : terms) {
    if (t.a >= size || t.b >= size || node[t.a] == kNone || node[t.b] == kNone) {
      throw StructureError("gradient term refers to a missing pixel");
    }
    if (t.weight == 0.0) continue;
    const auto a = static_cast<Eigen::Index>(node[t.a]);
    const auto b = static_cast<Eigen::Index>(node[t.b]);
    entries.emplace_back(a, a, t.weight);
    entries.emplace_back(b, b, t.weight);
    entries.emplace_back(a, b, -t.weight);
    entries.emplace_back(b, a, -t.weight);
    rhs(b) += t.weight * t.target;
    rhs(a) -= t.weight * t.target;
    parent[find_root(parent, node[t.a])] = find_root(parent, node[t.b]);
  }

  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(unknowns));
  if (rhs.squaredNorm() > 0.0) {
    Eigen::SparseMatrix<double> lap(static_cast<Eigen::Index>(unknowns), static_cast<Eigen::Index>(unknowns));
    lap.setFromTriplets(entries.begin(), entries.end());
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(options.tolerance);
    cg.setMaxIterations(options.max_iterations);
    cg.compute(lap);
    v = cg.solve(rhs);
    if (cg.info() != Eigen::Success) {
      throw ConvergenceError("reconstruction solver did not converge", cg.error());
    }
  }

  // Mean adjustment per connected component.
  std::vector<double> shift(unknowns, 0.0), count(unknowns, 0.0);
  const auto values = original.data();
  for (std::size_t i = 0; i < size; ++i) {
    if (node[i] == kNone) continue;
    const std::size_t r = find_root(parent, node[i]);
    shift[r] += values[i] - v(static_cast<Eigen::Index>(node[i]));
    count[r] += 1.0;
  }
  for (std::size_t i = 0; i < size; ++i) {
    if (node[i] == kNone) continue;
    const std::size_t r = find_root(parent, node[i]);
    const double value = v(static_cast<Eigen::Index>(node[i])) + shift[r] / count[r];
    out.set(original.coord(i), std::clamp(value, 0.0, 1.0));
  }
  return out;
}

Field poisson_reconstruct(const Field& original, const Mask& mask, const SolverOptions& options) {
  require_scalar(original, "poisson_reconstruct");
  if (mask.size() != original.size()) throw StructureError("mask size does not match the field");
  std::vector<GradientTerm> terms;
  const auto values = original.data();
  for (int y = 0; y < original.height(); ++y) {
    for (int x = 0; x < original.width(); ++x) {
      const PixelCoord a{x, y};
      if (!original.present(a)) continue;
      const std::size_t ia = original.index(a);
      for (const PixelCoord b : {PixelCoord{x + 1, y}, PixelCoord{x, y + 1}}) {
        if (!original.present(b)) continue;
        const std::size_t ib = original.index(b);
        terms.push_back({ia, ib, mask[ia] ? values[ib] - values[ia] : 0.0, 1.0});
      }
    }
  }
  return solve_gradients(original, terms, options);
}

double psnr(const Field& reference, const Field& test) {
  if (reference.width() != test.width() || reference.height() != test.height()) {
    throw StructureError("psnr: images differ in size");
  }
  require_scalar(reference, "psnr");
  require_scalar(test, "psnr");
  double sse = 0.0;
  std::size_t common = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (!reference.present(i) || !test.present(i)) continue;
    const double e = reference.data()[i] - test.data()[i];
    sse += e * e;
    ++common;
  }
  if (common == 0) throw ParameterError("psnr: no common valid pixel");
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(common) / sse);
}

int side_sign(const Field& field, PixelCoord p, const NeighborhoodModel& model, Side toward) {
  const auto mean = [&](Side s) -> std::optional<double> {
    const LimitDistribution& limit = model.half(s).limit;
    double sum = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < limit.size(); ++i) {
      const auto v = field.get({p.x + limit.states[i].dx, p.y + limit.states[i].dy});
      if (!v) continue;
      sum += limit.prob[i] * *v;
      mass += limit.prob[i];
    }
    if (mass == 0.0) return std::nullopt;
    return sum / mass;
  };
  const Side away = toward == Side::Plus ? Side::Minus : Side::Plus;
  const auto t = mean(toward), w = mean(away);
  if (!t || !w) return 0;
  return (*t > *w) - (*t < *w);
}

Field texgrad_reconstruct(const Field& original, std::span<const Field> directional, const ModelSet& models,
                          const SolverOptions& options) {
  require_scalar(original, "texgrad_reconstruct");
  if (directional.size() != 4) throw StructureError("texgrad needs one discrepancy map per orientation");
  for (const Field& d : directional) {
    if (d.width() != original.width() || d.height() != original.height()) {
      throw StructureError("discrepancy map does not match the field");
    }
  }
  // E/W normal points to +x, so "+" faces the right neighbor; N/S normal
  // points up, so the lower neighbor lies on the "-" side.
  struct Axis {
    int dx, dy;
    Orientation o;
    Side toward;
  };
  constexpr Axis axes[2] = {{1, 0, Orientation::EW, Side::Plus}, {0, 1, Orientation::NS, Side::Minus}};

  std::vector<GradientTerm> terms;
  for (int y = 0; y < original.height(); ++y) {
    for (int x = 0; x < original.width(); ++x) {
      const PixelCoord a{x, y};
      if (!original.present(a)) continue;
      for (const Axis& axis : axes) {
        const PixelCoord b{x + axis.dx, y + axis.dy};
        if (!original.present(b)) continue;
        const Field& d = directional[static_cast<std::size_t>(axis.o)];
        const NeighborhoodModel& model = models[static_cast<std::size_t>(axis.o)];
        double sum = 0.0;
        int count = 0;
        for (const PixelCoord p : {a, b}) {
          const auto v = d.get(p);
          if (!v) continue;
          sum += side_sign(original, p, model, axis.toward) * *v;
          ++count;
        }
        if (count == 0) continue;
        // Two residuals on the same difference fold into one with twice the
        // weight at the average target.
        terms.push_back({original.index(a), original.index(b), sum / count, static_cast<double>(count)});
      }
    }
  }
  return solve_gradients(original, terms, options);
}

}  // namespace stdtex
