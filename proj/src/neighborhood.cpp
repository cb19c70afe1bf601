#include "stdtex/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "stdtex/errors.hpp"
#include "stdtex/quadrature.hpp"
#include "stdtex/rng.hpp"

namespace stdtex {

std::string_view label(Orientation o) noexcept {
  switch (o) {
    case Orientation::EW: return "E/W";
    case Orientation::NS: return "N/S";
    case Orientation::NESW: return "NE/SW";
    case Orientation::NWSE: return "NW/SE";
  }
  return "?";
}

OrientationClass orientation_class(Orientation o) noexcept {
  return (o == Orientation::EW || o == Orientation::NS) ? OrientationClass::Straight
                                                         : OrientationClass::Diagonal;
}

Vec2 boundary_normal(Orientation o) noexcept {
  constexpr double h = std::numbers::sqrt2 / 2.0;
  switch (o) {
    case Orientation::EW: return {1.0, 0.0};
    case Orientation::NS: return {0.0, -1.0};
    case Orientation::NESW: return {h, -h};
    case Orientation::NWSE: return {-h, -h};
  }
  return {1.0, 0.0};
}

LimitDistribution limit_distribution(double lambda, Orientation o, Side side, const LimitOptions& options) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be > 0");
  if (!(options.mass_cutoff > 0.0 && options.mass_cutoff < 1.0)) {
    throw ParameterError("mass cutoff must lie in (0, 1)");
  }
  Vec2 n = boundary_normal(o);
  if (side == Side::Minus) n = {-n.x, -n.y};

  const int radius =
      static_cast<int>(std::ceil(lambda * std::sqrt(2.0 * std::log(1.0 / options.mass_cutoff)))) + 2;
  LimitDistribution out;
  for (int dy = -radius; dy <= radius; ++dy) {
    const double my = quad::gaussian_interval(dy - 0.5, dy + 0.5, lambda);
    for (int dx = -radius; dx <= radius; ++dx) {
      const double full = quad::gaussian_interval(dx - 0.5, dx + 0.5, lambda) * my;
      if (full < options.mass_cutoff) continue;
      // Some part of the pixel must lie strictly inside the half-plane.
      double reach = -1.0;
      for (double cx : {dx - 0.5, dx + 0.5}) {
        for (double cy : {dy - 0.5, dy + 0.5}) reach = std::max(reach, n.x * cx + n.y * cy);
      }
      if (reach <= 1e-12) continue;
      const double mass = quad::half_plane_rect_mass(dx - 0.5, dx + 0.5, dy - 0.5, dy + 0.5, n.x, n.y,
                                                     lambda, options.quadrature_tolerance);
      if (!(mass > 0.0)) continue;
      out.states.push_back({dx, dy});
      out.prob.push_back(mass);
    }
  }
  const double total = std::accumulate(out.prob.begin(), out.prob.end(), 0.0);
  for (double& p : out.prob) p /= total;
  return out;
}

namespace {

constexpr std::array<Offset, 4> kSteps = {Offset{1, 0}, Offset{-1, 0}, Offset{0, 1}, Offset{0, -1}};

std::vector<TransitionRow> neighbor_structure(const LimitDistribution& limit) {
  std::map<Offset, int> index;
  for (std::size_t i = 0; i < limit.size(); ++i) index.emplace(limit.states[i], static_cast<int>(i));
  std::vector<TransitionRow> rows(limit.size());
  for (std::size_t a = 0; a < limit.size(); ++a) {
    TransitionRow& r = rows[a];
    r.target[0] = static_cast<int>(a);
    r.count = 1;
    for (const Offset& s : kSteps) {
      const Offset b{limit.states[a].dx + s.dx, limit.states[a].dy + s.dy};
      if (auto it = index.find(b); it != index.end()) r.target[static_cast<std::size_t>(r.count++)] = it->second;
    }
  }
  return rows;
}

void renormalize_rows(std::vector<TransitionRow>& rows) {
  for (TransitionRow& r : rows) {
    double s = 0.0;
    for (int t = 0; t < r.count; ++t) s += r.prob[static_cast<std::size_t>(t)];
    for (int t = 0; t < r.count; ++t) r.prob[static_cast<std::size_t>(t)] /= s;
  }
}

}  // namespace

double consistency_residual(const LimitDistribution& limit, const TransitionTable& table) {
  std::vector<double> inflow(limit.size(), 0.0);
  double res = 0.0;
  for (std::size_t b = 0; b < limit.size(); ++b) {
    const TransitionRow& r = table.rows[b];
    double row_sum = 0.0;
    for (int t = 0; t < r.count; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      inflow[static_cast<std::size_t>(r.target[ts])] += limit.prob[b] * r.prob[ts];
      row_sum += r.prob[ts];
    }
    res += (row_sum - 1.0) * (row_sum - 1.0);
  }
  for (std::size_t a = 0; a < limit.size(); ++a) res += (limit.prob[a] - inflow[a]) * (limit.prob[a] - inflow[a]);
  return res;
}

TransitionTable solve_transitions(const LimitDistribution& limit, const SolveOptions& options,
                                  SolveReport* report) {
  const std::size_t n = limit.size();
  if (n == 0) throw ParameterError("empty limit distribution");
  TransitionTable table{neighbor_structure(limit)};
  auto& rows = table.rows;

  std::vector<int> first(n + 1, 0);
  for (std::size_t a = 0; a < n; ++a) first[a + 1] = first[a] + rows[a].count;
  const int unknowns = first[n];

  // Initial guess proportional to the limit mass of each target.
  Eigen::VectorXd x(unknowns);
  for (std::size_t a = 0; a < n; ++a) {
    double s = 0.0;
    for (int t = 0; t < rows[a].count; ++t) s += limit.prob[static_cast<std::size_t>(rows[a].target[static_cast<std::size_t>(t)])];
    for (int t = 0; t < rows[a].count; ++t) {
      x[first[a] + t] = limit.prob[static_cast<std::size_t>(rows[a].target[static_cast<std::size_t>(t)])] / s;
    }
  }

  // Linear constraints A x = 1: stationarity rows scaled by 1/p(a), then row sums.
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(2 * unknowns));
  for (std::size_t b = 0; b < n; ++b) {
    for (int t = 0; t < rows[b].count; ++t) {
      const auto a = static_cast<std::size_t>(rows[b].target[static_cast<std::size_t>(t)]);
      triplets.emplace_back(static_cast<int>(a), first[b] + t, limit.prob[b] / limit.prob[a]);
      triplets.emplace_back(static_cast<int>(n + b), first[b] + t, 1.0);
    }
  }
  Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(2 * n), unknowns);
  A.setFromTriplets(triplets.begin(), triplets.end());
  const Eigen::VectorXd rhs = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(2 * n));

  // Damped normal matrix; the damping also covers the one redundant constraint.
  Eigen::SparseMatrix<double> M = A * A.transpose();
  Eigen::SparseMatrix<double> damping(M.rows(), M.cols());
  damping.setIdentity();
  M += 1e-10 * damping;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(M);
  if (ldlt.info() != Eigen::Success) throw ConvergenceError("transition solver: factorization failed", -1.0);

  auto unpack = [&] {
    for (std::size_t a = 0; a < n; ++a) {
      for (int t = 0; t < rows[a].count; ++t) rows[a].prob[static_cast<std::size_t>(t)] = x[first[a] + t];
    }
  };

  SolveReport rep;
  double previous = std::numeric_limits<double>::infinity();
  int slow = 0;
  for (rep.iterations = 1; rep.iterations <= options.max_iterations; ++rep.iterations) {
    const Eigen::VectorXd r = A * x - rhs;
    x -= A.transpose() * ldlt.solve(r);
    rep.clamp_active = false;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x[i] < 0.0 || x[i] > 1.0) {
        x[i] = std::clamp(x[i], 0.0, 1.0);
        rep.clamp_active = true;
      }
    }
    unpack();
    if (rep.clamp_active) {
      renormalize_rows(rows);
      for (std::size_t a = 0; a < n; ++a) {
        for (int t = 0; t < rows[a].count; ++t) x[first[a] + t] = rows[a].prob[static_cast<std::size_t>(t)];
      }
    }
    rep.residual_sq = consistency_residual(limit, table);
    if (rep.residual_sq <= 1e-28) break;
    slow = rep.residual_sq > 0.5 * previous ? slow + 1 : 0;
    if (slow >= 5 && rep.residual_sq <= options.tolerance) break;
    previous = rep.residual_sq;
  }
  rep.iterations = std::min(rep.iterations, options.max_iterations);

  renormalize_rows(rows);
  rep.residual_sq = consistency_residual(limit, table);
  if (report) *report = rep;
  if (!(rep.residual_sq <= options.tolerance)) {
    throw ConvergenceError("transition solver did not reach tolerance", rep.residual_sq);
  }
  return table;
}

ChainSampler::ChainSampler(const HalfNeighborhood& half) : offsets_(half.limit.states) {
  start_cdf_.resize(half.limit.size());
  std::partial_sum(half.limit.prob.begin(), half.limit.prob.end(), start_cdf_.begin());
  rows_.resize(half.transitions.rows.size());
  for (std::size_t a = 0; a < rows_.size(); ++a) {
    const TransitionRow& src = half.transitions.rows[a];
    Row& r = rows_[a];
    r.count = src.count;
    double c = 0.0;
    for (int t = 0; t < src.count; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      c += src.prob[ts];
      r.target[ts] = src.target[ts];
      r.cumulative[ts] = c;
    }
  }
}

int ChainSampler::start(double u) const noexcept {
  const auto it = std::upper_bound(start_cdf_.begin(), start_cdf_.end(), u);
  if (it == start_cdf_.end()) return static_cast<int>(start_cdf_.size()) - 1;
  return static_cast<int>(it - start_cdf_.begin());
}

Calibration estimate_extents(const HalfNeighborhood& half, Vec2 normal, int max_length,
                             std::size_t samples, std::uint64_t seed) {
  if (max_length < 1 || samples < 2) throw ParameterError("extent estimate needs m >= 1 and >= 2 samples");
  const ChainSampler sampler(half);
  std::vector<double> proj(sampler.size());
  for (std::size_t s = 0; s < proj.size(); ++s) {
    const Offset& o = sampler.offset(static_cast<int>(s));
    proj[s] = o.dx * normal.x + o.dy * normal.y;
  }
  const auto len = static_cast<std::size_t>(max_length);
  std::vector<double> sum(len, 0.0), sumsq(len, 0.0);
  for (std::size_t w = 0; w < samples; ++w) {
    CounterStream rng(seed, static_cast<std::uint32_t>(w), static_cast<std::uint32_t>(w >> 32), 0xCA11B000u);
    int state = sampler.start(rng.uniform());
    double lo = proj[static_cast<std::size_t>(state)], hi = lo;
    for (std::size_t m = 1; m < len; ++m) {
      state = sampler.step(state, rng.uniform());
      const double p = proj[static_cast<std::size_t>(state)];
      lo = std::min(lo, p);
      hi = std::max(hi, p);
      sum[m] += hi - lo;
      sumsq[m] += (hi - lo) * (hi - lo);
    }
  }
  Calibration c;
  c.extent.resize(len);
  c.extent_se.resize(len);
  const auto s = static_cast<double>(samples);
  for (std::size_t m = 0; m < len; ++m) {
    const double mean = sum[m] / s;
    const double var = std::max(0.0, (sumsq[m] - s * mean * mean) / (s - 1.0));
    c.extent[m] = mean;
    c.extent_se[m] = std::sqrt(var / s);
  }
  return c;
}

Calibration calibrate_walk_length(const HalfNeighborhood& half, Vec2 normal, double lambda,
                                  const CalibrationOptions& options) {
  if (!(lambda > 0.0)) throw ParameterError("lambda must be > 0");
  if (half.limit.size() <= 1) {
    Calibration c;
    c.extent = {0.0};
    c.extent_se = {0.0};
    return c;
  }
  int length = std::max(8, static_cast<int>(std::ceil(3.0 * lambda * lambda)) + 8);
  Calibration c;
  while (true) {
    c = estimate_extents(half, normal, length, options.samples, options.seed);
    const auto crossing = std::find_if(c.extent.begin(), c.extent.end(), [&](double e) { return e >= lambda; });
    // The search stops one length past the first overshoot.
    if ((crossing != c.extent.end() && crossing + 1 != c.extent.end()) || length >= options.max_walk_length) {
      break;
    }
    length = std::min(2 * length, options.max_walk_length);
  }
  const auto crossing = std::find_if(c.extent.begin(), c.extent.end(), [&](double e) { return e >= lambda; });
  std::size_t last = crossing == c.extent.end() ? c.extent.size() - 1
                                                : static_cast<std::size_t>(crossing - c.extent.begin()) + 1;
  last = std::min(last, c.extent.size() - 1);
  std::size_t best = 0;
  for (std::size_t m = 1; m <= last; ++m) {
    if (std::abs(c.extent[m] - lambda) < std::abs(c.extent[best] - lambda)) best = m;
  }
  c.extent.resize(last + 1);
  c.extent_se.resize(last + 1);
  c.walk_length = static_cast<int>(best) + 1;
  c.achieved_extent = c.extent[best];
  c.standard_error = c.extent_se[best];
  return c;
}

HalfNeighborhood reflect(const HalfNeighborhood& half) {
  HalfNeighborhood out = half;
  for (Offset& o : out.limit.states) o = {-o.dx, -o.dy};
  return out;
}

HalfNeighborhood rotate_quarter(const HalfNeighborhood& half) {
  HalfNeighborhood out = half;
  for (Offset& o : out.limit.states) o = {o.dy, -o.dx};
  return out;
}

NeighborhoodModel build_model(double lambda, OrientationClass cls, const BuildOptions& options) {
  NeighborhoodModel model;
  model.lambda = lambda;
  model.orientation = cls == OrientationClass::Straight ? Orientation::EW : Orientation::NESW;

  HalfNeighborhood plus;
  plus.limit = limit_distribution(lambda, model.orientation, Side::Plus, options.limit);
  SolveReport report;
  plus.transitions = solve_transitions(plus.limit, options.solve, &report);
  model.residual_sq = report.residual_sq;
  model.clamp_active = report.clamp_active;

  const Calibration cal = calibrate_walk_length(plus, boundary_normal(model.orientation), lambda, options.calibration);
  model.walk_length = cal.walk_length;
  model.achieved_extent = cal.achieved_extent;
  model.extent_se = cal.standard_error;

  model.halves[static_cast<std::size_t>(Side::Minus)] = reflect(plus);
  model.halves[static_cast<std::size_t>(Side::Plus)] = std::move(plus);
  return model;
}

ModelSet derive_rotations(const NeighborhoodModel& straight, const NeighborhoodModel& diagonal) {
  if (straight.orientation != Orientation::EW || diagonal.orientation != Orientation::NESW) {
    throw ParameterError("derive_rotations expects an E/W and a NE/SW model");
  }
  ModelSet set;
  auto turned = [](const NeighborhoodModel& m, Orientation o) {
    NeighborhoodModel r = m;
    r.orientation = o;
    for (HalfNeighborhood& h : r.halves) h = rotate_quarter(h);
    return r;
  };
  set[static_cast<std::size_t>(Orientation::EW)] = straight;
  set[static_cast<std::size_t>(Orientation::NS)] = turned(straight, Orientation::NS);
  set[static_cast<std::size_t>(Orientation::NESW)] = diagonal;
  set[static_cast<std::size_t>(Orientation::NWSE)] = turned(diagonal, Orientation::NWSE);
  return set;
}

ModelSet build_model_set(double lambda, const BuildOptions& options) {
  return derive_rotations(build_model(lambda, OrientationClass::Straight, options),
                          build_model(lambda, OrientationClass::Diagonal, options));
}

}  // namespace stdtex
