#include "stdtex/discrepancy.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <sstream>

#include "stdtex/errors.hpp"
#include "stdtex/model_cache.hpp"

namespace stdtex {

namespace {

// Sum in eight interleaved lanes; the result depends only on the data, never on
// alignment or threading.
double lane_sum(const double* x, int len) noexcept {
  double lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  int i = 0;
  for (; i + 8 <= len; i += 8) {
    for (int l = 0; l < 8; ++l) lane[l] += x[i + l];
  }
  for (int l = 0; i < len; ++i, ++l) lane[l] += x[i];
  return ((lane[0] + lane[4]) + (lane[1] + lane[5])) + ((lane[2] + lane[6]) + (lane[3] + lane[7]));
}

std::vector<std::optional<double>> scalar_path(const PathSet& s, int j) {
  std::vector<std::optional<double>> out(static_cast<std::size_t>(s.m));
  for (int i = 0; i < s.m; ++i) out[static_cast<std::size_t>(i)] = s.value(j, i);
  return out;
}

std::vector<std::optional<Rgb>> color_path(const PathSet& s, int j) {
  std::vector<std::optional<Rgb>> out(static_cast<std::size_t>(s.m));
  for (int i = 0; i < s.m; ++i) {
    if (auto r = s.value(j, i, 0)) out[static_cast<std::size_t>(i)] = Rgb{*r, *s.value(j, i, 1), *s.value(j, i, 2)};
  }
  return out;
}

// Kernel matrix between the paths of `a` (rows) and `b` (columns).
std::vector<std::optional<double>> kernel_matrix(const PathSet& a, const PathSet& b, const KernelSpec& kernel) {
  std::vector<std::optional<double>> k(static_cast<std::size_t>(a.n) * static_cast<std::size_t>(b.n));
  if (kernel.kind == KernelKind::Gray) {
    for (int j = 0; j < a.n; ++j) {
      const auto s = scalar_path(a, j);
      for (int l = 0; l < b.n; ++l) {
        k[static_cast<std::size_t>(j * b.n + l)] = k_scalar(s, scalar_path(b, l), kernel.kappa);
      }
    }
  } else {
    const ColorDelta delta = kernel.kind == KernelKind::Lab ? ColorDelta::Lab : ColorDelta::DE2000;
    for (int j = 0; j < a.n; ++j) {
      const auto s = color_path(a, j);
      for (int l = 0; l < b.n; ++l) {
        k[static_cast<std::size_t>(j * b.n + l)] = k_color(s, color_path(b, l), kernel.kappa, delta);
      }
    }
  }
  return k;
}

std::optional<double> term_mean(const std::vector<std::optional<double>>& k) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& v : k) {
    if (!v) continue;
    sum += *v;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

// Paths are processed in tiles of kRows x kLanes pairs; buffers holding
// paths as columns are padded to a multiple of kLanes.
constexpr int kLanes = 8;
constexpr int kRows = 4;
using Lanes = double __attribute__((vector_size(kLanes * sizeof(double))));

inline Lanes load_lanes(const double* p) noexcept {
  Lanes v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void store_lanes(double* p, Lanes v) noexcept { std::memcpy(p, &v, sizeof v); }

constexpr std::size_t kMaxScales = 32;

void fused_valid(const double* pt, const double* mt, int steps, int n, int stride, std::span<const double> scaled,
                 double* out) noexcept {
  const auto scales = static_cast<int>(scaled.size());
  Lanes sums[kMaxScales] = {};
  Lanes kk[kMaxScales];
  for (int q = 0; q < scales; ++q) kk[q] = Lanes{} + scaled[static_cast<std::size_t>(q)];
  for (int j0 = 0; j0 < n; j0 += kRows) {
    for (int k0 = j0 / kLanes * kLanes; k0 < n; k0 += kLanes) {
      Lanes pp[kRows] = {}, mm[kRows] = {}, pm[kRows] = {}, mp[kRows] = {};
      for (int i = 0; i < steps; ++i) {
        const std::ptrdiff_t row = static_cast<std::ptrdiff_t>(i) * stride;
        const Lanes p = load_lanes(pt + row + k0);
        const Lanes m = load_lanes(mt + row + k0);
        for (int r = 0; r < kRows; ++r) {
          const double pj = pt[row + j0 + r], mj = mt[row + j0 + r];
          const Lanes e1 = pj - p, e2 = mj - m, e3 = pj - m, e4 = mj - p;
          pp[r] += e1 * e1;
          mm[r] += e2 * e2;
          pm[r] += e3 * e3;
          mp[r] += e4 * e4;
        }
      }
      Lanes w[kRows];
      const bool interior = k0 >= j0 + kRows && k0 + kLanes <= n;
      for (int r = 0; r < kRows; ++r) {
        if (interior) {
          w[r] = Lanes{} + 2.0;
          continue;
        }
        const int j = j0 + r;
        for (int l = 0; l < kLanes; ++l) {
          const int k = k0 + l;
          w[r][l] = k >= n || j >= n || k < j ? 0.0 : k == j ? 1.0 : 2.0;
        }
      }
      for (int q = 0; q < scales; ++q) {
        for (int r = 0; r < kRows; ++r) {
          const Lanes a = kk[q] + pp[r], b = kk[q] + mm[r], c = kk[q] + pm[r], d = kk[q] + mp[r];
          const Lanes ab = a * b, cd = c * d;
          sums[q] += w[r] * (((a + b) * cd - (c + d) * ab) / (ab * cd));
        }
      }
    }
  }
  const double pairs = static_cast<double>(n) * n;
  for (int q = 0; q < scales; ++q) {
    double lanes[kLanes];
    store_lanes(lanes, sums[q]);
    out[q] = scaled[static_cast<std::size_t>(q)] * lane_sum(lanes, kLanes) / pairs;
  }
}

// Incomplete-data estimator in the same tiling. Paths pair up on the steps
// both observe; msd is the mean over those steps and pairs without a common
// step drop out of their term. Each term is the mean over its valid pairs, the
// diagonal of the within-set terms counting 1 per observed path. Returns false
// when some term has no valid pair; `out[q]` then stays untouched.
bool fused_missing(const double* pt, const double* pw, const double* mt, const double* mw, int steps, int n,
                   int stride, double channels, double observed_p, double observed_m,
                   std::span<const double> kappa_sq, double* out) noexcept {
  const auto scales = static_cast<int>(kappa_sq.size());
  Lanes spp[kMaxScales] = {}, smm[kMaxScales] = {}, spm[kMaxScales] = {};
  Lanes kk[kMaxScales];
  for (int q = 0; q < scales; ++q) kk[q] = Lanes{} + kappa_sq[static_cast<std::size_t>(q)];
  const Lanes one = Lanes{} + 1.0;
  Lanes npp = {}, nmm = {}, npm = {};
  for (int j0 = 0; j0 < n; j0 += kRows) {
    for (int k0 = j0 / kLanes * kLanes; k0 < n; k0 += kLanes) {
      Lanes pp[kRows] = {}, mm[kRows] = {}, pm[kRows] = {}, mp[kRows] = {};
      Lanes cpp[kRows] = {}, cmm[kRows] = {}, cpm[kRows] = {}, cmp[kRows] = {};
      for (int i = 0; i < steps; ++i) {
        const std::ptrdiff_t row = static_cast<std::ptrdiff_t>(i) * stride;
        const Lanes p = load_lanes(pt + row + k0), wp = load_lanes(pw + row + k0);
        const Lanes m = load_lanes(mt + row + k0), wm = load_lanes(mw + row + k0);
        for (int r = 0; r < kRows; ++r) {
          const double pj = pt[row + j0 + r], mj = mt[row + j0 + r];
          const double wpj = pw[row + j0 + r], wmj = mw[row + j0 + r];
          const Lanes e1 = pj - p, e2 = mj - m, e3 = pj - m, e4 = mj - p;
          const Lanes w1 = wpj * wp, w2 = wmj * wm, w3 = wpj * wm, w4 = wmj * wp;
          pp[r] += w1 * (e1 * e1);
          mm[r] += w2 * (e2 * e2);
          pm[r] += w3 * (e3 * e3);
          mp[r] += w4 * (e4 * e4);
          cpp[r] += w1;
          cmm[r] += w2;
          cpm[r] += w3;
          cmp[r] += w4;
        }
      }
      for (int r = 0; r < kRows; ++r) {
        const int j = j0 + r;
        Lanes upper, diag;
        for (int l = 0; l < kLanes; ++l) {
          const int k = k0 + l;
          upper[l] = j < n && k < n && k > j ? 1.0 : 0.0;
          diag[l] = j < n && k == j ? 1.0 : 0.0;
        }
        // Counts are whole numbers, so min(c, 1) is the 0/1 validity.
        const Lanes vpp = upper * (cpp[r] < one ? cpp[r] : one);
        const Lanes vmm = upper * (cmm[r] < one ? cmm[r] : one);
        const Lanes vpm = (upper + diag) * (cpm[r] < one ? cpm[r] : one);
        const Lanes vmp = upper * (cmp[r] < one ? cmp[r] : one);
        npp += vpp;
        nmm += vmm;
        npm += vpm + vmp;
        const Lanes dpp = channels * pp[r] / (cpp[r] > one ? cpp[r] : one);
        const Lanes dmm = channels * mm[r] / (cmm[r] > one ? cmm[r] : one);
        const Lanes dpm = channels * pm[r] / (cpm[r] > one ? cpm[r] : one);
        const Lanes dmp = channels * mp[r] / (cmp[r] > one ? cmp[r] : one);
        for (int q = 0; q < scales; ++q) {
          spp[q] += vpp * (kk[q] / (kk[q] + dpp));
          smm[q] += vmm * (kk[q] / (kk[q] + dmm));
          spm[q] += vpm * (kk[q] / (kk[q] + dpm)) + vmp * (kk[q] / (kk[q] + dmp));
        }
      }
    }
  }
  const auto total = [](Lanes v) {
    double lanes[kLanes];
    store_lanes(lanes, v);
    return lane_sum(lanes, kLanes);
  };
  const double count_pp = observed_p + 2.0 * total(npp), count_mm = observed_m + 2.0 * total(nmm);
  const double count_pm = total(npm);
  if (!(count_pp > 0.0 && count_mm > 0.0 && count_pm > 0.0)) return false;
  for (int q = 0; q < scales; ++q) {
    out[q] = (observed_p + 2.0 * total(spp[q])) / count_pp + (observed_m + 2.0 * total(smm[q])) / count_mm -
             2.0 * total(spm[q]) / count_pm;
  }
  return true;
}

void de2000_sums(const std::vector<Lab>& la, const PathSet& a, const std::vector<Lab>& lb, const PathSet& b,
                 int stride, bool upper, double* d, double* c) {
  const int n = a.n, m = a.m;
  for (int j = 0; j < n; ++j) {
    for (int k = upper ? j + 1 : 0; k < n; ++k) {
      double sum = 0.0;
      int common = 0;
      for (int i = 0; i < m; ++i) {
        const auto ca = static_cast<std::size_t>(j * m + i);
        const auto cb = static_cast<std::size_t>(k * m + i);
        if (a.weight[ca] == 0.0 || b.weight[cb] == 0.0) continue;
        const double e = ciede2000(la[ca], lb[cb]);
        sum += e * e * 1e-4;
        ++common;
      }
      d[j * stride + k] = sum;
      c[j * stride + k] = common;
    }
  }
}

// Per-thread state for the optimized path. For one orientation it holds the
// pairwise squared-difference sums within and across the two path sets;
// those do not depend on kappa, so every data scale reuses them.
class PixelEngine {
 public:
  PixelEngine(const WalkerSet& walkers, KernelKind kind, std::span<const double> kappas, int n)
      : walkers_(walkers), kind_(kind), n_(n), stride_((n + kLanes - 1) / kLanes * kLanes) {
    for (double k : kappas) kappa_sq_.push_back(k * k);
    scaled_.resize(kappa_sq_.size());
    raw_.resize(kappa_sq_.size());
    if (kind_ == KernelKind::DE2000) {
      const auto cells = static_cast<std::size_t>(stride_) * static_cast<std::size_t>(stride_);
      for (auto* v : {&dpp_, &dmm_, &dpm_, &dmp_, &cpp_, &cmm_, &cpm_}) v->assign(cells, 0.0);
      buf_.resize(static_cast<std::size_t>(stride_));
    }
  }

  /// d2 is laid out [kappa][orientation].
  int evaluate(const Field& field, PixelCoord center, std::uint64_t seed,
               std::vector<std::array<std::optional<double>, 4>>& d2) {
    d2.assign(kappa_sq_.size(), {});
    int clamps = 0;
    for (Orientation o : kOrientations) {
      sample_pathset(walkers_, o, Side::Plus, field, center, n_, seed, plus_);
      sample_pathset(walkers_, o, Side::Minus, field, center, n_, seed, minus_);
      const bool valid = plus_.all_valid && minus_.all_valid;
      if (!(kind_ == KernelKind::DE2000 ? prepare(valid) : fused(valid))) continue;
      for (std::size_t q = 0; q < kappa_sq_.size(); ++q) {
        double raw = raw_[q];
        if (kind_ == KernelKind::DE2000) raw = valid ? mmd_valid(kappa_sq_[q] * plus_.m) : mmd_missing(kappa_sq_[q]);
        if (raw < 0.0) {
          raw = 0.0;
          ++clamps;
        }
        d2[q][static_cast<std::size_t>(o)] = raw;
      }
    }
    return clamps;
  }

 private:
  // Paths as columns: row (step * channels + channel), column path. Colors
  // become Lab / 100 so that the channel sum of squares is the color delta.
  void transpose(const PathSet& s, std::vector<double>& vt, std::vector<double>& wt) const {
    const int n = stride_, m = s.m, ch = channels();
    vt.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(m * ch), 0.0);
    wt.assign(vt.size(), 0.0);
    for (int j = 0; j < s.n; ++j) {
      for (int i = 0; i < m; ++i) {
        const auto cell = static_cast<std::size_t>(j * m + i);
        const double w = s.weight[cell];
        if (ch == 1) {
          vt[static_cast<std::size_t>(i * n + j)] = s.values[cell];
          wt[static_cast<std::size_t>(i * n + j)] = w;
          continue;
        }
        Lab lab{};
        if (w != 0.0) {
          const double* v = s.values.data() + 3 * cell;
          lab = rgb_to_lab({v[0], v[1], v[2]});
        }
        const double f[3] = {lab.L * 0.01, lab.a * 0.01, lab.b * 0.01};
        for (int c = 0; c < 3; ++c) {
          vt[static_cast<std::size_t>((3 * i + c) * n + j)] = f[c];
          wt[static_cast<std::size_t>((3 * i + c) * n + j)] = w;
        }
      }
    }
  }

  static void to_lab(const PathSet& s, std::vector<Lab>& out) {
    out.resize(s.weight.size());
    for (std::size_t c = 0; c < s.weight.size(); ++c) {
      if (s.weight[c] == 0.0) continue;
      const double* v = s.values.data() + 3 * c;
      out[c] = rgb_to_lab({v[0], v[1], v[2]});
    }
  }

  int channels() const noexcept { return kind_ == KernelKind::Lab ? 3 : 1; }

  static int observed_paths(const PathSet& s) {
    int count = 0;
    for (int j = 0; j < s.n; ++j) {
      const double* w = s.weight.data() + static_cast<std::ptrdiff_t>(j) * s.m;
      count += std::any_of(w, w + s.m, [](double x) { return x != 0.0; }) ? 1 : 0;
    }
    return count;
  }

  // Raw estimates for every kappa into raw_; false when undefined.
  bool fused(bool valid) {
    transpose(plus_, pt_, pw_);
    transpose(minus_, mt_, mw_);
    const int rows = plus_.m * channels();
    const double op = valid ? 0.0 : observed_paths(plus_), om = valid ? 0.0 : observed_paths(minus_);
    for (std::size_t q0 = 0; q0 < kappa_sq_.size(); q0 += kMaxScales) {
      const std::size_t len = std::min(kMaxScales, kappa_sq_.size() - q0);
      if (valid) {
        for (std::size_t q = q0; q < q0 + len; ++q) scaled_[q] = kappa_sq_[q] * plus_.m;
        fused_valid(pt_.data(), mt_.data(), rows, n_, stride_, std::span(scaled_).subspan(q0, len), raw_.data() + q0);
      } else if (!fused_missing(pt_.data(), pw_.data(), mt_.data(), mw_.data(), rows, n_, stride_, channels(), op, om,
                                std::span(kappa_sq_).subspan(q0, len), raw_.data() + q0)) {
        return false;
      }
    }
    return true;
  }

  // CIEDE2000 sums for the current orientation. Returns false when one of
  // the three terms has no valid kernel evaluation.
  bool prepare(bool valid) {
    const int n = n_, st = stride_;
    to_lab(plus_, lab_p_);
    to_lab(minus_, lab_m_);
    de2000_sums(lab_p_, plus_, lab_p_, plus_, st, true, dpp_.data(), cpp_.data());
    de2000_sums(lab_m_, minus_, lab_m_, minus_, st, true, dmm_.data(), cmm_.data());
    de2000_sums(lab_p_, plus_, lab_m_, minus_, st, false, dpm_.data(), cpm_.data());
    if (valid) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) dmp_[static_cast<std::size_t>(j * st + k)] = dpm_[static_cast<std::size_t>(k * st + j)];
      }
      return true;
    }
    // Mean squared differences and 0/1 validity, both independent of kappa.
    const auto normalize = [&](std::vector<double>& d, std::vector<double>& c, bool upper) {
      double valid_pairs = 0.0;
      for (int j = 0; j < n; ++j) {
        for (int k = upper ? j + 1 : 0; k < n; ++k) {
          const auto i = static_cast<std::size_t>(j * st + k);
          const bool ok = c[i] > 0.0;
          d[i] = ok ? d[i] / c[i] : 0.0;
          c[i] = ok ? 1.0 : 0.0;
          valid_pairs += c[i];
        }
      }
      return valid_pairs;
    };
    observed_p_ = observed_paths(plus_);
    observed_m_ = observed_paths(minus_);
    count_pp_ = observed_p_ + 2.0 * normalize(dpp_, cpp_, true);
    count_mm_ = observed_m_ + 2.0 * normalize(dmm_, cmm_, true);
    count_pm_ = normalize(dpm_, cpm_, false);
    return count_pp_ > 0.0 && count_mm_ > 0.0 && count_pm_ > 0.0;
  }

  // Complete data; `scaled` is kappa^2 times the path length, matching the
  // unnormalized sums. Each unordered pair contributes
  //   s(pp) + s(mm) - s(pm) - s(mp),  s(x) = K / (K + x),
  // computed over a common denominator with a single division. The summands
  // vanish when the two sets coincide, so identical sets give exactly zero.
  double mmd_valid(double scaled) {
    const int n = n_, st = stride_;
    const double kk = scaled;
    double* buf = buf_.data();
    for (int j = 0; j < n; ++j) buf[j] = 2.0 - 2.0 * kk / (kk + dpm_[static_cast<std::size_t>(j * st + j)]);
    double acc = lane_sum(buf, n);
    for (int j = 0; j + 1 < n; ++j) {
      const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(j) * st + j + 1;
      const double* __restrict pp = dpp_.data() + off;
      const double* __restrict mm = dmm_.data() + off;
      const double* __restrict pm = dpm_.data() + off;
      const double* __restrict mp = dmp_.data() + off;
      const int len = n - j - 1;
      for (int t = 0; t < len; ++t) {
        const double a = kk + pp[t], b = kk + mm[t], c = kk + pm[t], d = kk + mp[t];
        const double ab = a * b, cd = c * d;
        buf[t] = ((a + b) * cd - (c + d) * ab) / (ab * cd);
      }
      acc += 2.0 * kk * lane_sum(buf, len);
    }
    return acc / (static_cast<double>(n) * n);
  }

  // Mean of the valid kernel values of one term. For the within-set terms
  // only k > j is stored; the diagonal contributes 1 per observed path.
  double term(const std::vector<double>& d, const std::vector<double>& v, bool upper, double diagonal,
              double count, double k2) {
    const int n = n_, st = stride_;
    double* buf = buf_.data();
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      const int k0 = upper ? j + 1 : 0;
      const int len = n - k0;
      const double* __restrict dd = d.data() + static_cast<std::ptrdiff_t>(j) * st + k0;
      const double* __restrict vv = v.data() + static_cast<std::ptrdiff_t>(j) * st + k0;
      for (int t = 0; t < len; ++t) buf[t] = vv[t] * (k2 / (k2 + dd[t]));
      acc += lane_sum(buf, len);
    }
    return upper ? (diagonal + 2.0 * acc) / count : acc / count;
  }

  double mmd_missing(double k2) {
    return term(dpp_, cpp_, true, observed_p_, count_pp_, k2) + term(dmm_, cmm_, true, observed_m_, count_mm_, k2) -
           2.0 * term(dpm_, cpm_, false, 0.0, count_pm_, k2);
  }

  const WalkerSet& walkers_;
  KernelKind kind_;
  int n_;
  int stride_;
  std::vector<double> kappa_sq_, scaled_, raw_;
  std::vector<double> buf_;
  PathSet plus_, minus_;
  std::vector<double> pt_, pw_, mt_, mw_;
  std::vector<Lab> lab_p_, lab_m_;
  std::vector<double> dpp_, dmm_, dpm_, dmp_, cpp_, cmm_, cpm_;
  double observed_p_ = 0.0, observed_m_ = 0.0;
  double count_pp_ = 0.0, count_mm_ = 0.0, count_pm_ = 0.0;
};

void check_inputs(const Field& field, KernelKind kind, std::span<const double> kappas, int n) {
  if (n < 1) throw ParameterError("path count n must be >= 1");
  if (kappas.empty()) throw ParameterError("at least one kappa is required");
  for (double k : kappas) KernelSpec{kind, k}.validate();
  if (kind != KernelKind::Gray && field.channels() != 3) {
    throw ParameterError("color kernels need a 3-channel field");
  }
}

const Field& scalar_view(const Field& field, KernelKind kind, Field& storage) {
  if (kind == KernelKind::Gray && field.channels() == 3) {
    storage = field.to_gray();
    return storage;
  }
  return field;
}

Field empty_map(const Field& field) { return Field(field.width(), field.height(), 1, ValueDomain{0.0, 1.0}); }

}  // namespace

Mmd2Result mmd2(const PathSet& minus, const PathSet& plus, const KernelSpec& kernel) {
  kernel.validate();
  if (minus.n != plus.n || minus.m != plus.m || minus.channels != plus.channels) {
    throw StructureError("mmd2: path sets differ in shape");
  }
  if (minus.channels != (kernel.is_color() ? 3 : 1)) throw StructureError("mmd2: channel count does not fit kernel");
  const auto tpp = term_mean(kernel_matrix(plus, plus, kernel));
  const auto tmm = term_mean(kernel_matrix(minus, minus, kernel));
  const auto tpm = term_mean(kernel_matrix(plus, minus, kernel));
  Mmd2Result r;
  if (!tpp || !tmm || !tpm) {
    r.raw = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.raw = *tpp + *tmm - 2.0 * *tpm;
  r.clamped = r.raw < 0.0;
  r.value = r.clamped ? 0.0 : r.raw;
  return r;
}

std::optional<double> combine_directions(const std::array<std::optional<double>, 4>& d2) noexcept {
  double sum = 0.0;
  int count = 0;
  for (const auto& v : d2) {
    if (!v) continue;
    sum += *v;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return std::sqrt(sum / count);
}

PixelDiscrepancy std_at(const Field& field, PixelCoord center, const ModelSet& models, const KernelSpec& kernel,
                        int n, std::uint64_t seed) {
  const double kappa[1] = {kernel.kappa};
  check_inputs(field, kernel.kind, kappa, n);
  Field gray;
  const Field& f = scalar_view(field, kernel.kind, gray);
  PixelDiscrepancy out;
  if (!f.present(center)) return out;
  const WalkerSet walkers(models);
  PixelEngine engine(walkers, kernel.kind, kappa, n);
  std::vector<std::array<std::optional<double>, 4>> d2;
  out.clamps = engine.evaluate(f, center, seed, d2);
  out.d2 = d2[0];
  out.value = combine_directions(out.d2);
  return out;
}

std::string Diagnostics::report() const {
  std::ostringstream s;
  s << "clamp_count=" << clamp_count << '\n'
    << "undefined_pixels=" << undefined_pixels << '\n'
    << "wall_seconds=" << wall_seconds << '\n';
  return s.str();
}

std::vector<StdMap> std_maps(const Field& field, const ModelSet& models, KernelKind kind,
                             std::span<const double> kappas, const StdOptions& options) {
  check_inputs(field, kind, kappas, options.n);
  const auto t0 = std::chrono::steady_clock::now();
  Field gray;
  const Field& f = scalar_view(field, kind, gray);
  const WalkerSet walkers(models);

  std::vector<StdMap> out(kappas.size());
  for (auto& r : out) {
    r.map = empty_map(f);
    if (options.directional) r.directional.assign(4, empty_map(f));
  }

  std::vector<std::size_t> pixels;
  pixels.reserve(f.present_count());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.present(i)) pixels.push_back(i);
  }

  std::size_t clamps = 0;
  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(pixels.size());
#pragma omp parallel reduction(+ : clamps)
  {
    try {
      PixelEngine engine(walkers, kind, kappas, options.n);
      std::vector<std::array<std::optional<double>, 4>> d2;
#pragma omp for schedule(dynamic, 8)
      for (std::ptrdiff_t t = 0; t < count; ++t) {
        const PixelCoord p = f.coord(pixels[static_cast<std::size_t>(t)]);
        clamps += static_cast<std::size_t>(engine.evaluate(f, p, options.seed, d2));
        for (std::size_t q = 0; q < kappas.size(); ++q) {
          if (auto v = combine_directions(d2[q])) out[q].map.set(p, *v);
          if (!options.directional) continue;
          for (std::size_t o = 0; o < 4; ++o) {
            if (d2[q][o]) out[q].directional[o].set(p, std::sqrt(*d2[q][o]));
          }
        }
      }
    } catch (...) {
#pragma omp critical(stdtex_std_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (auto& r : out) {
    r.diagnostics.clamp_count = clamps;
    r.diagnostics.undefined_pixels = r.map.size() - r.map.present_count();
    r.diagnostics.wall_seconds = wall;
  }
  return out;
}

StdMap std_map(const Field& field, const ModelSet& models, const KernelSpec& kernel, const StdOptions& options) {
  const double kappa[1] = {kernel.kappa};
  auto maps = std_maps(field, models, kernel.kind, kappa, options);
  return std::move(maps.front());
}

StdMap std_map(const Field& field, double lambda, const KernelSpec& kernel, const StdOptions& options,
               ModelCache* cache) {
  kernel.validate();
  if (cache) return std_map(field, *cache->get(lambda), kernel, options);
  ModelCache local;
  return std_map(field, *local.get(lambda), kernel, options);
}

Field average_maps(std::span<const Field> maps) {
  if (maps.empty()) throw ParameterError("no maps to average");
  Field out = empty_map(maps.front());
  for (const Field& m : maps) {
    if (m.width() != out.width() || m.height() != out.height() || m.channels() != 1) {
      throw StructureError("maps to average differ in shape");
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    double sum = 0.0;
    int count = 0;
    for (const Field& m : maps) {
      if (!m.present(i)) continue;
      sum += m.data()[i];
      ++count;
    }
    if (count > 0) out.set(out.coord(i), sum / count);
  }
  return out;
}

}  // namespace stdtex
