#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace stdtex {

/// The four boundary orientations. The first label names the "+" side.
enum class Orientation : std::uint8_t { EW = 0, NS = 1, NESW = 2, NWSE = 3 };
inline constexpr std::array<Orientation, 4> kOrientations = {Orientation::EW, Orientation::NS,
                                                             Orientation::NESW, Orientation::NWSE};

enum class OrientationClass : std::uint8_t { Straight, Diagonal };
enum class Side : std::uint8_t { Plus = 0, Minus = 1 };

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Pixel offset relative to the analysed pixel, image coordinates (y down).
struct Offset {
  int dx = 0;
  int dy = 0;

  friend bool operator==(const Offset&, const Offset&) = default;
  friend auto operator<=>(const Offset&, const Offset&) = default;
};

std::string_view label(Orientation o) noexcept;
OrientationClass orientation_class(Orientation o) noexcept;
/// Unit normal of the boundary line, pointing into the "+" half-plane.
Vec2 boundary_normal(Orientation o) noexcept;

struct LimitOptions {
  /// States need an untruncated Gaussian pixel mass of at least this fraction.
  double mass_cutoff = 1e-6;
  double quadrature_tolerance = 1e-10;
};

/// States of one half-plane neighborhood with their limit probabilities.
struct LimitDistribution {
  std::vector<Offset> states;
  std::vector<double> prob;

  std::size_t size() const noexcept { return states.size(); }
};

/// Per-pixel mass of the half-plane Gaussian of width `lambda`, truncated
/// and renormalized. Throws ParameterError for lambda <= 0.
LimitDistribution limit_distribution(double lambda, Orientation o, Side side,
                                     const LimitOptions& options = {});

/// Outgoing transitions of one state: self first, then present 4-neighbors.
struct TransitionRow {
  std::array<int, 5> target{};
  std::array<double, 5> prob{};
  int count = 0;
};

struct TransitionTable {
  std::vector<TransitionRow> rows;
};

struct SolveOptions {
  /// Contract bound on the total squared residual.
  double tolerance = 1e-12;
  int max_iterations = 500;
};

struct SolveReport {
  double residual_sq = 0.0;
  int iterations = 0;
  bool clamp_active = false;
};

/// Transition probabilities whose stationary law is `limit`, found by damped
/// least squares from p_ini(a->b) = p(b) / sum of p over a's targets, with
/// box clamping to [0, 1] and exact row renormalization at the end.
/// Throws ConvergenceError when the residual stays above `tolerance`.
TransitionTable solve_transitions(const LimitDistribution& limit, const SolveOptions& options = {},
                                  SolveReport* report = nullptr);

/// Total squared residual of stationarity plus row-sum conditions.
double consistency_residual(const LimitDistribution& limit, const TransitionTable& table);

struct HalfNeighborhood {
  LimitDistribution limit;
  TransitionTable transitions;
};

/// Samples walks over one half neighborhood using uniforms supplied by the caller.
class ChainSampler {
 public:
  ChainSampler() = default;
  explicit ChainSampler(const HalfNeighborhood& half);

  std::size_t size() const noexcept { return offsets_.size(); }
  const Offset& offset(int state) const noexcept { return offsets_[static_cast<std::size_t>(state)]; }

  int start(double u) const noexcept;
  int step(int state, double u) const noexcept {
    const Row& r = rows_[static_cast<std::size_t>(state)];
    for (int t = 0; t + 1 < r.count; ++t) {
      if (u < r.cumulative[static_cast<std::size_t>(t)]) return r.target[static_cast<std::size_t>(t)];
    }
    return r.target[static_cast<std::size_t>(r.count - 1)];
  }

 private:
  struct Row {
    std::array<int, 5> target{};
    std::array<double, 5> cumulative{};
    int count = 0;
  };
  std::vector<Offset> offsets_;
  std::vector<double> start_cdf_;
  std::vector<Row> rows_;
};

struct CalibrationOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 0x57D0CA1Bull;
  int max_walk_length = 1 << 14;
};

struct Calibration {
  int walk_length = 1;
  double achieved_extent = 0.0;
  double standard_error = 0.0;
  /// Mean extent and its standard error for m = 1 .. size(), index m-1.
  std::vector<double> extent;
  std::vector<double> extent_se;
};

/// Monte-Carlo mean extent along `normal` for walks of 1..max_length pixels.
/// Walk w of every length uses the same random stream, so the estimates are
/// non-decreasing in the length.
Calibration estimate_extents(const HalfNeighborhood& half, Vec2 normal, int max_length,
                             std::size_t samples, std::uint64_t seed);

/// Smallest-error walk length for a target mean extent of `lambda` pixels.
Calibration calibrate_walk_length(const HalfNeighborhood& half, Vec2 normal, double lambda,
                                  const CalibrationOptions& options = {});

/// Both halves of one orientation with the calibrated walk length.
struct NeighborhoodModel {
  double lambda = 0.0;
  Orientation orientation = Orientation::EW;
  std::array<HalfNeighborhood, 2> halves;  // indexed by Side
  int walk_length = 1;
  double achieved_extent = 0.0;
  double extent_se = 0.0;
  double residual_sq = 0.0;
  bool clamp_active = false;

  const HalfNeighborhood& half(Side s) const noexcept { return halves[static_cast<std::size_t>(s)]; }
};

/// Models for all four orientations, indexed by Orientation.
using ModelSet = std::array<NeighborhoodModel, 4>;

struct BuildOptions {
  LimitOptions limit;
  SolveOptions solve;
  CalibrationOptions calibration;
};

/// Builds the E/W (Straight) or NE/SW (Diagonal) model: solves the "+" half,
/// mirrors it through the center for the "-" half, then calibrates m.
NeighborhoodModel build_model(double lambda, OrientationClass cls, const BuildOptions& options = {});

/// Point reflection through the analysed pixel: maps the "+" half onto "-".
HalfNeighborhood reflect(const HalfNeighborhood& half);
/// Quarter turn mapping E onto N and NE onto NW; transition tables are kept.
HalfNeighborhood rotate_quarter(const HalfNeighborhood& half);

/// All four orientation models from one straight and one diagonal model.
ModelSet derive_rotations(const NeighborhoodModel& straight, const NeighborhoodModel& diagonal);

ModelSet build_model_set(double lambda, const BuildOptions& options = {});

}  // namespace stdtex
