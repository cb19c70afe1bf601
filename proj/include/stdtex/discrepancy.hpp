#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stdtex/field.hpp"
#include "stdtex/kernels.hpp"
#include "stdtex/neighborhood.hpp"
#include "stdtex/walker.hpp"

namespace stdtex {

class ModelCache;

struct Mmd2Result {
  /// Squared discrepancy, clamped at 0; nullopt when a whole term had no
  /// valid kernel evaluation.
  std::optional<double> value;
  /// Unclamped estimate (NaN when undefined).
  double raw = 0.0;
  bool clamped = false;
};

/// Squared MMD between the two path sets. Kernel evaluations with no common
/// valid index are dropped and each of the three terms is averaged over its
/// remaining evaluations.
Mmd2Result mmd2(const PathSet& minus, const PathSet& plus, const KernelSpec& kernel);

struct PixelDiscrepancy {
  /// Squared directional discrepancies, indexed by Orientation.
  std::array<std::optional<double>, 4> d2;
  /// sqrt of the mean over the defined directions.
  std::optional<double> value;
  int clamps = 0;
};

std::optional<double> combine_directions(const std::array<std::optional<double>, 4>& d2) noexcept;

/// STD at one pixel, sampled with the same streams as the map computation.
PixelDiscrepancy std_at(const Field& field, PixelCoord center, const ModelSet& models, const KernelSpec& kernel,
                        int n, std::uint64_t seed);

struct Diagnostics {
  std::size_t clamp_count = 0;
  std::size_t undefined_pixels = 0;
  double wall_seconds = 0.0;

  std::string report() const;
};

/// An STD map in a scalar Field (identity domain; missing means undefined)
/// plus, on request, the per-orientation discrepancies d = sqrt(d^2).
struct StdMap {
  Field map;
  std::vector<Field> directional;  // empty, or 4 fields indexed by Orientation
  Diagnostics diagnostics;
};

struct StdOptions {
  int n = 500;
  std::uint64_t seed = 0;
  bool directional = false;
};

/// STD maps for several data scales sharing one set of paths. Parallel over
/// pixels; the result does not depend on the number of threads.
std::vector<StdMap> std_maps(const Field& field, const ModelSet& models, KernelKind kind,
                             std::span<const double> kappas, const StdOptions& options);

StdMap std_map(const Field& field, const ModelSet& models, const KernelSpec& kernel, const StdOptions& options);

/// Builds (or fetches from `cache`) the models for `lambda` first.
StdMap std_map(const Field& field, double lambda, const KernelSpec& kernel, const StdOptions& options,
               ModelCache* cache = nullptr);

/// Serial evaluation through mmd2 on materialized path sets. Slow; used to
/// check the optimized map.
StdMap std_map_reference(const Field& field, const ModelSet& models, const KernelSpec& kernel,
                         const StdOptions& options);

/// Pixelwise mean over the maps that define each pixel; undefined only where
/// no map has a value.
Field average_maps(std::span<const Field> maps);

}  // namespace stdtex
