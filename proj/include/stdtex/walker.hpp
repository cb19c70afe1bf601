#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "stdtex/field.hpp"
#include "stdtex/neighborhood.hpp"
#include "stdtex/rng.hpp"

namespace stdtex {

/// n value sequences of length m drawn on one side of a pixel.
///
/// `values` is row-major (path, step, channel); `weight` is 1 where the visited
/// pixel holds data and 0 where it is missing or outside the image (missing
/// entries carry value 0).
struct PathSet {
  Side side = Side::Plus;
  Orientation orientation = Orientation::EW;
  int n = 0;
  int m = 0;
  int channels = 1;
  std::vector<double> values;
  std::vector<double> weight;
  bool all_valid = true;

  std::optional<double> value(int path, int step, int channel = 0) const noexcept {
    const auto i = static_cast<std::size_t>(path) * static_cast<std::size_t>(m) + static_cast<std::size_t>(step);
    if (weight[i] == 0.0) return std::nullopt;
    return values[i * static_cast<std::size_t>(channels) + static_cast<std::size_t>(channel)];
  }

  void resize(int paths, int length, int chans);
  friend bool operator==(const PathSet&, const PathSet&) = default;
};

/// Random stream of path `path` for (seed, pixel, orientation, side).
inline CounterStream path_stream(std::uint64_t seed, std::size_t pixel, Orientation o, Side side,
                                 std::uint32_t path) noexcept {
  const std::uint32_t lane = 0x5A7B0000u | (static_cast<std::uint32_t>(o) << 1) | static_cast<std::uint32_t>(side);
  return CounterStream(seed, path, static_cast<std::uint32_t>(pixel), lane);
}

/// One walk of `m` pixels: start from the limit law, then m-1 transitions.
std::vector<std::optional<double>> sample_path(const HalfNeighborhood& half, int m, const Field& field,
                                               PixelCoord center, CounterStream& stream);

/// Samplers for all eight half neighborhoods of a model set.
class WalkerSet {
 public:
  explicit WalkerSet(const ModelSet& models);

  const ChainSampler& sampler(Orientation o, Side s) const noexcept {
    return samplers_[static_cast<std::size_t>(o)][static_cast<std::size_t>(s)];
  }
  int walk_length(Orientation o) const noexcept { return lengths_[static_cast<std::size_t>(o)]; }

 private:
  std::array<std::array<ChainSampler, 2>, 4> samplers_;
  std::array<int, 4> lengths_{};
};

/// Fills `out` with n paths around `center`; the streams depend only on
/// (seed, pixel index of center, orientation, side, path index).
void sample_pathset(const WalkerSet& walkers, Orientation o, Side side, const Field& field,
                    PixelCoord center, int n, std::uint64_t seed, PathSet& out);

PathSet sample_pathset(const NeighborhoodModel& model, Side side, const Field& field, PixelCoord center,
                       int n, std::uint64_t seed);

}  // namespace stdtex
