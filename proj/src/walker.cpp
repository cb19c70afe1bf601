#include "stdtex/walker.hpp"

#include <algorithm>

#include "stdtex/errors.hpp"

namespace stdtex {

void PathSet::resize(int paths, int length, int chans) {
  n = paths;
  m = length;
  channels = chans;
  const auto cells = static_cast<std::size_t>(paths) * static_cast<std::size_t>(length);
  values.assign(cells * static_cast<std::size_t>(chans), 0.0);
  weight.assign(cells, 0.0);
  all_valid = true;
}

std::vector<std::optional<double>> sample_path(const HalfNeighborhood& half, int m, const Field& field,
                                               PixelCoord center, CounterStream& stream) {
  if (m < 1) throw ParameterError("walk length must be >= 1");
  const ChainSampler sampler(half);
  std::vector<std::optional<double>> seq;
  seq.reserve(static_cast<std::size_t>(m));
  int state = sampler.start(stream.uniform());
  for (int i = 0; i < m; ++i) {
    if (i > 0) state = sampler.step(state, stream.uniform());
    const Offset& o = sampler.offset(state);
    seq.push_back(field.get({center.x + o.dx, center.y + o.dy}));
  }
  return seq;
}

WalkerSet::WalkerSet(const ModelSet& models) {
  for (Orientation o : kOrientations) {
    const auto& model = models[static_cast<std::size_t>(o)];
    if (model.orientation != o) throw ParameterError("model set is not indexed by orientation");
    for (Side s : {Side::Plus, Side::Minus}) {
      samplers_[static_cast<std::size_t>(o)][static_cast<std::size_t>(s)] = ChainSampler(model.half(s));
    }
    lengths_[static_cast<std::size_t>(o)] = model.walk_length;
  }
}

namespace {

void fill_pathset(const ChainSampler& sampler, int m, Orientation o, Side side, const Field& field,
                  PixelCoord center, int n, std::uint64_t seed, PathSet& out) {
  if (n < 1) throw ParameterError("path count n must be >= 1");
  const int ch = field.channels();
  if (out.n != n || out.m != m || out.channels != ch) out.resize(n, m, ch);
  out.side = side;
  out.orientation = o;
  out.all_valid = true;
  const std::size_t pixel = field.in_bounds(center) ? field.index(center) : 0;

  double* values = out.values.data();
  double* weight = out.weight.data();
  for (int j = 0; j < n; ++j) {
    CounterStream rng = path_stream(seed, pixel, o, side, static_cast<std::uint32_t>(j));
    int state = sampler.start(rng.uniform());
    for (int i = 0; i < m; ++i) {
      if (i > 0) state = sampler.step(state, rng.uniform());
      const Offset& off = sampler.offset(state);
      const auto v = field.channels_at({center.x + off.dx, center.y + off.dy});
      if (v.empty()) {
        std::fill_n(values, ch, 0.0);
        *weight = 0.0;
        out.all_valid = false;
      } else {
        std::copy(v.begin(), v.end(), values);
        *weight = 1.0;
      }
      values += ch;
      ++weight;
    }
  }
}

}  // namespace

void sample_pathset(const WalkerSet& walkers, Orientation o, Side side, const Field& field,
                    PixelCoord center, int n, std::uint64_t seed, PathSet& out) {
  fill_pathset(walkers.sampler(o, side), walkers.walk_length(o), o, side, field, center, n, seed, out);
}

PathSet sample_pathset(const NeighborhoodModel& model, Side side, const Field& field, PixelCoord center,
                       int n, std::uint64_t seed) {
  PathSet out;
  fill_pathset(ChainSampler(model.half(side)), model.walk_length, model.orientation, side, field, center, n,
               seed, out);
  return out;
}

}  // namespace stdtex
