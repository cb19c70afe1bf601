#include <chrono>
#include <cmath>

#include "stdtex/discrepancy.hpp"
#include "stdtex/errors.hpp"

namespace stdtex {

StdMap std_map_reference(const Field& field, const ModelSet& models, const KernelSpec& kernel,
                         const StdOptions& options) {
  kernel.validate();
  if (options.n < 1) throw ParameterError("path count n must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  const Field source = kernel.kind == KernelKind::Gray && field.channels() == 3 ? field.to_gray() : field;

  StdMap out;
  out.map = Field(source.width(), source.height(), 1, ValueDomain{0.0, 1.0});
  if (options.directional) out.directional.assign(4, out.map);

  for (std::size_t i = 0; i < source.size(); ++i) {
    if (!source.present(i)) continue;
    const PixelCoord p = source.coord(i);
    std::array<std::optional<double>, 4> d2;
    for (Orientation o : kOrientations) {
      const auto& model = models[static_cast<std::size_t>(o)];
      const PathSet plus = sample_pathset(model, Side::Plus, source, p, options.n, options.seed);
      const PathSet minus = sample_pathset(model, Side::Minus, source, p, options.n, options.seed);
      const Mmd2Result r = mmd2(minus, plus, kernel);
      if (r.clamped) ++out.diagnostics.clamp_count;
      d2[static_cast<std::size_t>(o)] = r.value;
      if (options.directional && r.value) out.directional[static_cast<std::size_t>(o)].set(p, std::sqrt(*r.value));
    }
    if (auto v = combine_directions(d2)) out.map.set(p, *v);
  }
  out.diagnostics.undefined_pixels = out.map.size() - out.map.present_count();
  out.diagnostics.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace stdtex
