#pragma once

#include <optional>
#include <span>
#include <string_view>

namespace stdtex {

enum class KernelKind { Gray, Lab, DE2000 };

KernelKind parse_kernel_kind(std::string_view name);
std::string_view to_string(KernelKind kind) noexcept;

/// Sequence kernel family plus its data scale, in normalized value units.
struct KernelSpec {
  KernelKind kind = KernelKind::Gray;
  double kappa = 0.25;

  void validate() const;
  bool is_color() const noexcept { return kind != KernelKind::Gray; }
};

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

/// CIE Lab, D65 white point.
struct Lab {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;
};

/// IEC 61966-2-1 sRGB decoding.
double srgb_to_linear(double c) noexcept;
/// Y of XYZ (D65) for an sRGB triplet in [0,1].
double luminance(const Rgb& v) noexcept;
Lab rgb_to_lab(const Rgb& v) noexcept;

/// CIEDE2000 with unit weighting factors, on the native [0, 100] scale.
double ciede2000(const Lab& x, const Lab& y) noexcept;

/// Euclidean Lab distance / 100.
double delta1(const Rgb& v, const Rgb& w) noexcept;
/// CIEDE2000 / 100.
double delta2(const Rgb& v, const Rgb& w) noexcept;

enum class ColorDelta { Lab, DE2000 };

/// Squared per-element difference, already divided by 100^2 for colors.
inline double squared_delta(const Lab& x, const Lab& y, ColorDelta delta) noexcept {
  if (delta == ColorDelta::Lab) {
    const double dl = x.L - y.L, da = x.a - y.a, db = x.b - y.b;
    return (dl * dl + da * da + db * db) * 1e-4;
  }
  const double e = ciede2000(x, y);
  return e * e * 1e-4;
}

/// Inverse quadratic similarity for a mean squared difference `msd`:
/// 1 / (1 + msd / kappa^2), written with a single division so that
/// msd == kappa^2 yields exactly 0.5.
inline double similarity(double msd, double kappa_sq) noexcept {
  return kappa_sq / (kappa_sq + msd);
}

/// Scalar sequence kernel averaged over the common valid entries.
/// Returns nullopt when the sequences share no valid index.
std::optional<double> k_scalar(std::span<const std::optional<double>> s,
                               std::span<const std::optional<double>> t, double kappa);

/// Color sequence kernel using delta1 (Lab) or delta2 (CIEDE2000).
std::optional<double> k_color(std::span<const std::optional<Rgb>> s,
                              std::span<const std::optional<Rgb>> t, double kappa,
                              ColorDelta delta);

}  // namespace stdtex
