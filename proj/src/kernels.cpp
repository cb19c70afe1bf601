#include "stdtex/kernels.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "stdtex/errors.hpp"

namespace stdtex {

namespace {

// sRGB primaries to XYZ, D65.
constexpr double kM[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                             {0.2126729, 0.7151522, 0.0721750},
                             {0.0193339, 0.1191920, 0.9503041}};

// White point taken as the image of (1,1,1) so that white maps to a = b = 0.
constexpr double kWhiteX = kM[0][0] + kM[0][1] + kM[0][2];
constexpr double kWhiteY = kM[1][0] + kM[1][1] + kM[1][2];
constexpr double kWhiteZ = kM[2][0] + kM[2][1] + kM[2][2];

double lab_f(double t) noexcept {
  constexpr double d = 6.0 / 29.0;
  if (t > d * d * d) return std::cbrt(t);
  return t / (3.0 * d * d) + 4.0 / 29.0;
}

constexpr double deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }
constexpr double rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }

template <typename T, typename Msd>
std::optional<double> sequence_kernel(std::span<const std::optional<T>> s,
                                      std::span<const std::optional<T>> t, double kappa,
                                      Msd&& squared) {
  if (s.size() != t.size()) throw StructureError("sequence kernel: length mismatch");
  double sum = 0.0;
  std::size_t common = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s[i] || !t[i]) continue;
    sum += squared(*s[i], *t[i]);
    ++common;
  }
  if (common == 0) return std::nullopt;
  return similarity(sum / static_cast<double>(common), kappa * kappa);
}

}  // namespace

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "gray") return KernelKind::Gray;
  if (name == "lab") return KernelKind::Lab;
  if (name == "de2000") return KernelKind::DE2000;
  throw ParameterError("unknown kernel kind '" + std::string(name) + "'");
}

std::string_view to_string(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::Gray: return "gray";
    case KernelKind::Lab: return "lab";
    case KernelKind::DE2000: return "de2000";
  }
  return "?";
}

void KernelSpec::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw ParameterError("kappa must be a positive finite value");
  }
}

double srgb_to_linear(double c) noexcept {
  if (c <= 0.04045) return c / 12.92;
  return std::pow((c + 0.055) / 1.055, 2.4);
}

double luminance(const Rgb& v) noexcept {
  return kM[1][0] * srgb_to_linear(v.r) + kM[1][1] * srgb_to_linear(v.g) +
         kM[1][2] * srgb_to_linear(v.b);
}

Lab rgb_to_lab(const Rgb& v) noexcept {
  const double r = srgb_to_linear(v.r), g = srgb_to_linear(v.g), b = srgb_to_linear(v.b);
  const double x = kM[0][0] * r + kM[0][1] * g + kM[0][2] * b;
  const double y = kM[1][0] * r + kM[1][1] * g + kM[1][2] * b;
  const double z = kM[2][0] * r + kM[2][1] * g + kM[2][2] * b;
  const double fx = lab_f(x / kWhiteX), fy = lab_f(y / kWhiteY), fz = lab_f(z / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double ciede2000(const Lab& x, const Lab& y) noexcept {
  constexpr double pow25_7 = 6103515625.0;  // 25^7
  const double c1 = std::hypot(x.a, x.b);
  const double c2 = std::hypot(y.a, y.b);
  const double cbar7 = std::pow(0.5 * (c1 + c2), 7.0);
  const double g = 0.5 * (1.0 - std::sqrt(cbar7 / (cbar7 + pow25_7)));
  const double a1 = (1.0 + g) * x.a;
  const double a2 = (1.0 + g) * y.a;
  const double cp1 = std::hypot(a1, x.b);
  const double cp2 = std::hypot(a2, y.b);

  auto hue = [](double b, double a) {
    if (a == 0.0 && b == 0.0) return 0.0;
    double h = deg(std::atan2(b, a));
    return h < 0.0 ? h + 360.0 : h;
  };
  const double hp1 = hue(x.b, a1);
  const double hp2 = hue(y.b, a2);

  const double dl = y.L - x.L;
  const double dc = cp2 - cp1;
  const double cprod = cp1 * cp2;
  double dh = 0.0;
  if (cprod != 0.0) {
    dh = hp2 - hp1;
    if (dh > 180.0) dh -= 360.0;
    else if (dh < -180.0) dh += 360.0;
  }
  const double dH = 2.0 * std::sqrt(cprod) * std::sin(rad(dh) / 2.0);

  const double lbar = 0.5 * (x.L + y.L);
  const double cbarp = 0.5 * (cp1 + cp2);
  double hbar = hp1 + hp2;
  if (cprod != 0.0) {
    if (std::abs(hp1 - hp2) <= 180.0) hbar *= 0.5;
    else if (hbar < 360.0) hbar = 0.5 * (hbar + 360.0);
    else hbar = 0.5 * (hbar - 360.0);
  }

  const double t = 1.0 - 0.17 * std::cos(rad(hbar - 30.0)) + 0.24 * std::cos(rad(2.0 * hbar)) +
                   0.32 * std::cos(rad(3.0 * hbar + 6.0)) - 0.20 * std::cos(rad(4.0 * hbar - 63.0));
  const double dtheta = 30.0 * std::exp(-std::pow((hbar - 275.0) / 25.0, 2.0));
  const double cbarp7 = std::pow(cbarp, 7.0);
  const double rc = 2.0 * std::sqrt(cbarp7 / (cbarp7 + pow25_7));
  const double l50 = (lbar - 50.0) * (lbar - 50.0);
  const double sl = 1.0 + 0.015 * l50 / std::sqrt(20.0 + l50);
  const double sc = 1.0 + 0.045 * cbarp;
  const double sh = 1.0 + 0.015 * cbarp * t;
  const double rt = -std::sin(rad(2.0 * dtheta)) * rc;

  const double tl = dl / sl, tc = dc / sc, th = dH / sh;
  return std::sqrt(tl * tl + tc * tc + th * th + rt * tc * th);
}

double delta1(const Rgb& v, const Rgb& w) noexcept {
  return std::sqrt(squared_delta(rgb_to_lab(v), rgb_to_lab(w), ColorDelta::Lab));
}

double delta2(const Rgb& v, const Rgb& w) noexcept {
  return ciede2000(rgb_to_lab(v), rgb_to_lab(w)) / 100.0;
}

std::optional<double> k_scalar(std::span<const std::optional<double>> s,
                               std::span<const std::optional<double>> t, double kappa) {
  return sequence_kernel(s, t, kappa, [](double a, double b) { return (a - b) * (a - b); });
}

std::optional<double> k_color(std::span<const std::optional<Rgb>> s,
                              std::span<const std::optional<Rgb>> t, double kappa,
                              ColorDelta delta) {
  return sequence_kernel(s, t, kappa, [delta](const Rgb& a, const Rgb& b) {
    return squared_delta(rgb_to_lab(a), rgb_to_lab(b), delta);
  });
}

}  // namespace stdtex
