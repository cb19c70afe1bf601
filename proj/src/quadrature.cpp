#include "stdtex/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace stdtex::quad {

double gaussian_interval(double a, double b, double sigma) noexcept {
  if (!(b > a)) return 0.0;
  const double s = sigma * std::numbers::sqrt2;
  // Use erfc on the tail side to keep relative precision far from the mean.
  if (a >= 0.0) return 0.5 * (std::erfc(a / s) - std::erfc(b / s));
  if (b <= 0.0) return 0.5 * (std::erfc(-b / s) - std::erfc(-a / s));
  return 0.5 * (std::erf(b / s) - std::erf(a / s));
}

double half_plane_rect_mass(double x0, double x1, double y0, double y1, double nx, double ny,
                            double sigma, double tolerance, bool force_numeric) {
  // Integrate along the axis with the larger normal component in closed form.
  if (std::abs(ny) > std::abs(nx)) {
    return half_plane_rect_mass(y0, y1, x0, x1, ny, nx, sigma, tolerance, force_numeric);
  }
  if (nx == 0.0) return 0.0;
  // Constraint on x for fixed y: x >= c*y when nx > 0, x <= c*y when nx < 0.
  const double c = -ny / nx;
  const bool lower_bound = nx > 0.0;
  const auto inner = [&](double y) {
    const double cut = c * y;
    return lower_bound ? gaussian_interval(std::max(x0, cut), x1, sigma)
                       : gaussian_interval(x0, std::min(x1, cut), sigma);
  };

  if (ny == 0.0 && !force_numeric) return inner(0.0) * gaussian_interval(y0, y1, sigma);

  std::vector<double> knots{y0, y1};
  if (c != 0.0) {
    for (double xb : {x0, x1}) {
      const double yk = xb / c;
      if (yk > y0 && yk < y1) knots.push_back(yk);
    }
  }
  std::sort(knots.begin(), knots.end());

  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  const auto integrand = [&](double y) { return norm * std::exp(-0.5 * y * y / (sigma * sigma)) * inner(y); };
  using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;
  // Relative tolerances near machine epsilon cannot be met and would bisect to the depth limit.
  const double rel = std::max(tolerance * 1e-3, 64.0 * std::numeric_limits<double>::epsilon());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (!(knots[i + 1] > knots[i])) continue;
    double error = 0.0;
    total += Rule::integrate(integrand, knots[i], knots[i + 1], 15, rel, &error);
  }
  return total;
}

}  // namespace stdtex::quad
