#include <doctest.h>

#include <cmath>
#include <initializer_list>
#include <numbers>
#include <utility>

#include "stdtex/quadrature.hpp"

namespace quad = stdtex::quad;

namespace {

// Midpoint rule on a 64x64 grid of subcells with the half-plane as an
// indicator on subcell centers.
double subcell_mass(double x0, double x1, double y0, double y1, double nx, double ny, double sigma) {
  constexpr int k = 64;
  const double hx = (x1 - x0) / k, hy = (y1 - y0) / k;
  double s = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double x = x0 + (i + 0.5) * hx, y = y0 + (j + 0.5) * hy;
      const double side = nx * x + ny * y;
      if (side < -1e-12) continue;
      const double w = side <= 1e-12 ? 0.5 : 1.0;  // centers on the cut count half
      s += w * std::exp(-(x * x + y * y) / (2 * sigma * sigma));
    }
  }
  return s * hx * hy / (2 * std::numbers::pi * sigma * sigma);
}

}  // namespace

TEST_CASE("gaussian interval matches erf") {
  for (double sigma : {0.3, 1.0, 4.5}) {
    for (double a : {-3.0, -0.5, 0.0, 1.25}) {
      const double b = a + 0.75;
      const double expected = 0.5 * (std::erf(b / (sigma * std::sqrt(2.0))) - std::erf(a / (sigma * std::sqrt(2.0))));
      CHECK(quad::gaussian_interval(a, b, sigma) == doctest::Approx(expected).epsilon(1e-13));
    }
  }
  CHECK(quad::gaussian_interval(1.0, 1.0, 1.0) == 0.0);
  CHECK(quad::gaussian_interval(2.0, 1.0, 1.0) == 0.0);
}

TEST_CASE("half-plane pixel masses agree with a subcell oracle") {
  const double h = std::numbers::sqrt2 / 2;
  const double normals[][2] = {{1, 0}, {0, -1}, {h, -h}, {-h, -h}, {0.6, 0.8}};
  for (double sigma : {0.7, 1.0, 3.0}) {
    for (const auto& n : normals) {
      for (int dx = -2; dx <= 2; ++dx) {
        for (int dy = -2; dy <= 2; ++dy) {
          const double x0 = dx - 0.5, y0 = dy - 0.5;
          const double got = quad::half_plane_rect_mass(x0, x0 + 1, y0, y0 + 1, n[0], n[1], sigma, 1e-12);
          const double oracle = subcell_mass(x0, x0 + 1, y0, y0 + 1, n[0], n[1], sigma);
          const double full = quad::gaussian_interval(x0, x0 + 1, sigma) * quad::gaussian_interval(y0, y0 + 1, sigma);
          // Indicator discretization along the cut line dominates the oracle error.
          CHECK(std::abs(got - oracle) <= 1.5e-2 * full + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("closed form and adaptive integration agree on straight normals") {
  for (double sigma : {0.5, 1.0, 2.5}) {
    for (int dx = -3; dx <= 3; ++dx) {
      for (int dy = -3; dy <= 3; ++dy) {
        const double x0 = dx - 0.5, y0 = dy - 0.5;
        for (auto [nx, ny] : {std::pair{1.0, 0.0}, std::pair{0.0, -1.0}, std::pair{-1.0, 0.0}}) {
          const double a = quad::half_plane_rect_mass(x0, x0 + 1, y0, y0 + 1, nx, ny, sigma, 1e-12, false);
          const double b = quad::half_plane_rect_mass(x0, x0 + 1, y0, y0 + 1, nx, ny, sigma, 1e-12, true);
          CHECK(std::abs(a - b) <= 1e-11);
        }
      }
    }
  }
}

TEST_CASE("complementary half-planes partition the pixel mass") {
  const double h = std::numbers::sqrt2 / 2;
  for (int dx = -2; dx <= 2; ++dx) {
    for (int dy = -2; dy <= 2; ++dy) {
      const double x0 = dx - 0.5, y0 = dy - 0.5;
      const double plus = quad::half_plane_rect_mass(x0, x0 + 1, y0, y0 + 1, h, -h, 1.3, 1e-12);
      const double minus = quad::half_plane_rect_mass(x0, x0 + 1, y0, y0 + 1, -h, h, 1.3, 1e-12);
      const double full = quad::gaussian_interval(x0, x0 + 1, 1.3) * quad::gaussian_interval(y0, y0 + 1, 1.3);
      CHECK(plus + minus == doctest::Approx(full).epsilon(1e-10));
      CHECK(plus >= 0.0);
    }
  }
}
