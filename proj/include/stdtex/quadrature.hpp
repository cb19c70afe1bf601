#pragma once

namespace stdtex::quad {

/// Probability mass of N(0, sigma^2) on [a, b] (0 when b <= a).
double gaussian_interval(double a, double b, double sigma) noexcept;

/// Mass of the isotropic 2D Gaussian N(0, sigma^2 I) over the rectangle
/// [x0, x1] x [y0, y1] intersected with the half-plane nx*x + ny*y >= 0.
///
/// Integrates in closed form along one axis and adaptively (Gauss-Kronrod,
/// split at the kinks of the clipped interval) along the other. Straight
/// normals take the separable closed form unless `force_numeric` is set.
double half_plane_rect_mass(double x0, double x1, double y0, double y1, double nx, double ny,
                            double sigma, double tolerance, bool force_numeric = false);

}  // namespace stdtex::quad
