#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stdtex/field.hpp"
#include "stdtex/neighborhood.hpp"

namespace stdtex {

/// Per-pixel retention flags, row-major.
using Mask = std::vector<std::uint8_t>;

/// Keeps the round(fraction * defined) pixels with the largest values; ties
/// go to the earlier pixel in row-major order.
Mask select_top(const Field& map, double fraction = 0.20);

struct SolverOptions {
  double tolerance = 1e-10;  // relative residual
  int max_iterations = 10000;
};

/// One weighted difference constraint v(b) - v(a) ~ target between 4-neighbors.
struct GradientTerm {
  std::size_t a = 0;
  std::size_t b = 0;
  double target = 0.0;
  double weight = 1.0;
};

/// Weighted least-squares fit of the gradient terms over the present pixels
/// of `original`. Each connected component is shifted to the mean of the
/// original over that component, then values are clamped to [0, 1].
Field solve_gradients(const Field& original, std::span<const GradientTerm> terms, const SolverOptions& options = {});

/// Reconstruction keeping the original gradient on pairs whose first pixel
/// (left or top) is retained, and zero gradient elsewhere.
Field poisson_reconstruct(const Field& original, const Mask& mask, const SolverOptions& options = {});

/// Decibels over the pixels valid in both images; +infinity when they agree.
double psnr(const Field& reference, const Field& test);

/// Reconstruction whose pair gradients are the signed directional
/// discrepancies (E/W maps for horizontal pairs, N/S maps for vertical pairs).
/// `directional` holds one d map per orientation.
Field texgrad_reconstruct(const Field& original, std::span<const Field> directional, const ModelSet& models,
                          const SolverOptions& options = {});

/// Sign of the difference between the weighted means of the half neighborhood
/// facing `toward` and the opposite one, at pixel `p` (0 when undefined).
int side_sign(const Field& field, PixelCoord p, const NeighborhoodModel& model, Side toward);

}  // namespace stdtex
