#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stdtex/field.hpp"
#include "stdtex/kernels.hpp"

namespace stdtex {

class ModelCache;

struct SweepCell {
  double lambda = 0.0;
  double kappa = 0.0;
  /// PSNR of the reconstruction from each run's own map.
  std::vector<double> runs;
  /// Arithmetic mean of `runs`.
  double mean = 0.0;
  /// PSNR of the reconstruction from the run-averaged map; the cell's score.
  double averaged = 0.0;
  bool ok = false;
  std::string error;
};

struct SweepGrid {
  std::vector<double> lambdas;
  std::vector<double> kappas;
  int runs = 0;
  int n = 0;
  std::uint64_t seed = 0;
  std::vector<SweepCell> cells;  // lambda-major

  const SweepCell& at(std::size_t li, std::size_t ki) const { return cells[li * kappas.size() + ki]; }
};

struct SweepOptions {
  int n = 100;
  int runs = 5;
  double fraction = 0.20;
  std::uint64_t seed = 0;
  KernelKind kernel = KernelKind::Gray;
  ModelCache* cache = nullptr;
  /// CSV file that receives every finished cell; existing complete cells in
  /// it are reused and a trailing partial cell is dropped.
  std::optional<std::filesystem::path> checkpoint;
  std::function<void(const SweepCell&)> on_cell;
};

/// lambda in {1, 1.5, ..., 7}.
std::vector<double> default_lambdas();
/// kappa = 2^(-k/2) for k = 16 .. 0, i.e. 1/256 .. 1.
std::vector<double> default_kappas();

SweepGrid run_sweep(const Field& field, std::span<const double> lambdas, std::span<const double> kappas,
                    const SweepOptions& options = {});

enum class SweepScore { AveragedMap, RunMean };

struct BestScales {
  double lambda = 0.0;
  double kappa = 0.0;
  double psnr = 0.0;
};

/// Highest-scoring successful cell; ties go to the smaller lambda, then the
/// smaller kappa.
BestScales best_scales(const SweepGrid& grid, SweepScore score = SweepScore::AveragedMap);

struct PhysicalScales {
  double lambda = 0.0;
  double kappa = 0.0;
};

/// Pixel and normalized scales expressed in data units.
PhysicalScales physical_units(double lambda_px, double kappa_norm, double units_per_px, const ValueDomain& domain);

std::string sweep_csv_header();
std::string sweep_csv_rows(const SweepCell& cell);
std::string best_scales_report(const BestScales& best);

}  // namespace stdtex
