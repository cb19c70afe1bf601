#include "stdtex/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "stdtex/discrepancy.hpp"
#include "stdtex/errors.hpp"
#include "stdtex/model_cache.hpp"
#include "stdtex/reconstruct.hpp"
#include "stdtex/rng.hpp"

namespace stdtex {

namespace {

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string cell_key(double lambda, double kappa) { return g6(lambda) + "," + g6(kappa); }

double arithmetic_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

double parse_number(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw FormatError("bad number '" + s + "' in sweep checkpoint", 0, 0);
  return v;
}

// Complete cells already in a checkpoint, keyed by their printed (lambda,
// kappa). The file is cut back to the last complete cell.
std::map<std::string, SweepCell> load_checkpoint(const std::filesystem::path& path, int runs) {
  std::map<std::string, SweepCell> done;
  std::ifstream in(path);
  if (!in) return done;
  std::string line;
  std::vector<std::string> kept;
  std::vector<std::string> pending;
  SweepCell cell;
  std::string key;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      if (line != sweep_csv_header()) throw FormatError("sweep checkpoint has an unexpected header", 1, 0);
      header = false;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string part; std::getline(ss, part, ',');) f.push_back(part);
    if (f.size() != 4) break;  // partial trailing write
    const std::string k = f[0] + "," + f[1];
    if (k != key) {
      pending.clear();
      cell = SweepCell{};
      key = k;
      cell.lambda = parse_number(f[0]);
      cell.kappa = parse_number(f[1]);
    }
    pending.push_back(line);
    if (f[2] == "mean") {
      cell.mean = parse_number(f[3]);
    } else if (f[2] == "avgmap" || f[2] == "failed") {
      cell.ok = f[2] == "avgmap";
      if (cell.ok) {
        cell.averaged = parse_number(f[3]);
        if (static_cast<int>(cell.runs.size()) != runs) {
          throw ParameterError("sweep checkpoint was written with a different run count");
        }
      } else {
        cell.error = "failed in a previous run";
      }
      done[key] = cell;
      kept.insert(kept.end(), pending.begin(), pending.end());
      pending.clear();
      key.clear();
    } else {
      cell.runs.push_back(parse_number(f[3]));
    }
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot rewrite sweep checkpoint '" + path.string() + "'");
  out << sweep_csv_header() << '\n';
  for (const auto& l : kept) out << l << '\n';
  return done;
}

double cell_psnr(const Field& original, const Field& map, double fraction) {
  return psnr(original, poisson_reconstruct(original, select_top(map, fraction)));
}

}  // namespace

std::vector<double> default_lambdas() {
  std::vector<double> v;
  for (int i = 0; i <= 12; ++i) v.push_back(1.0 + 0.5 * i);
  return v;
}

std::vector<double> default_kappas() {
  std::vector<double> v;
  for (int k = 16; k >= 0; --k) v.push_back(std::exp2(-0.5 * k));
  return v;
}

std::string sweep_csv_header() { return "lambda,kappa,run,psnr"; }

std::string sweep_csv_rows(const SweepCell& cell) {
  const std::string key = cell_key(cell.lambda, cell.kappa);
  std::string out;
  if (!cell.ok) return key + ",failed,nan\n";
  for (std::size_t r = 0; r < cell.runs.size(); ++r) out += key + "," + std::to_string(r) + "," + g6(cell.runs[r]) + "\n";
  out += key + ",mean," + g6(cell.mean) + "\n";
  out += key + ",avgmap," + g6(cell.averaged) + "\n";
  return out;
}

std::string best_scales_report(const BestScales& best) {
  return "lambda=" + g6(best.lambda) + "\nkappa=" + g6(best.kappa) + "\npsnr=" + g6(best.psnr) + "\n";
}

SweepGrid run_sweep(const Field& field, std::span<const double> lambdas, std::span<const double> kappas,
                    const SweepOptions& options) {
  if (lambdas.empty() || kappas.empty()) throw ParameterError("sweep grids must be nonempty");
  if (options.runs < 1) throw ParameterError("runs must be >= 1");
  if (options.n < 1) throw ParameterError("path count n must be >= 1");
  for (double k : kappas) KernelSpec{options.kernel, k}.validate();
  for (double l : lambdas) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ParameterError("lambda must be > 0");
  }
  const Field original = field.channels() == 3 ? field.to_gray() : field;

  SweepGrid grid;
  grid.lambdas.assign(lambdas.begin(), lambdas.end());
  grid.kappas.assign(kappas.begin(), kappas.end());
  grid.runs = options.runs;
  grid.n = options.n;
  grid.seed = options.seed;
  grid.cells.resize(lambdas.size() * kappas.size());

  std::map<std::string, SweepCell> done;
  std::ofstream csv;
  if (options.checkpoint) {
    done = load_checkpoint(*options.checkpoint, options.runs);
    const bool fresh = !std::filesystem::exists(*options.checkpoint);
    csv.open(*options.checkpoint, std::ios::app);
    if (!csv) throw IoError("cannot open sweep output '" + options.checkpoint->string() + "'");
    if (fresh) csv << sweep_csv_header() << '\n' << std::flush;
  }

  ModelCache local;
  ModelCache& cache = options.cache ? *options.cache : local;

  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    std::vector<std::size_t> todo;
    for (std::size_t ki = 0; ki < kappas.size(); ++ki) {
      SweepCell& cell = grid.cells[li * kappas.size() + ki];
      if (auto it = done.find(cell_key(lambdas[li], kappas[ki])); it != done.end()) {
        cell = it->second;
        cell.lambda = lambdas[li];
        cell.kappa = kappas[ki];
      } else {
        cell.lambda = lambdas[li];
        cell.kappa = kappas[ki];
        todo.push_back(ki);
      }
    }
    if (todo.empty()) continue;

    std::vector<double> ks;
    for (std::size_t ki : todo) ks.push_back(kappas[ki]);
    std::vector<std::vector<Field>> maps(todo.size());
    std::vector<std::string> errors(todo.size());
    try {
      const auto models = cache.get(lambdas[li]);
      for (int r = 0; r < options.runs; ++r) {
        StdOptions so;
        so.n = options.n;
        so.seed = run_seed(options.seed, static_cast<std::uint32_t>(r));
        auto results = std_maps(field, *models, options.kernel, ks, so);
        for (std::size_t q = 0; q < todo.size(); ++q) {
          SweepCell& cell = grid.cells[li * kappas.size() + todo[q]];
          if (!errors[q].empty()) continue;
          try {
            cell.runs.push_back(cell_psnr(original, results[q].map, options.fraction));
            maps[q].push_back(std::move(results[q].map));
          } catch (const Error& e) {
            errors[q] = e.what();
          }
        }
      }
    } catch (const Error& e) {
      for (auto& err : errors) {
        if (err.empty()) err = e.what();
      }
    }

    for (std::size_t q = 0; q < todo.size(); ++q) {
      SweepCell& cell = grid.cells[li * kappas.size() + todo[q]];
      if (errors[q].empty()) {
        try {
          cell.mean = arithmetic_mean(cell.runs);
          cell.averaged = cell_psnr(original, average_maps(maps[q]), options.fraction);
          cell.ok = true;
        } catch (const Error& e) {
          errors[q] = e.what();
        }
      }
      if (!errors[q].empty()) {
        cell.ok = false;
        cell.error = errors[q];
        cell.runs.clear();
      }
      if (csv.is_open()) csv << sweep_csv_rows(cell) << std::flush;
      if (options.on_cell) options.on_cell(cell);
    }
  }
  return grid;
}

BestScales best_scales(const SweepGrid& grid, SweepScore score) {
  const SweepCell* best = nullptr;
  const auto value = [score](const SweepCell& c) { return score == SweepScore::AveragedMap ? c.averaged : c.mean; };
  for (const SweepCell& c : grid.cells) {
    if (!c.ok || std::isnan(value(c))) continue;
    if (!best || value(c) > value(*best) ||
        (value(c) == value(*best) &&
         (c.lambda < best->lambda || (c.lambda == best->lambda && c.kappa < best->kappa)))) {
      best = &c;
    }
  }
  if (!best) throw ParameterError("no successful sweep cell");
  return {best->lambda, best->kappa, value(*best)};
}

PhysicalScales physical_units(double lambda_px, double kappa_norm, double units_per_px, const ValueDomain& domain) {
  if (!(units_per_px > 0.0)) throw ParameterError("units per pixel must be > 0");
  if (!(domain.width() > 0.0)) throw ParameterError("value domain must have positive width");
  return {lambda_px * units_per_px, kappa_norm * domain.width()};
}

}  // namespace stdtex
