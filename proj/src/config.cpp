#include "stdtex/config.hpp"

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "stdtex/discrepancy.hpp"
#include "stdtex/errors.hpp"
#include "stdtex/model_cache.hpp"
#include "stdtex/reconstruct.hpp"
#include "stdtex/rng.hpp"
#include "stdtex/sweep.hpp"

namespace stdtex {

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + g17(v[i]);
  return s;
}

std::string_view format_name(FileFormat f) noexcept {
  switch (f) {
    case FileFormat::Pgm: return "pgm";
    case FileFormat::Png: return "png";
    case FileFormat::Csv: return "csv";
  }
  return "?";
}

double parse_double(std::string_view s) {
  const std::string str(s);
  char* end = nullptr;
  const double v = std::strtod(str.c_str(), &end);
  if (str.empty() || *end != '\0') throw ParameterError("'" + str + "' is not a number");
  return v;
}

long long parse_integer(std::string_view s) {
  const std::string str(s);
  char* end = nullptr;
  const long long v = std::strtoll(str.c_str(), &end, 10);
  if (str.empty() || *end != '\0') throw ParameterError("'" + str + "' is not an integer");
  return v;
}

std::uint64_t parse_seed(const std::string& s) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 0);
  if (s.empty() || s[0] == '-' || *end != '\0') throw ParameterError("'" + s + "' is not a seed");
  return v;
}

std::string psnr_text(double db) { return std::isinf(db) ? "inf" : g17(db); }

Field load_input(const RunConfig& c) {
  LoadOptions options;
  options.format = c.format;
  options.domain = c.domain;
  options.channels = c.kernel == KernelKind::Gray ? ChannelMode::Gray : ChannelMode::Rgb;
  options.missing_token = c.missing_token;
  return load(c.input, options);
}

std::unique_ptr<ModelCache> make_cache(const RunConfig& c) {
  std::optional<std::filesystem::path> dir;
  if (!c.cache_dir.empty()) dir = c.cache_dir;
  return std::make_unique<ModelCache>(BuildOptions{}, dir);
}

void save_pair(const Field& map, const std::string& stem, std::ostream& log, const char* key) {
  save_map(map, stem + ".pgm", MapFormat::Pgm16);
  save_map(map, stem + ".csv", MapFormat::Csv);
  log << key << "_pgm=" << stem << ".pgm\n" << key << "_csv=" << stem << ".csv\n";
}

void require_single_scales(const RunConfig& c) {
  if (c.lambdas.size() != 1 || c.kappas.size() != 1) {
    throw ParameterError(std::string(to_string(c.command)) + " takes a single lambda and a single kappa");
  }
}

// STD (and optionally directional) maps averaged over the configured runs.
StdMap averaged_map(const RunConfig& c, const Field& field, const ModelSet& models, bool directional) {
  const KernelSpec kernel{c.kernel, c.kappas.front()};
  std::vector<Field> maps;
  std::vector<std::vector<Field>> dirs(4);
  StdMap out;
  for (int r = 0; r < c.runs; ++r) {
    StdOptions so;
    so.n = c.n;
    so.seed = run_seed(c.seed, static_cast<std::uint32_t>(r));
    so.directional = directional;
    StdMap m = std_map(field, models, kernel, so);
    out.diagnostics.clamp_count += m.diagnostics.clamp_count;
    out.diagnostics.wall_seconds += m.diagnostics.wall_seconds;
    maps.push_back(std::move(m.map));
    for (std::size_t o = 0; o < m.directional.size(); ++o) dirs[o].push_back(std::move(m.directional[o]));
  }
  out.map = average_maps(maps);
  if (directional) {
    for (auto& d : dirs) out.directional.push_back(average_maps(d));
  }
  out.diagnostics.undefined_pixels = out.map.size() - out.map.present_count();
  return out;
}

void write_diagnostics(const RunConfig& c, const Diagnostics& d, std::ostream& log) {
  const std::string path = c.out_prefix + "diagnostics.txt";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << d.report();
  log << d.report() << "diagnostics=" << path << '\n';
}

void cmd_std(const RunConfig& c, std::ostream& log) {
  require_single_scales(c);
  const Field field = load_input(c);
  auto cache = make_cache(c);
  const auto models = cache->get(c.lambdas.front());
  const StdMap m = averaged_map(c, field, *models, false);
  save_pair(m.map, c.out_prefix + "std", log, "map");
  write_diagnostics(c, m.diagnostics, log);
}

void cmd_sweep(const RunConfig& c, std::ostream& log) {
  const Field field = load_input(c);
  auto cache = make_cache(c);
  SweepOptions so;
  so.n = c.n;
  so.runs = c.runs;
  so.fraction = c.fraction;
  so.seed = c.seed;
  so.kernel = c.kernel;
  so.cache = cache.get();
  so.checkpoint = c.out_prefix + "sweep.csv";
  so.on_cell = [&log](const SweepCell& cell) {
    log << "cell lambda=" << g17(cell.lambda) << " kappa=" << g17(cell.kappa);
    if (cell.ok) {
      log << " psnr=" << psnr_text(cell.averaged) << " run_mean=" << psnr_text(cell.mean) << '\n';
    } else {
      log << " failed: " << cell.error << '\n';
    }
    log.flush();
  };
  const SweepGrid grid = run_sweep(field, c.lambdas, c.kappas, so);
  const BestScales best = best_scales(grid);
  const std::string path = c.out_prefix + "best.txt";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << best_scales_report(best);
  log << "sweep_csv=" << *so.checkpoint << '\n' << "best=" << path << '\n' << best_scales_report(best);
}

void cmd_reconstruct(const RunConfig& c, std::ostream& log, bool texgrad) {
  require_single_scales(c);
  const Field field = load_input(c);
  const Field original = field.channels() == 3 ? field.to_gray() : field;
  auto cache = make_cache(c);
  const auto models = cache->get(c.lambdas.front());
  const StdMap m = averaged_map(c, field, *models, texgrad);
  const Field rec = texgrad ? texgrad_reconstruct(original, m.directional, *models)
                            : poisson_reconstruct(original, select_top(m.map, c.fraction));
  save_pair(rec, c.out_prefix + (texgrad ? "texgrad" : "reconstruct"), log, "image");
  write_diagnostics(c, m.diagnostics, log);
  log << "psnr=" << psnr_text(psnr(original, rec)) << '\n';
}

}  // namespace

Command parse_command(std::string_view name) {
  if (name == "std") return Command::Std;
  if (name == "sweep") return Command::Sweep;
  if (name == "reconstruct") return Command::Reconstruct;
  if (name == "texgrad") return Command::Texgrad;
  throw ParameterError("unknown subcommand '" + std::string(name) + "'");
}

std::string_view to_string(Command c) noexcept {
  switch (c) {
    case Command::Std: return "std";
    case Command::Sweep: return "sweep";
    case Command::Reconstruct: return "reconstruct";
    case Command::Texgrad: return "texgrad";
  }
  return "?";
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? text.size() : comma;
    out.push_back(parse_double(text.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

ValueDomain parse_domain(std::string_view text) {
  const auto v = parse_number_list(text);
  if (v.size() != 2 || !(v[1] > v[0])) throw ParameterError("domain must be 'lo,hi' with lo < hi");
  return {v[0], v[1]};
}

void RunConfig::validate() const {
  if (input.empty()) throw ParameterError("an input file is required");
  if (lambdas.empty() || kappas.empty()) throw ParameterError("lambda and kappa lists must be nonempty");
  for (double l : lambdas) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ParameterError("lambda must be > 0");
  }
  for (double k : kappas) KernelSpec{kernel, k}.validate();
  if (n < 1) throw ParameterError("n must be >= 1");
  if (runs < 1) throw ParameterError("runs must be >= 1");
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ParameterError("fraction must lie in [0, 1]");
  if (threads < 0) throw ParameterError("threads must be >= 0");
  if (command != Command::Sweep && (lambdas.size() != 1 || kappas.size() != 1)) {
    throw ParameterError(std::string(to_string(command)) + " takes a single lambda and a single kappa");
  }
}

std::string to_echo(const RunConfig& c) {
  std::ostringstream s;
  s << "command=" << to_string(c.command) << '\n'
    << "input=" << c.input << '\n'
    << "format=" << format_name(c.format) << '\n'
    << "domain=" << (c.domain ? g17(c.domain->lo) + "," + g17(c.domain->hi) : std::string("auto")) << '\n'
    << "missing=" << c.missing_token << '\n'
    << "lambda=" << list(c.lambdas) << '\n'
    << "kappa=" << list(c.kappas) << '\n'
    << "n=" << c.n << '\n'
    << "runs=" << c.runs << '\n'
    << "seed=" << c.seed << '\n'
    << "fraction=" << g17(c.fraction) << '\n'
    << "kernel=" << to_string(c.kernel) << '\n'
    << "threads=" << c.threads << '\n'
    << "out_prefix=" << c.out_prefix << '\n'
    << "cache_dir=" << c.cache_dir << '\n';
  return s.str();
}

RunConfig parse_echo(std::string_view text) {
  RunConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParameterError("config line without '=': " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "command") c.command = parse_command(value);
    else if (key == "input") c.input = value;
    else if (key == "format") c.format = parse_file_format(value);
    else if (key == "domain") c.domain = value == "auto" ? std::nullopt : std::optional(parse_domain(value));
    else if (key == "missing") c.missing_token = value;
    else if (key == "lambda") c.lambdas = parse_number_list(value);
    else if (key == "kappa") c.kappas = parse_number_list(value);
    else if (key == "n") c.n = static_cast<int>(parse_integer(value));
    else if (key == "runs") c.runs = static_cast<int>(parse_integer(value));
    else if (key == "seed") c.seed = parse_seed(value);
    else if (key == "fraction") c.fraction = parse_double(value);
    else if (key == "kernel") c.kernel = parse_kernel_kind(value);
    else if (key == "threads") c.threads = static_cast<int>(parse_integer(value));
    else if (key == "out_prefix") c.out_prefix = value;
    else if (key == "cache_dir") c.cache_dir = value;
    else throw ParameterError("unknown config key '" + key + "'");
  }
  return c;
}

void run(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (config.threads > 0) omp_set_num_threads(config.threads);
  log << to_echo(config);
  log.flush();
  {
    const std::string path = config.out_prefix + "config.txt";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << to_echo(config);
  }
  switch (config.command) {
    case Command::Std: cmd_std(config, log); break;
    case Command::Sweep: cmd_sweep(config, log); break;
    case Command::Reconstruct: cmd_reconstruct(config, log, false); break;
    case Command::Texgrad: cmd_reconstruct(config, log, true); break;
  }
}

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ConvergenceError*>(&e)) return 4;
  if (dynamic_cast<const ParameterError*>(&e)) return 2;
  return 3;
}

}  // namespace stdtex
