#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "stdtex/config.hpp"
#include "stdtex/errors.hpp"
#include "stdtex/sweep.hpp"

namespace {

struct Flags {
  std::string config_file;
  std::string input;
  std::string format;
  std::string domain;
  std::string missing;
  std::string lambda;
  std::string lambda_physical;
  double px_per_unit = 0.0;
  std::string kappa;
  std::string kappa_physical;
  int n = 0;
  int runs = 0;
  std::string seed;
  double fraction = -1.0;
  std::string kernel;
  int threads = -1;
  std::string out_prefix;
  std::string cache_dir;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_file, "key=value file as printed by a previous run");
  cmd->add_option("--input", f.input, "input raster (pgm, png or csv)");
  cmd->add_option("--format", f.format, "pgm|png|csv (default: from the file extension)");
  cmd->add_option("--domain", f.domain, "value domain lo,hi mapped onto [0,1]");
  cmd->add_option("--missing", f.missing, "csv token for missing cells (default NaN)");
  cmd->add_option("--lambda", f.lambda, "spatial scale(s) in pixels, comma separated");
  cmd->add_option("--lambda-physical", f.lambda_physical, "spatial scale(s) in physical length units");
  cmd->add_option("--px-per-unit", f.px_per_unit, "pixels per physical length unit");
  cmd->add_option("--kappa", f.kappa, "data scale(s) in normalized units, comma separated");
  cmd->add_option("--kappa-physical", f.kappa_physical, "data scale(s) in value units (needs --domain)");
  cmd->add_option("--n", f.n, "paths per half neighborhood");
  cmd->add_option("--runs", f.runs, "independent repetitions averaged together");
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--fraction", f.fraction, "retention fraction for reconstruction");
  cmd->add_option("--kernel", f.kernel, "gray|lab|de2000");
  cmd->add_option("--threads", f.threads, "worker threads (0: all)");
  cmd->add_option("--out-prefix", f.out_prefix, "prefix of every output file");
  cmd->add_option("--cache-dir", f.cache_dir, "directory for persisted neighborhood models");
}

stdtex::FileFormat format_from_path(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (ext == ".png") return stdtex::FileFormat::Png;
  if (ext == ".csv" || ext == ".txt") return stdtex::FileFormat::Csv;
  return stdtex::FileFormat::Pgm;
}

stdtex::RunConfig resolve(stdtex::Command command, const Flags& f) {
  using namespace stdtex;
  RunConfig c;
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) throw ParameterError("cannot read config '" + f.config_file + "'");
    std::ostringstream text;
    text << in.rdbuf();
    c = parse_echo(text.str());
    if (c.command != command) throw ParameterError("config file is for another subcommand");
  } else {
    c.command = command;
    if (command == Command::Sweep) {
      c.lambdas = default_lambdas();
      c.kappas = default_kappas();
      c.n = 100;
      c.runs = 5;
    }
  }
  if (!f.input.empty()) {
    c.input = f.input;
    if (f.format.empty() && f.config_file.empty()) c.format = format_from_path(f.input);
  }
  if (!f.format.empty()) c.format = parse_file_format(f.format);
  if (!f.domain.empty()) c.domain = parse_domain(f.domain);
  if (!f.missing.empty()) c.missing_token = f.missing;
  if (!f.lambda.empty() && !f.lambda_physical.empty()) {
    throw ParameterError("give either --lambda or --lambda-physical");
  }
  if (!f.lambda.empty()) c.lambdas = parse_number_list(f.lambda);
  if (!f.lambda_physical.empty()) {
    if (!(f.px_per_unit > 0.0)) throw ParameterError("--lambda-physical needs --px-per-unit > 0");
    c.lambdas.clear();
    for (double l : parse_number_list(f.lambda_physical)) c.lambdas.push_back(l * f.px_per_unit);
  }
  if (!f.kappa.empty() && !f.kappa_physical.empty()) {
    throw ParameterError("give either --kappa or --kappa-physical");
  }
  if (!f.kappa.empty()) c.kappas = parse_number_list(f.kappa);
  if (!f.kappa_physical.empty()) {
    if (!c.domain) throw ParameterError("--kappa-physical needs --domain");
    c.kappas.clear();
    for (double k : parse_number_list(f.kappa_physical)) c.kappas.push_back(k / c.domain->width());
  }
  if (f.n > 0) c.n = f.n;
  if (f.runs > 0) c.runs = f.runs;
  if (!f.seed.empty()) c.seed = parse_echo("seed=" + f.seed).seed;
  if (f.fraction >= 0.0) c.fraction = f.fraction;
  if (!f.kernel.empty()) c.kernel = parse_kernel_kind(f.kernel);
  if (f.threads >= 0) c.threads = f.threads;
  if (!f.out_prefix.empty()) c.out_prefix = f.out_prefix;
  if (!f.cache_dir.empty()) c.cache_dir = f.cache_dir;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic texture discrepancy maps, scale sweeps and reconstructions"};
  app.require_subcommand(1);
  Flags flags;
  const std::pair<const char*, const char*> commands[] = {
      {"std", "per-pixel STD map"},
      {"sweep", "PSNR over a (lambda, kappa) grid"},
      {"reconstruct", "reconstruction from the top-STD pixels"},
      {"texgrad", "reconstruction from signed directional discrepancies"},
  };
  for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const stdtex::RunConfig config = resolve(stdtex::parse_command(sub->get_name()), flags);
    stdtex::run(config, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return stdtex::exit_code_for(e);
  }
  return 0;
}
