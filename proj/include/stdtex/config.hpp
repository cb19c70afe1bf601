#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stdtex/field.hpp"
#include "stdtex/kernels.hpp"

namespace stdtex {

enum class Command { Std, Sweep, Reconstruct, Texgrad };

Command parse_command(std::string_view name);
std::string_view to_string(Command c) noexcept;

/// Fully resolved settings of one run. Physical-unit inputs are converted
/// before they land here, so the echo always holds pixel and normalized
/// scales.
struct RunConfig {
  Command command = Command::Std;
  std::string input;
  FileFormat format = FileFormat::Pgm;
  std::optional<ValueDomain> domain;
  std::string missing_token = "NaN";
  std::vector<double> lambdas{1.0};
  std::vector<double> kappas{0.25};
  int n = 500;
  int runs = 1;
  std::uint64_t seed = 0;
  double fraction = 0.20;
  KernelKind kernel = KernelKind::Gray;
  int threads = 0;  // 0: OpenMP default
  std::string out_prefix = "stdtex_";
  std::string cache_dir;

  void validate() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// One `key=value` line per field.
std::string to_echo(const RunConfig& config);
/// Inverse of to_echo; unknown keys and malformed values are parameter errors.
RunConfig parse_echo(std::string_view text);

std::vector<double> parse_number_list(std::string_view text);
ValueDomain parse_domain(std::string_view text);

/// Executes the configured subcommand, writing outputs under out_prefix and
/// `key=value` results to `log`.
void run(const RunConfig& config, std::ostream& log);

/// Process exit code for an exception escaping `run`.
int exit_code_for(const std::exception& e) noexcept;

}  // namespace stdtex
