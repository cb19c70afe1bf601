#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "stdtex/neighborhood.hpp"

namespace stdtex {

/// Memoizes model sets per lambda (rounded to 1e-6) and, when given a
/// directory, persists each model as a versioned text file. A file whose key
/// (lambda, class, cutoff, tolerances, calibration settings) differs from the
/// current one is rebuilt and overwritten.
class ModelCache {
 public:
  explicit ModelCache(BuildOptions options = {}, std::optional<std::filesystem::path> directory = std::nullopt);

  std::shared_ptr<const ModelSet> get(double lambda);

  const BuildOptions& options() const noexcept { return options_; }
  std::string key(double lambda, OrientationClass cls) const;
  std::filesystem::path file_for(double lambda, OrientationClass cls) const;

  /// Number of models built (not loaded) since construction.
  int builds() const noexcept { return builds_; }

 private:
  NeighborhoodModel load_or_build(double lambda, OrientationClass cls);

  BuildOptions options_;
  std::optional<std::filesystem::path> directory_;
  std::mutex mutex_;
  std::map<long long, std::shared_ptr<const ModelSet>> memo_;
  int builds_ = 0;
};

void write_model(std::ostream& out, const NeighborhoodModel& model, const std::string& key);
/// Nullopt when the stream is not a model file for `expected_key`.
std::optional<NeighborhoodModel> read_model(std::istream& in, const std::string& expected_key);

}  // namespace stdtex
