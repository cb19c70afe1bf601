#include "stdtex/model_cache.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stdtex/errors.hpp"

namespace stdtex {

namespace {

constexpr const char* kMagic = "stdtex-model-cache v1";

std::string hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

bool parse_hex(const std::string& s, double& v) {
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end && *end == '\0';
}

long long lambda_key(double lambda) { return std::llround(lambda * 1e6); }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

void write_model(std::ostream& out, const NeighborhoodModel& model, const std::string& key) {
  const HalfNeighborhood& plus = model.half(Side::Plus);
  out << kMagic << '\n' << "key " << key << '\n';
  out << "lambda " << hex(model.lambda) << '\n';
  out << "orientation " << static_cast<int>(model.orientation) << '\n';
  out << "walk_length " << model.walk_length << '\n';
  out << "extent " << hex(model.achieved_extent) << ' ' << hex(model.extent_se) << '\n';
  out << "residual " << hex(model.residual_sq) << ' ' << (model.clamp_active ? 1 : 0) << '\n';
  out << "states " << plus.limit.size() << '\n';
  for (std::size_t a = 0; a < plus.limit.size(); ++a) {
    const TransitionRow& r = plus.transitions.rows[a];
    out << plus.limit.states[a].dx << ' ' << plus.limit.states[a].dy << ' ' << hex(plus.limit.prob[a]) << ' '
        << r.count;
    for (int t = 0; t < r.count; ++t) {
      out << ' ' << r.target[static_cast<std::size_t>(t)] << ' ' << hex(r.prob[static_cast<std::size_t>(t)]);
    }
    out << '\n';
  }
}

std::optional<NeighborhoodModel> read_model(std::istream& in, const std::string& expected_key) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) return std::nullopt;
  if (!std::getline(in, line) || line != "key " + expected_key) return std::nullopt;

  NeighborhoodModel model;
  std::string tag, a, b;
  int orientation = 0, clamp = 0;
  std::size_t count = 0;
  if (!(in >> tag >> a) || tag != "lambda" || !parse_hex(a, model.lambda)) return std::nullopt;
  if (!(in >> tag >> orientation) || tag != "orientation" || orientation < 0 || orientation > 3) return std::nullopt;
  model.orientation = static_cast<Orientation>(orientation);
  if (!(in >> tag >> model.walk_length) || tag != "walk_length") return std::nullopt;
  if (!(in >> tag >> a >> b) || tag != "extent" || !parse_hex(a, model.achieved_extent) ||
      !parse_hex(b, model.extent_se)) {
    return std::nullopt;
  }
  if (!(in >> tag >> a >> clamp) || tag != "residual" || !parse_hex(a, model.residual_sq)) return std::nullopt;
  model.clamp_active = clamp != 0;
  if (!(in >> tag >> count) || tag != "states" || count == 0) return std::nullopt;

  HalfNeighborhood plus;
  plus.limit.states.resize(count);
  plus.limit.prob.resize(count);
  plus.transitions.rows.resize(count);
  for (std::size_t s = 0; s < count; ++s) {
    TransitionRow& r = plus.transitions.rows[s];
    if (!(in >> plus.limit.states[s].dx >> plus.limit.states[s].dy >> a >> r.count) ||
        !parse_hex(a, plus.limit.prob[s]) || r.count < 1 || r.count > 5) {
      return std::nullopt;
    }
    for (int t = 0; t < r.count; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      if (!(in >> r.target[ts] >> a) || !parse_hex(a, r.prob[ts]) || r.target[ts] < 0 ||
          static_cast<std::size_t>(r.target[ts]) >= count) {
        return std::nullopt;
      }
    }
  }
  model.halves[static_cast<std::size_t>(Side::Minus)] = reflect(plus);
  model.halves[static_cast<std::size_t>(Side::Plus)] = std::move(plus);
  return model;
}

ModelCache::ModelCache(BuildOptions options, std::optional<std::filesystem::path> directory)
    : options_(options), directory_(std::move(directory)) {}

std::string ModelCache::key(double lambda, OrientationClass cls) const {
  std::ostringstream k;
  k << "lambda_micro=" << lambda_key(lambda) << " class=" << (cls == OrientationClass::Straight ? "straight" : "diagonal")
    << " cutoff=" << hex(options_.limit.mass_cutoff) << " quadtol=" << hex(options_.limit.quadrature_tolerance)
    << " solvetol=" << hex(options_.solve.tolerance) << " samples=" << options_.calibration.samples
    << " calseed=" << options_.calibration.seed << " maxm=" << options_.calibration.max_walk_length;
  return k.str();
}

std::filesystem::path ModelCache::file_for(double lambda, OrientationClass cls) const {
  if (!directory_) return {};
  char name[96];
  std::snprintf(name, sizeof name, "model-%s-%lld-%016llx.txt",
                cls == OrientationClass::Straight ? "straight" : "diagonal", lambda_key(lambda),
                static_cast<unsigned long long>(fnv1a(key(lambda, cls))));
  return *directory_ / name;
}

NeighborhoodModel ModelCache::load_or_build(double lambda, OrientationClass cls) {
  const std::string k = key(lambda, cls);
  const std::filesystem::path path = file_for(lambda, cls);
  if (!path.empty()) {
    std::ifstream in(path);
    if (in) {
      if (auto model = read_model(in, k)) return *model;
    }
  }
  NeighborhoodModel model = build_model(lambda, cls, options_);
  ++builds_;
  if (!path.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw IoError("cannot write model cache '" + tmp.string() + "'");
      write_model(out, model, k);
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot write model cache '" + path.string() + "'");
  }
  return model;
}

std::shared_ptr<const ModelSet> ModelCache::get(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be > 0");
  const long long key = lambda_key(lambda);
  const std::lock_guard lock(mutex_);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  const double rounded = static_cast<double>(key) / 1e6;
  auto set = std::make_shared<const ModelSet>(derive_rotations(load_or_build(rounded, OrientationClass::Straight),
                                                               load_or_build(rounded, OrientationClass::Diagonal)));
  memo_.emplace(key, set);
  return set;
}

}  // namespace stdtex
