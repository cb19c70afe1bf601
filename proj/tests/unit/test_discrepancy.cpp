#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <optional>

#include "stdtex/discrepancy.hpp"
#include "stdtex/errors.hpp"
#include "stdtex/model_cache.hpp"
#include "stdtex/rng.hpp"

using namespace stdtex;

namespace {

const ModelSet& models(double lambda) {
  static ModelCache cache;
  return *cache.get(lambda);
}

PathSet random_set(CounterStream& rng, Side side, int n, int m, int channels, double missing) {
  PathSet s;
  s.resize(n, m, channels);
  s.side = side;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      const auto cell = static_cast<std::size_t>(j * m + i);
      if (rng.uniform() < missing) {
        s.weight[cell] = 0.0;
        s.all_valid = false;
        continue;
      }
      s.weight[cell] = 1.0;
      for (int c = 0; c < channels; ++c) s.values[cell * channels + c] = rng.uniform();
    }
  }
  return s;
}

// The estimator written out term by term: every ordered pair (j, k) with a
// common valid index contributes 1 / (1 + msd / kappa^2).
std::optional<double> brute_force(const PathSet& minus, const PathSet& plus, const KernelSpec& spec) {
  const auto kernel = [&](const PathSet& s, int j, const PathSet& t, int k) -> std::optional<double> {
    double sum = 0.0;
    int common = 0;
    for (int i = 0; i < s.m; ++i) {
      const auto a = static_cast<std::size_t>(j * s.m + i), b = static_cast<std::size_t>(k * t.m + i);
      if (s.weight[a] == 0.0 || t.weight[b] == 0.0) continue;
      ++common;
      if (spec.kind == KernelKind::Gray) {
        const double e = s.values[a] - t.values[b];
        sum += e * e;
      } else {
        const Rgb x{s.values[3 * a], s.values[3 * a + 1], s.values[3 * a + 2]};
        const Rgb y{t.values[3 * b], t.values[3 * b + 1], t.values[3 * b + 2]};
        const double d = spec.kind == KernelKind::Lab ? delta1(x, y) : delta2(x, y);
        sum += d * d;
      }
    }
    if (common == 0) return std::nullopt;
    return 1.0 / (1.0 + (sum / common) / (spec.kappa * spec.kappa));
  };
  const auto term = [&](const PathSet& s, const PathSet& t) -> std::optional<double> {
    double sum = 0.0;
    int count = 0;
    for (int j = 0; j < s.n; ++j) {
      for (int k = 0; k < t.n; ++k) {
        if (auto v = kernel(s, j, t, k)) {
          sum += *v;
          ++count;
        }
      }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
  };
  const auto pp = term(plus, plus), mm = term(minus, minus), pm = term(plus, minus);
  if (!pp || !mm || !pm) return std::nullopt;
  return *pp + *mm - 2.0 * *pm;
}

Field noise_field(int w, int h, std::uint64_t seed, int channels = 1) {
  Field f(w, h, channels);
  CounterStream rng(seed, 1, 2, 3);
  std::vector<double> v(static_cast<std::size_t>(channels));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (auto& c : v) c = (x < w / 2 ? 0.2 : 0.7) + 0.2 * rng.uniform();
      f.set({x, y}, v);
    }
  }
  return f;
}

Field mirrored(const Field& f) {
  Field out(f.width(), f.height(), f.channels(), f.domain());
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      const auto v = f.channels_at({x, y});
      if (!v.empty()) out.set({f.width() - 1 - x, y}, v);
    }
  }
  return out;
}

void check_maps_close(const Field& a, const Field& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a.present(i) == b.present(i));
    if (a.present(i)) CHECK(std::abs(a.data()[i] - b.data()[i]) <= tol);
  }
}

}  // namespace

TEST_CASE("mmd2 matches a brute-force double sum on random instances") {
  CounterStream rng(123, 0, 0, 0);
  int undefined = 0;
  for (int trial = 0; trial < 600; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform() * 5), m = 1 + static_cast<int>(rng.uniform() * 4);
    const KernelKind kind = trial % 3 == 0 ? KernelKind::Gray : trial % 3 == 1 ? KernelKind::Lab : KernelKind::DE2000;
    const int ch = kind == KernelKind::Gray ? 1 : 3;
    const double missing = trial % 2 == 0 ? 0.0 : 0.45;
    const PathSet minus = random_set(rng, Side::Minus, n, m, ch, missing);
    const PathSet plus = random_set(rng, Side::Plus, n, m, ch, missing);
    const KernelSpec spec{kind, 0.05 + rng.uniform()};
    const Mmd2Result got = mmd2(minus, plus, spec);
    const auto expected = brute_force(minus, plus, spec);
    CAPTURE(trial);
    REQUIRE(got.value.has_value() == expected.has_value());
    if (!expected) {
      CHECK(std::isnan(got.raw));
      ++undefined;
      continue;
    }
    CHECK(std::abs(got.raw - *expected) <= 1e-12);
    CHECK(*got.value == doctest::Approx(std::max(0.0, *expected)).epsilon(1e-12));
    CHECK(got.clamped == (*expected < 0.0));
    if (missing == 0.0) CHECK_FALSE(got.clamped);
  }
  CHECK(undefined > 0);
}

TEST_CASE("mmd2 invariants") {
  CounterStream rng(5, 0, 0, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const PathSet a = random_set(rng, Side::Minus, 6, 3, 1, 0.2);
    const PathSet b = random_set(rng, Side::Plus, 6, 3, 1, 0.2);
    const KernelSpec spec{KernelKind::Gray, 0.3};
    const auto ab = mmd2(a, b, spec), ba = mmd2(b, a, spec);
    REQUIRE(ab.value.has_value());
    CHECK(ab.raw == doctest::Approx(ba.raw).epsilon(1e-13));
    CHECK(*mmd2(a, a, spec).value == 0.0);
  }
  // n = 1 expands to 2 - 2 k(s+, s-).
  const PathSet a = random_set(rng, Side::Minus, 1, 4, 1, 0.0);
  const PathSet b = random_set(rng, Side::Plus, 1, 4, 1, 0.0);
  double msd = 0.0;
  for (int i = 0; i < 4; ++i) msd += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]) / 4;
  CHECK(*mmd2(a, b, {KernelKind::Gray, 0.25}).value ==
        doctest::Approx(2.0 - 2.0 / (1.0 + msd / 0.0625)).epsilon(1e-13));
}

TEST_CASE("mmd2 rejects mismatched shapes") {
  CounterStream rng(1, 0, 0, 0);
  const PathSet a = random_set(rng, Side::Minus, 3, 2, 1, 0.0);
  const PathSet b = random_set(rng, Side::Plus, 4, 2, 1, 0.0);
  CHECK_THROWS_AS(mmd2(a, b, {}), StructureError);
  CHECK_THROWS_AS(mmd2(a, a, {KernelKind::Gray, -1.0}), ParameterError);
}

TEST_CASE("directions are averaged over the defined ones") {
  CHECK(*combine_directions({0.2, std::nullopt, 0.6, std::nullopt}) == doctest::Approx(std::sqrt(0.4)));
  CHECK(*combine_directions({0.1, 0.2, 0.3, 0.4}) == doctest::Approx(std::sqrt(0.25)));
  CHECK_FALSE(combine_directions({}).has_value());
}

TEST_CASE("constant images give an identically zero map") {
  Field f(24, 20);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 24; ++x) f.set({x, y}, 0.37);
  }
  for (double lambda : {1.0, 2.0}) {
    const StdMap r = std_map(f, models(lambda), {KernelKind::Gray, 0.01}, {.n = 40, .seed = 3});
    CHECK(r.map.present_count() == f.size());
    for (double v : r.map.data()) CHECK(v == 0.0);
    CHECK(r.diagnostics.clamp_count == 0);
  }
}

TEST_CASE("the parallel map agrees with the serial reference") {
  Field gray = noise_field(14, 12, 9);
  gray.clear({5, 5});
  gray.clear({6, 5});
  gray.clear({0, 11});
  Field color = noise_field(10, 9, 4, 3);
  color.clear({4, 4});
  struct Case {
    const Field* field;
    KernelSpec kernel;
    double lambda;
  };
  for (const Case& c : {Case{&gray, {KernelKind::Gray, 0.1}, 1.0}, Case{&gray, {KernelKind::Gray, 0.5}, 2.0},
                        Case{&color, {KernelKind::Lab, 0.2}, 1.0}, Case{&color, {KernelKind::DE2000, 0.15}, 1.5},
                        Case{&color, {KernelKind::Gray, 0.3}, 1.0}}) {
    CAPTURE(to_string(c.kernel.kind));
    const StdOptions o{.n = 25, .seed = 17, .directional = true};
    const StdMap fast = std_map(*c.field, models(c.lambda), c.kernel, o);
    const StdMap slow = std_map_reference(*c.field, models(c.lambda), c.kernel, o);
    check_maps_close(fast.map, slow.map, 1e-10);
    REQUIRE(fast.directional.size() == 4);
    for (int d = 0; d < 4; ++d) check_maps_close(fast.directional[d], slow.directional[d], 1e-9);
    CHECK(fast.diagnostics.clamp_count == slow.diagnostics.clamp_count);
    CHECK(fast.diagnostics.undefined_pixels == slow.diagnostics.undefined_pixels);

    const PixelDiscrepancy one = std_at(*c.field, {3, 2}, models(c.lambda), c.kernel, o.n, o.seed);
    CHECK(*one.value == doctest::Approx(*fast.map.get({3, 2})).epsilon(1e-10));
  }
}

TEST_CASE("several data scales share paths and match single-scale maps") {
  const Field f = noise_field(12, 12, 21);
  const double kappas[] = {0.05, 0.25, 1.0};
  const StdOptions o{.n = 20, .seed = 8};
  const auto maps = std_maps(f, models(1.0), KernelKind::Gray, kappas, o);
  REQUIRE(maps.size() == 3);
  for (std::size_t q = 0; q < 3; ++q) {
    const StdMap single = std_map(f, models(1.0), {KernelKind::Gray, kappas[q]}, o);
    check_maps_close(maps[q].map, single.map, 0.0);
  }
}

TEST_CASE("maps do not depend on the thread count") {
  const Field f = noise_field(20, 16, 2);
  const StdOptions o{.n = 30, .seed = 99, .directional = true};
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const StdMap a = std_map(f, models(1.5), {KernelKind::Gray, 0.2}, o);
  omp_set_num_threads(4);
  const StdMap b = std_map(f, models(1.5), {KernelKind::Gray, 0.2}, o);
  omp_set_num_threads(saved);
  CHECK(a.map == b.map);
  CHECK(a.directional == b.directional);
}

TEST_CASE("masked pixels are undefined and borders stay defined") {
  Field f = noise_field(16, 16, 6);
  for (int y = 4; y < 10; ++y) {
    for (int x = 4; x < 10; ++x) f.clear({x, y});
  }
  const StdMap r = std_map(f, models(1.0), {KernelKind::Gray, 0.25}, {.n = 30, .seed = 1});
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(r.map.present(i) == f.present(i));
  CHECK(r.diagnostics.undefined_pixels == 36);
  for (double v : r.map.data()) CHECK(v >= 0.0);
}

TEST_CASE("mirroring the input mirrors the map up to sampling noise") {
  Field f(24, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 24; ++x) f.set({x, y}, x < 9 ? 0.1 : (x < 15 ? 0.5 + 0.02 * (y % 3) : 0.9));
  }
  const auto gap = [&](int n) {
    const Field a = mirrored(std_map(f, models(1.0), {KernelKind::Gray, 0.25}, {.n = n, .seed = 4}).map);
    const Field b = std_map(mirrored(f), models(1.0), {KernelKind::Gray, 0.25}, {.n = n, .seed = 5}).map;
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      diff += std::abs(a.data()[i] - b.data()[i]);
      scale += a.data()[i];
    }
    return diff / scale;
  };
  const double coarse = gap(10), fine = gap(160);
  CHECK(fine < coarse);
  CHECK(fine < 0.1);
}

TEST_CASE("averaging maps ignores pixels a run left undefined") {
  Field a(2, 1, 1), b(2, 1, 1);
  a.set({0, 0}, 1.0);
  a.set({1, 0}, 0.5);
  b.set({0, 0}, 3.0);
  const Field m = average_maps(std::vector<Field>{a, b});
  CHECK(*m.get({0, 0}) == 2.0);
  CHECK(*m.get({1, 0}) == 0.5);
  CHECK_THROWS_AS(average_maps(std::vector<Field>{}), ParameterError);
  CHECK_THROWS_AS(average_maps(std::vector<Field>{a, Field(3, 1)}), StructureError);
}

TEST_CASE("color kernels need color input and diagnostics are reported") {
  const Field f = noise_field(6, 6, 1);
  CHECK_THROWS_AS(std_map(f, models(1.0), {KernelKind::Lab, 0.2}, {.n = 5}), ParameterError);
  CHECK_THROWS_AS(std_map(f, models(1.0), {KernelKind::Gray, 0.2}, {.n = 0}), ParameterError);
  const StdMap r = std_map(f, 1.0, {KernelKind::Gray, 0.2}, {.n = 5});
  const std::string report = r.diagnostics.report();
  CHECK(report.find("clamp_count=") != std::string::npos);
  CHECK(report.find("undefined_pixels=0") != std::string::npos);
}
