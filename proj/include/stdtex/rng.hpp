#pragma once

#include <array>
#include <cstdint>

namespace stdtex {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter c, Key k) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k[0] += 0x9E3779B9u;
        k[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }
    return c;
  }
};

/// SplitMix64 finalizer, used to derive child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed of repetition `run` derived from a base seed.
constexpr std::uint64_t run_seed(std::uint64_t base, std::uint32_t run) noexcept {
  return run == 0 ? base : mix_seed(base ^ (std::uint64_t{run} * 0xD1B54A32D192ED03ull));
}

/// Uniform draws from the stream identified by (seed, word1, word2, word3).
///
/// Counter word 0 enumerates blocks of four outputs; the other three words
/// and the 64-bit seed name the stream, so distinct keys never share output.
class CounterStream {
 public:
  constexpr CounterStream(std::uint64_t seed, std::uint32_t word1, std::uint32_t word2,
                          std::uint32_t word3) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        counter_{0, word1, word2, word3} {}

  constexpr std::uint32_t next_u32() noexcept {
    if (used_ == 4) {
      block_ = Philox4x32::generate(counter_, key_);
      ++counter_[0];
      used_ = 0;
    }
    return block_[static_cast<std::size_t>(used_++)];
  }

  /// Uniform on the open interval (0, 1) with 32-bit resolution.
  constexpr double uniform() noexcept {
    return (static_cast<double>(next_u32()) + 0.5) * (1.0 / 4294967296.0);
  }

 private:
  Philox4x32::Key key_;
  Philox4x32::Counter counter_;
  Philox4x32::Counter block_{};
  int used_ = 4;
};

}  // namespace stdtex
