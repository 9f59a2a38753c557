#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace judgevar {

/// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
/// numbers: as easy as 1, 2, 3").
///
/// The 64-bit seed is the key; the 128-bit counter is split into a 64-bit
/// block index (words 0-1) and a 64-bit stream index (words 2-3), so
/// `Philox(seed, s)` for distinct `s` yields independent streams without any
/// shared state. Output is fully specified by (seed, stream) and therefore
/// reproducible across platforms and implementations.
class Philox {
 public:
  using result_type = std::uint32_t;

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return 0xffffffffu; }

  result_type operator()() noexcept { return next_u32(); }

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform01() noexcept;

  /// Uniform integer in [0, bound) without modulo bias (Lemire's method).
  std::uint64_t uniform_index(std::uint64_t bound) noexcept;

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept;

  /// Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
  double gamma(double shape) noexcept;

  /// A child generator on a derived stream. Children of distinct parents or
  /// distinct indices do not overlap.
  Philox split(std::uint64_t index) const noexcept;

  /// Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  unsigned buffered_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Mixes `seed` with a stream label into an independent 64-bit key.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label) noexcept;

/// Fisher-Yates shuffle driven by `Philox::uniform_index`.
template <class T>
void shuffle(std::span<T> values, Philox& rng) noexcept {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace judgevar
