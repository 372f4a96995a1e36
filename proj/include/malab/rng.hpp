#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace malab {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Key for the named stream `name` under `seed` (FNV-1a of the name, mixed with the seed).
std::uint64_t stream_key(std::uint64_t seed, std::string_view name) noexcept;

/// Counter-based generator: draw i is a pure function of (key, i), so any
/// draw can be regenerated without replaying the stream. Satisfies
/// UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key = 0, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return at(counter_++); }

  result_type at(std::uint64_t index) const noexcept {
    return mix64(key_ + (index + 1) * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double uniform_at(std::uint64_t index) const noexcept {
    return static_cast<double>(at(index) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes two draws.
  double normal() noexcept;

  bool coin(double p_true) noexcept { return uniform() < p_true; }

  /// Independent child generator (e.g. one per Monte Carlo trial).
  CounterRng fork(std::uint64_t index) const noexcept {
    return CounterRng(mix64(key_ ^ mix64(index ^ 0xD1B54A32D192ED03ULL)));
  }
  CounterRng fork(std::string_view name) const noexcept { return CounterRng(stream_key(key_, name)); }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Named seed streams for one experiment. Each stream feeds an independent
/// CounterRng; identical seeds reproduce a run bit for bit.
struct RandomSeeds {
  std::uint64_t source_noise = 1;
  std::uint64_t dither = 2;
  std::uint64_t codebook = 3;
  std::uint64_t channel = 4;
  std::uint64_t offset = 5;

  static RandomSeeds from_master(std::uint64_t master) noexcept;

  CounterRng source_rng() const noexcept { return CounterRng(stream_key(source_noise, "source_noise")); }
  CounterRng dither_rng() const noexcept { return CounterRng(stream_key(dither, "dither")); }
  CounterRng codebook_rng() const noexcept { return CounterRng(stream_key(codebook, "codebook")); }
  CounterRng channel_rng() const noexcept { return CounterRng(stream_key(channel, "channel")); }
  CounterRng offset_rng() const noexcept { return CounterRng(stream_key(offset, "offset")); }

  /// Seeds for trial `index` of a Monte Carlo sweep.
  RandomSeeds for_trial(std::uint64_t index) const noexcept;

  friend bool operator==(const RandomSeeds&, const RandomSeeds&) = default;
};

}  // namespace malab
