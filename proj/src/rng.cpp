#include "malab/rng.hpp"

#include <cmath>
#include <numbers>

namespace malab {

std::uint64_t stream_key(std::uint64_t seed, std::string_view name) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return mix64(mix64(seed) ^ h);
}

double CounterRng::normal() noexcept {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RandomSeeds RandomSeeds::from_master(std::uint64_t master) noexcept {
  return RandomSeeds{stream_key(master, "source_noise"), stream_key(master, "dither"),
                     stream_key(master, "codebook"), stream_key(master, "channel"),
                     stream_key(master, "offset")};
}

RandomSeeds RandomSeeds::for_trial(std::uint64_t index) const noexcept {
  const auto f = [index](std::uint64_t s) { return mix64(s ^ mix64(index + 0x632BE59BD9B4E019ULL)); };
  return RandomSeeds{f(source_noise), f(dither), f(codebook), f(channel), f(offset)};
}

}  // namespace malab
