#pragma once

// Randomized infinite tree code. The channel input at use t (t = 1, 2, ...)
// is a hash of (seed, the message prefix available at t, t), mapped through
// the input distribution; at rate a/b the prefix at time t has floor(a t / b) bits.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "malab/channel.hpp"
#include "malab/kernels.hpp"
#include "malab/stats.hpp"

namespace malab::channel {

struct TreeCode {
  std::uint32_t bits_per_branch = 1;  // a
  std::uint32_t uses_per_branch = 2;  // b
  std::uint64_t seed = 0;
  std::vector<double> input_cdf{0.5, 1.0};

  /// Uniform inputs for symmetric channels, otherwise the capacity-achieving distribution.
  static TreeCode make(const DmcSpec& dmc, std::uint32_t a, std::uint32_t b, std::uint64_t seed);

  double rate() const { return static_cast<double>(bits_per_branch) / static_cast<double>(uses_per_branch); }
  std::size_t bits_at(std::uint64_t t) const { return static_cast<std::size_t>(bits_per_branch * t / uses_per_branch); }
  /// First use whose prefix has at least j bits (j = 0 gives 1).
  std::uint64_t first_use(std::size_t depth) const;

  std::uint64_t root() const { return mix64(seed ^ 0x6A09E667F3BCC909ULL); }
  static std::uint64_t extend(std::uint64_t h, bool bit) {
    return mix64(h + (bit ? 0xBB67AE8584CAA73BULL : 0x3C6EF372FE94F82BULL));
  }
  std::uint32_t label(std::uint64_t prefix_hash, std::uint64_t t) const {
    return map_input(mix64(prefix_hash ^ (t * 0x9E3779B97F4A7C15ULL)), input_cdf);
  }
};

/// Parses "a/b" into (a, b).
std::pair<std::uint32_t, std::uint32_t> parse_rate(const std::string& text);

/// Inputs for uses 1..horizon.
std::vector<std::uint32_t> tree_encode(const TreeCode& code, std::span<const std::uint8_t> bits, std::uint64_t horizon);

inline constexpr std::size_t kMaxTreePathsLog2 = 20;

/// ML path for every time t in [first_use(start_depth), horizon], searching the
/// subtree below a fixed prefix of `start_depth` bits whose hash is start_hash.
/// Paths are stored with bit m (depth start_depth + m) at position m.
struct MlScan {
  std::uint64_t t_first = 1;
  std::vector<double> metric;        // index t - t_first
  std::vector<std::uint64_t> path;
  std::vector<std::uint32_t> depth;  // path length in bits beyond start_depth
};

/// `outputs[t - 1]` is the output at use t; only uses <= horizon are read.
MlScan ml_scan(const TreeCode& code, const std::vector<std::vector<double>>& loglik, std::span<const std::uint32_t> outputs,
               std::uint64_t horizon, std::size_t start_depth, std::uint64_t start_hash, Exec exec = Exec::Serial);

/// Full ML decode from the root: estimate (bits) at every time t <= horizon.
struct AnytimeEstimate {
  std::vector<std::vector<std::uint8_t>> at_time;  // index t - 1
};
AnytimeEstimate ml_decode_anytime(const TreeCode& code, const DmcSpec& dmc, std::span<const std::uint32_t> outputs,
                                  std::uint64_t horizon, Exec exec = Exec::Serial);

struct AnytimeTable {
  std::vector<int> delay;                 // phi in channel uses
  std::vector<std::uint64_t> events;      // prefix errors at delay phi
  std::vector<std::uint64_t> totals;
  std::vector<double> probability;
  stats::TailFit fit;
};

/// Monte Carlo over `trials` random messages: prefix B_1^i is in error at delay
/// phi if the estimate at time ceil(i/R) + phi differs from it.
AnytimeTable measure_anytime_reliability(const TreeCode& code, const DmcSpec& dmc, std::uint64_t horizon, std::size_t trials,
                                         const RandomSeeds& seeds, Exec exec = Exec::Parallel);

/// Sliding-window ML: whenever the window reaches `window_bits` undecided bits it
/// is decoded and the oldest `commit_bits` are frozen. Returns the committed
/// bits and the channel use at which each was committed.
struct WindowedDecode {
  std::vector<std::uint8_t> bits;
  std::vector<std::uint64_t> commit_time;
};
WindowedDecode windowed_decode(const TreeCode& code, const DmcSpec& dmc, std::span<const std::uint32_t> outputs,
                               std::size_t window_bits, std::size_t commit_bits, Exec exec = Exec::Serial);

}  // namespace malab::channel
