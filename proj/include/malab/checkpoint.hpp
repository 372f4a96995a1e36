#pragma once

// Recursive dithered checkpoint code for bounded driving noise.
//
// Everything is carried in coordinates relative to the quantized checkpoints,
// which stay bounded even when the process itself overflows:
//   e_k          = X_{kn} - Xc_{kn}                       (|e_k| <= delta/2)
//   Xt_{(k,i)}   = X_{kn+i} - lambda^i Xc_{kn}             (history block)
//   increment_k  = Xc_{(k+1)n} - lambda^n Xc_{kn}
//   prev_rel_k   = Xc_{(k+1)n-1} - Xc_{(k+1)n} / lambda
//   zq_k         = Xc_{(k+1)n-1} - lambda^{n-1} Xc_{kn} = increment_k / lambda + prev_rel_k

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "malab/bits.hpp"
#include "malab/process.hpp"
#include "malab/rng.hpp"

namespace malab::codec {

struct CheckpointConfig {
  std::size_t n = 32;
  double delta = 1.0 / 16.0;
  int r1_bits_per_block = 41;
  double eta = 2.0;

  void validate() const;
};

double required_checkpoint_rate(double lambda, double omega, double omega0, double delta, std::size_t n);

/// Index ranges of the three quantizers and the bit widths that carry them.
struct CheckpointLayout {
  double lambda = 2.0;
  std::size_t n = 1;
  double delta = 1.0;
  std::int64_t q_main = 0;  // main index in [-q_main, q_main]
  std::int64_t q_prev = 0;  // previous-sample index in [-q_prev, q_prev]
  std::int64_t q_init = 0;  // initial-condition index in [-q_init, q_init]
  int block_bits = 0;
  int init_bits = 0;
  double prev_clamp = 0.0;  // > 0: clamp the previous-sample argument to +-prev_clamp

  std::uint64_t cells_main() const { return static_cast<std::uint64_t>(2 * q_main + 1); }
  std::uint64_t cells_prev() const { return static_cast<std::uint64_t>(2 * q_prev + 1); }

  /// Layout for bounded noise of width omega. Refuses (InvalidConfig) when the
  /// configured bits are below the required rate or cannot hold the index.
  static CheckpointLayout bounded(const process::ProcessParams& params, const CheckpointConfig& cfg);
  /// Smallest layout that holds the bounded-noise indices (n = 1 initialization code).
  static CheckpointLayout minimal(double lambda, double omega, double omega0, double delta, std::size_t n);
};

struct CheckpointBlock {
  std::int64_t q_main = 0;
  std::int64_t q_prev = 0;
  double increment = 0.0;
  double prev_rel = 0.0;
  double zq = 0.0;
};

/// Dither draws live at fixed indices of the dither stream, so encoder and
/// decoder regenerate them independently: the initial frame uses
/// base, block k uses base + 1 + 2k (main) and base + 2 + 2k (previous sample).
class DitherSource {
 public:
  DitherSource(const RandomSeeds& seeds, double delta, std::uint64_t base = 0)
      : rng_(seeds.dither_rng()), delta_(delta), base_(base) {}

  double init() const { return draw(base_); }
  double main(std::size_t k) const { return draw(base_ + 1 + 2 * k); }
  double prev(std::size_t k) const { return draw(base_ + 2 + 2 * k); }

 private:
  double draw(std::uint64_t i) const { return delta_ * (rng_.uniform_at(i) - 0.5); }
  CounterRng rng_;
  double delta_;
  std::uint64_t base_;
};

/// Quantize x + dither to the delta grid (ties to even) and clamp to [-q, q].
std::int64_t dithered_index(double x, double dither, double delta, std::int64_t q);

struct CheckpointTrace {
  CheckpointLayout layout;
  BitBuffer bits;
  std::int64_t q_init = 0;
  double init_value = 0.0;            // Xc_0
  std::vector<CheckpointBlock> blocks;
  std::vector<double> errors;         // e_k, k = 0..K
  std::vector<double> prev_errors;    // X_{(k+1)n-1} - Xc_{(k+1)n-1}
  std::vector<double> history;        // Xt_{(k,i)}, K rows of n
  std::size_t clamp_events = 0;

  std::size_t block_count() const { return blocks.size(); }
};

/// Encodes `blocks` checkpoint blocks from the relative start error e_start,
/// with noise[0] driving the step out of the first checkpoint. Appends to trace.
void encode_blocks(const CheckpointLayout& layout, const DitherSource& dither, double e_start,
                   std::span<const double> noise, std::size_t blocks, CheckpointTrace& trace);

/// Whole-trajectory encoder: initial frame for X_0 then (horizon - 1) / n blocks.
CheckpointTrace encode_checkpoints(const process::Trajectory& traj, const CheckpointConfig& cfg, const RandomSeeds& seeds);

struct DecodedCheckpoints {
  std::int64_t q_init = 0;
  double init_value = 0.0;
  std::vector<CheckpointBlock> blocks;
  bool needs_more_bits = false;
};

/// Block contents from a received index.
CheckpointBlock decode_block(const CheckpointLayout& layout, const DitherSource& dither, std::size_t k, std::uint64_t index);

DecodedCheckpoints decode_checkpoints(const BitBuffer& bits, const CheckpointLayout& layout, const RandomSeeds& seeds,
                                      std::size_t up_to_blocks);

/// Xt blocks recomputed from the trajectory's noise and the encoder's start errors.
std::vector<double> normalize_history(const process::Trajectory& traj, const CheckpointTrace& trace);

double shifted_endpoint(const CheckpointTrace& trace, std::size_t k);

/// Absolute (Xc_{kn-1}, Xc_{kn}) pairs for k = 0..K (the first pair has no
/// previous sample and repeats Xc_0). Overflows to inf on long unstable runs.
std::vector<std::pair<double, double>> absolute_checkpoints(const CheckpointLayout& layout, double init_value,
                                                            std::span<const CheckpointBlock> blocks);

}  // namespace malab::codec
