#pragma once

// Checkpoint code for Gaussian driving noise: each block carries a unary
// offset counting how many l*sigma_tilde steps the block noise lies from the
// centre, then the fixed-width refinement index of the bounded code. The
// variable-length records are smoothed to a fixed rate by a FIFO.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "malab/bits.hpp"
#include "malab/checkpoint.hpp"
#include "malab/process.hpp"

namespace malab::codec {

struct GaussianCheckpointConfig {
  std::size_t n = 32;
  double delta = 1.0 / 16.0;
  double eps1 = 0.1;
  double eps_q = 0.05;
  std::size_t fifo_cap_bits = std::size_t{1} << 16;

  void validate() const;
  double l_scale() const;  // 2^{eps1 n / 3}
};

struct GaussianLayout {
  CheckpointLayout base;
  double sigma = 1.0;
  double sigma_tilde = 0.0;  // lambda^n sigma / sqrt(lambda^2 - 1)
  double l = 1.0;
  double step = 0.0;         // l * sigma_tilde

  static GaussianLayout make(const process::ProcessParams& params, const GaussianCheckpointConfig& cfg);
  /// Fixed-rate part per block in bits/symbol.
  double fixed_rate() const { return static_cast<double>(base.block_bits) / static_cast<double>(base.n); }
  /// FIFO drain rate: fixed part plus the zero-offset codeword plus eps_q.
  double drain_rate(const GaussianCheckpointConfig& cfg) const;
};

struct GaussianTrace {
  GaussianLayout layout;
  CheckpointTrace checkpoints;        // bits empty; blocks/errors/history as in the bounded code
  std::vector<std::int64_t> offsets;  // per block
  std::vector<BitBuffer> records;     // record 0 is the initial frame
  std::vector<double> arrival;        // symbol time each record enters the FIFO
};

/// Offset = sign(w) * floor(|w| / step) for block noise w.
std::int64_t gaussian_offset(double block_noise, double step);

GaussianTrace encode_checkpoints_gaussian(const process::Trajectory& traj, const GaussianCheckpointConfig& cfg,
                                          const RandomSeeds& seeds);

struct FifoResult {
  BitBuffer stream;
  std::vector<std::size_t> end_bit;         // stream position just past each record
  std::vector<std::int64_t> delay_symbols;  // completion slot - arrival slot
  std::vector<std::int64_t> delay_bits;     // bits emitted from arrival to completion
  std::vector<std::int64_t> wait_bits;      // backlog ahead of the record on arrival
  std::size_t overflow_events = 0;
  std::size_t max_backlog = 0;
};

/// Drains floor((t+1) r) - floor(t r) bits in slot t, zero padding when empty.
/// Runs until every record has left the queue.
FifoResult fifo_smooth(const std::vector<BitBuffer>& records, const std::vector<double>& arrival, double rate,
                       std::size_t cap_bits);

struct GaussianDecoded {
  double init_value = 0.0;
  std::vector<CheckpointBlock> blocks;
  std::vector<std::size_t> end_bit;  // stream position past record k (k = 0 is the initial frame)
};

/// Parses the smoothed stream: skips padding, reads records in order.
GaussianDecoded decode_checkpoints_gaussian(const BitBuffer& stream, const GaussianLayout& layout, const RandomSeeds& seeds,
                                            std::size_t max_blocks);

}  // namespace malab::codec
