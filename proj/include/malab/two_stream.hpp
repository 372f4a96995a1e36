#pragma once

// Two-stream source code: a priority checkpoint stream and a history stream,
// with a random initialization phase that stationarizes the distortion.

#include <cstddef>
#include <vector>

#include "malab/bits.hpp"
#include "malab/checkpoint.hpp"
#include "malab/gaussian_path.hpp"
#include "malab/history_codec.hpp"
#include "malab/kernels.hpp"
#include "malab/process.hpp"

namespace malab::codec {

struct TwoStreamConfig {
  CheckpointConfig checkpoint;
  std::size_t superblocks = 8;  // offset T is uniform on {0, ..., superblocks * n - 1}
  bool stationarize = true;
};

struct TwoStreamFrame {
  BitBuffer stream1;
  BitBuffer stream2;
  std::size_t offset = 0;          // T
  std::size_t init_stream_bits = 0;
  CheckpointTrace init_trace;      // n = 1 code for X_0..X_T
  CheckpointTrace main_trace;      // blocks start at time T
  std::vector<double> zq;          // encoder-side shifted endpoints

  std::size_t covered() const { return offset + main_trace.block_count() * main_trace.layout.n; }
  /// Stream-1 bits per symbol after the initialization phase.
  double rate1() const;
  double rate2() const;
};

TwoStreamFrame stationarize(const process::Trajectory& traj, const TwoStreamConfig& cfg, const HistoryCodec& history,
                            const RandomSeeds& seeds, Exec exec = Exec::Serial);

struct Reconstruction {
  std::vector<double> error;  // X_t - Xhat_t for t in [0, covered)
  std::vector<double> value;  // Xhat_t (may overflow on long unstable runs)
  std::size_t blocks_decoded = 0;
};

/// Decodes both streams (which may differ from the encoder's) and returns the
/// reconstruction with its error against the encoder-side trajectory.
Reconstruction reconstruct(const TwoStreamFrame& frame, const BitBuffer& stream1, const BitBuffer& stream2,
                           const HistoryCodec& history, const RandomSeeds& seeds);

/// Reconstruction error of the Gaussian path when the decoder waits phi symbols:
/// blocks whose checkpoint records have not cleared the FIFO are extrapolated
/// from the last decoded checkpoint. `history_decoded` holds T rows (or is empty
/// for zero history rate, which then uses the prediction from zq).
std::vector<double> reconstruct_gaussian_errors(const process::Trajectory& traj, const GaussianTrace& trace,
                                                const FifoResult& fifo, double drain_rate, const HistoryCodec& history,
                                                std::span<const double> history_decoded, std::size_t phi);

}  // namespace malab::codec
