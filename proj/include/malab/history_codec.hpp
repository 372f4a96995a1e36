#pragma once

// Fixed-rate codecs for the normalized history blocks. Both predict a block
// from its shifted endpoint zq (Xt_{(k,i)} ~ lambda^{i-(n-1)} zq) and spend
// their bits on the residual, which behaves like a stretch of the stable
// backward process.

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "malab/bits.hpp"
#include "malab/kernels.hpp"
#include "malab/process.hpp"

namespace malab::codec {

struct ScalarUniform {
  int bits_per_symbol = 2;
};

struct RandomCodebookVQ {
  std::size_t block_len = 4;  // <= 8, must divide n
  int bits_per_block = 8;     // <= 16
  std::uint64_t codebook_seed = 3;
};

struct HistoryCodecSpec {
  std::variant<ScalarUniform, RandomCodebookVQ> variant = ScalarUniform{};
  double target_distortion = 0.0;

  double rate_per_symbol() const;
};

/// Residual statistics of a history block of length n.
struct HistoryModel {
  double lambda = 2.0;
  std::size_t n = 1;
  double delta = 1.0;
  process::NoiseModel noise = process::BoundedUniform{1.0};
  std::vector<double> support;  // per-position half range of the residual

  /// Gaussian ranges are clipped at `clip_sigmas` standard deviations.
  static HistoryModel make(double lambda, std::size_t n, double delta, const process::NoiseModel& noise,
                           double clip_sigmas = 4.0);

  /// One residual vector drawn from the model (positions first..first+len-1).
  void draw_residual(CounterRng& rng, std::size_t first, std::span<double> out) const;
};

class HistoryCodec {
 public:
  HistoryCodec(HistoryCodecSpec spec, HistoryModel model);

  std::size_t bits_per_block() const { return bits_per_block_; }
  const HistoryModel& model() const { return model_; }
  const HistoryCodecSpec& spec() const { return spec_; }

  double prediction(double zq, std::size_t i) const;

  /// `blocks` holds K rows of n values, `zq` the K shifted endpoints.
  void encode(std::span<const double> blocks, std::span<const double> zq, BitBuffer& out, Exec exec = Exec::Serial) const;
  std::vector<double> decode(const BitBuffer& bits, std::span<const double> zq, std::size_t blocks) const;

  /// Decodes one block; with too few bits left the block falls back to the prediction.
  void decode_block(BitReader& in, double zq, std::span<double> out) const;

  /// Codebook of VQ slot s (2^bits rows of block_len), empty for the scalar codec.
  const std::vector<double>& codebook(std::size_t slot) const { return codebooks_.at(slot); }

 private:
  HistoryCodecSpec spec_;
  HistoryModel model_;
  std::size_t bits_per_block_ = 0;
  std::vector<double> lambda_pow_;  // lambda^{i-(n-1)}
  std::vector<std::vector<double>> codebooks_;
};

double mean_squared_error(std::span<const double> a, std::span<const double> b);

}  // namespace malab::codec
