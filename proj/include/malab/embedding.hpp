#pragma once

// Embedding message bits into a simulated unstable process (Cantor-set rule),
// recovering them from distorted endpoint reconstructions, the erasure queue
// for mixture noise, and a toy history-embedding codebook.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "malab/rng.hpp"
#include "malab/stats.hpp"

namespace malab::embedding {

struct EmbedConfig {
  std::size_t n = 2;
  int bits_per_block = 1;  // nR
  double delta = 1.0;      // width of the uniform noise component
  double lambda = 2.0;

  void validate() const;  // InvalidConfig unless nR < log2(lambda^n - 1)
  double beta() const;    // lambda^{n-1} delta / 2
  double lambda_n() const;
  std::uint32_t messages() const { return 1u << bits_per_block; }
};

double gap_constant(const EmbedConfig& cfg);

/// Message point in [-1, 1]: -1 + 2^{1-nR}(M + 1/2).
double message_point(const EmbedConfig& cfg, std::uint32_t m);

struct EmbeddedEndpoints {
  std::vector<double> message_part;  // X'_k, k = 1..K (index k-1)
  std::vector<double> common_part;   // C_k from common randomness
  std::vector<double> endpoint;      // X_{kn} = X'_k + C_k
};

/// Endpoints of the uniform-noise process whose first in-block noise sample
/// carries message M_k: W_{k,0} = (delta/2)(Mtilde_k + U), U uniform on
/// [-2^{-nR}, 2^{-nR}]; the other samples and U are common randomness.
EmbeddedEndpoints embed_endpoint_bits(std::span<const std::uint32_t> messages, const EmbedConfig& cfg, const RandomSeeds& seeds);

/// Message-driven part only: X'_k = lambda^n X'_{k-1} + beta Mtilde_k.
std::vector<double> message_endpoints(std::span<const std::uint32_t> messages, const EmbedConfig& cfg);

/// Decodes M_1..M_k from a value of X'_k by interval distance, digit by digit.
std::vector<std::uint32_t> decode_prefix(double x_prime, std::size_t k, const EmbedConfig& cfg);

/// Estimates of M_1..M_k at every block k from reconstructed endpoints.
/// Result[k-1] holds the k decoded messages.
std::vector<std::vector<std::uint32_t>> extract_endpoint_bits(std::span<const double> reconstructed, const EmbedConfig& cfg,
                                                              const RandomSeeds& seeds);

struct ErasureQueue {
  std::vector<std::uint8_t> erased;     // per slot
  std::vector<std::int64_t> delay;      // per packet: service slot - arrival slot
  std::vector<std::size_t> backlog;     // queue length after each slot
  bool bound_applies = true;            // gamma < 1/16
  bool unstable = false;                // backlog grows without bound
  stats::TailFit fit;
  double exponent_bound = 0.0;          // -log2(gamma) - 2 gamma^r
};

/// Packets arrive deterministically at `arrival_rate` per slot; each slot serves
/// one packet unless erased (probability gamma from common randomness).
ErasureQueue erasure_schedule(std::size_t packets, double arrival_rate, double gamma, double r, const RandomSeeds& seeds);

/// Toy history embedding: 2^bits codewords of block_len drawn as backward-process
/// stretches; the embedder sends the codeword, the extractor decodes by minimum distance.
struct HistoryEmbedCodebook {
  std::size_t block_len = 4;
  int bits = 4;
  std::vector<double> words;  // 2^bits rows of block_len
  double min_distance = 0.0;  // Euclidean, over distinct pairs

  static HistoryEmbedCodebook make(std::size_t block_len, int bits, double lambda, double omega, std::uint64_t seed);
  std::span<const double> word(std::uint32_t m) const { return {words.data() + m * block_len, block_len}; }
};

/// Side information z_k shifts every codeword (the block is codeword + z_k).
std::vector<double> embed_history_bits(std::span<const std::uint32_t> messages, std::span<const double> side_info,
                                       const HistoryEmbedCodebook& book);
std::vector<std::uint32_t> extract_history_bits(std::span<const double> blocks, std::span<const double> side_info,
                                                const HistoryEmbedCodebook& book);

}  // namespace malab::embedding
