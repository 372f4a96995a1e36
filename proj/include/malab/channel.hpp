#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "malab/rdmath.hpp"
#include "malab/rng.hpp"

namespace malab::channel {

using rdmath::DmcSpec;

/// Parses "bsc:<p>" or "bec:<eps>".
DmcSpec parse_channel(const std::string& spec);

/// Output t is drawn from row inputs[t] using draw t of `rng`'s stream.
std::vector<std::uint32_t> dmc_transmit(const DmcSpec& dmc, std::span<const std::uint32_t> inputs, const CounterRng& rng);

/// log P(y | x) table with a large negative finite value for impossible pairs.
std::vector<std::vector<double>> log_likelihoods(const DmcSpec& dmc);

/// Maps a 64-bit hash to an input symbol through a cumulative distribution.
std::uint32_t map_input(std::uint64_t hash, std::span<const double> cdf);
std::vector<double> cumulative(std::span<const double> probs);

struct BlockTransport {
  std::vector<std::uint8_t> decoded;
  std::size_t bit_errors = 0;
  std::size_t block_errors = 0;
  std::size_t blocks = 0;
  double bit_error_rate = 0.0;
  double block_error_rate = 0.0;
};

/// Seeded random block code: 2^bits_per_block codewords of block_len channel
/// uses, ML decoded block by block. Bits are zero-padded to a whole block.
BlockTransport classical_block_transport(const DmcSpec& dmc, std::span<const std::uint8_t> bits, std::size_t bits_per_block,
                                         std::size_t block_len, std::uint64_t code_seed, const CounterRng& noise);

}  // namespace malab::channel
