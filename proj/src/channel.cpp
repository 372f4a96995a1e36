#include "malab/channel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "malab/error.hpp"

namespace malab::channel {

DmcSpec parse_channel(const std::string& spec) {
  const auto colon = spec.find(':');
  require(colon != std::string::npos, ErrorKind::InvalidArgument, "channel must look like bsc:<p> or bec:<eps>");
  const std::string kind = spec.substr(0, colon);
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(spec.substr(colon + 1), &used);
    require(used == spec.size() - colon - 1, ErrorKind::InvalidArgument, "trailing characters in channel spec");
  } catch (const std::logic_error&) {
    fail(ErrorKind::InvalidArgument, "bad channel parameter in '" + spec + "'");
  }
  if (kind == "bsc") return DmcSpec::bsc(v);
  if (kind == "bec") return DmcSpec::bec(v);
  fail(ErrorKind::InvalidArgument, "unknown channel kind '" + kind + "'");
}

std::vector<double> cumulative(std::span<const double> probs) {
  std::vector<double> c(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) c[i] = (acc += probs[i]);
  if (!c.empty()) c.back() = 1.0;
  return c;
}

std::uint32_t map_input(std::uint64_t hash, std::span<const double> cdf) {
  const double u = static_cast<double>(hash >> 11) * 0x1.0p-53;
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

std::vector<std::uint32_t> dmc_transmit(const DmcSpec& dmc, std::span<const std::uint32_t> inputs, const CounterRng& rng) {
  std::vector<std::vector<double>> rows;
  rows.reserve(dmc.inputs());
  for (const auto& r : dmc.transition) rows.push_back(cumulative(r));
  std::vector<std::uint32_t> out(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    require(inputs[t] < dmc.inputs(), ErrorKind::InvalidArgument, "channel input outside the alphabet");
    out[t] = map_input(rng.at(t), rows[inputs[t]]);
  }
  return out;
}

std::vector<std::vector<double>> log_likelihoods(const DmcSpec& dmc) {
  std::vector<std::vector<double>> t(dmc.inputs(), std::vector<double>(dmc.outputs()));
  for (std::size_t x = 0; x < dmc.inputs(); ++x)
    for (std::size_t y = 0; y < dmc.outputs(); ++y) {
      const double p = dmc.transition[x][y];
      t[x][y] = p > 0.0 ? std::log(p) : -1e6;
    }
  return t;
}

BlockTransport classical_block_transport(const DmcSpec& dmc, std::span<const std::uint8_t> bits, std::size_t bits_per_block,
                                         std::size_t block_len, std::uint64_t code_seed, const CounterRng& noise) {
  dmc.validate();
  require(bits_per_block >= 1 && bits_per_block <= 16, ErrorKind::InvalidConfig, "block code carries 1..16 bits");
  require(block_len >= 1 && block_len <= 20, ErrorKind::InvalidConfig, "block length is capped at 20 channel uses");
  const double rate = static_cast<double>(bits_per_block) / static_cast<double>(block_len);
  require(rate < rdmath::capacity(dmc), ErrorKind::InvalidConfig, "block code rate is not below capacity");

  const auto input = rdmath::is_symmetric(dmc) ? std::vector<double>(dmc.inputs(), 1.0 / static_cast<double>(dmc.inputs()))
                                               : rdmath::capacity_achieving_input(dmc);
  const auto cdf = cumulative(input);
  const std::size_t words = std::size_t{1} << bits_per_block;
  std::vector<std::uint32_t> book(words * block_len);
  const std::uint64_t key = stream_key(code_seed, "block_code");
  for (std::size_t m = 0; m < words; ++m)
    for (std::size_t j = 0; j < block_len; ++j) book[m * block_len + j] = map_input(mix64(key ^ mix64(m * 131 + j + 1)), cdf);
  const auto ll = log_likelihoods(dmc);

  BlockTransport out;
  out.blocks = (bits.size() + bits_per_block - 1) / bits_per_block;
  out.decoded.assign(out.blocks * bits_per_block, 0);
  std::vector<std::uint32_t> sent(out.blocks * block_len);
  std::vector<std::size_t> msgs(out.blocks);
  for (std::size_t b = 0; b < out.blocks; ++b) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < bits_per_block; ++j) {
      const std::size_t i = b * bits_per_block + j;
      m = (m << 1) | (i < bits.size() ? (bits[i] & 1u) : 0u);
    }
    msgs[b] = m;
    std::copy_n(book.begin() + static_cast<std::ptrdiff_t>(m * block_len), block_len, sent.begin() + static_cast<std::ptrdiff_t>(b * block_len));
  }
  const auto recv = dmc_transmit(dmc, sent, noise);
  for (std::size_t b = 0; b < out.blocks; ++b) {
    std::size_t best = 0;
    double best_m = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < words; ++m) {
      double acc = 0.0;
      for (std::size_t j = 0; j < block_len; ++j) acc += ll[book[m * block_len + j]][recv[b * block_len + j]];
      if (acc > best_m) {
        best_m = acc;
        best = m;
      }
    }
    out.block_errors += best != msgs[b];
    for (std::size_t j = 0; j < bits_per_block; ++j) {
      const auto bit = static_cast<std::uint8_t>((best >> (bits_per_block - 1 - j)) & 1u);
      out.decoded[b * bits_per_block + j] = bit;
      const std::size_t i = b * bits_per_block + j;
      if (i < bits.size()) out.bit_errors += bit != (bits[i] & 1u);
    }
  }
  out.decoded.resize(bits.size());
  out.bit_error_rate = bits.empty() ? 0.0 : static_cast<double>(out.bit_errors) / static_cast<double>(bits.size());
  out.block_error_rate = out.blocks == 0 ? 0.0 : static_cast<double>(out.block_errors) / static_cast<double>(out.blocks);
  return out;
}

}  // namespace malab::channel
