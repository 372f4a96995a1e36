#include "malab/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "malab/error.hpp"

namespace malab::embedding {

void EmbedConfig::validate() const {
  require(n >= 1 && lambda > 1.0 && delta > 0.0 && bits_per_block >= 1 && bits_per_block <= 30, ErrorKind::InvalidConfig,
          "embedding needs n >= 1, lambda > 1, delta > 0, 1 <= nR <= 30");
  require(static_cast<double>(bits_per_block) < std::log2(lambda_n() - 1.0), ErrorKind::InvalidConfig,
          "bits per block must stay below log2(lambda^n - 1)");
}

double EmbedConfig::beta() const { return std::pow(lambda, static_cast<double>(n) - 1.0) * delta / 2.0; }
double EmbedConfig::lambda_n() const { return std::pow(lambda, static_cast<double>(n)); }

double gap_constant(const EmbedConfig& cfg) {
  cfg.validate();
  return 2.0 * cfg.beta() * (std::exp2(-cfg.bits_per_block) - 1.0 / (cfg.lambda_n() - 1.0));
}

double message_point(const EmbedConfig& cfg, std::uint32_t m) {
  return -1.0 + std::exp2(1.0 - cfg.bits_per_block) * (static_cast<double>(m) + 0.5);
}

std::vector<double> message_endpoints(std::span<const std::uint32_t> messages, const EmbedConfig& cfg) {
  cfg.validate();
  std::vector<double> x(messages.size());
  double prev = 0.0;
  for (std::size_t k = 0; k < messages.size(); ++k) {
    require(messages[k] < cfg.messages(), ErrorKind::InvalidArgument, "message outside 0..2^nR-1");
    prev = cfg.lambda_n() * prev + cfg.beta() * message_point(cfg, messages[k]);
    x[k] = prev;
  }
  return x;
}

namespace {

// Common-randomness contribution of block k (1-based) to the endpoint.
double common_increment(const EmbedConfig& cfg, const CounterRng& rng, std::size_t k) {
  const CounterRng b = rng.fork(k);
  const double u = (2.0 * b.uniform_at(0) - 1.0) * std::exp2(-cfg.bits_per_block);
  double acc = cfg.beta() * u;
  for (std::size_t i = 1; i < cfg.n; ++i) {
    const double w = cfg.delta * (b.uniform_at(i) - 0.5);
    acc += std::pow(cfg.lambda, static_cast<double>(cfg.n - 1 - i)) * w;
  }
  return acc;
}

std::vector<double> common_endpoints(std::size_t K, const EmbedConfig& cfg, const RandomSeeds& seeds) {
  const CounterRng rng = seeds.source_rng().fork("embedding");
  std::vector<double> c(K);
  double prev = 0.0;
  for (std::size_t k = 1; k <= K; ++k) {
    prev = cfg.lambda_n() * prev + common_increment(cfg, rng, k);
    c[k - 1] = prev;
  }
  return c;
}

}  // namespace

EmbeddedEndpoints embed_endpoint_bits(std::span<const std::uint32_t> messages, const EmbedConfig& cfg, const RandomSeeds& seeds) {
  EmbeddedEndpoints e;
  e.message_part = message_endpoints(messages, cfg);
  e.common_part = common_endpoints(messages.size(), cfg, seeds);
  e.endpoint.resize(messages.size());
  for (std::size_t k = 0; k < messages.size(); ++k) e.endpoint[k] = e.message_part[k] + e.common_part[k];
  return e;
}

std::vector<std::uint32_t> decode_prefix(double x_prime, std::size_t k, const EmbedConfig& cfg) {
  const double lam_n = cfg.lambda_n(), beta = cfg.beta();
  const double reach = 1.0 - std::exp2(-cfg.bits_per_block);  // max |Mtilde|
  std::vector<std::uint32_t> out(k);
  double centre = 0.0;
  for (std::size_t j = 1; j <= k; ++j) {
    const double scale = std::pow(lam_n, static_cast<double>(k - j));
    // Remaining digits j+1..k can move the value by at most this much.
    double tail = 0.0;
    for (std::size_t m = j + 1; m <= k; ++m) tail += std::pow(lam_n, static_cast<double>(k - m));
    tail *= beta * reach;
    std::uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::uint32_t m = 0; m < cfg.messages(); ++m) {
      const double c = centre + scale * beta * message_point(cfg, m);
      const double d = std::max(0.0, std::abs(x_prime - c) - tail);
      if (d < best_d) {
        best_d = d;
        best = m;
      }
    }
    out[j - 1] = best;
    centre += scale * beta * message_point(cfg, best);
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> extract_endpoint_bits(std::span<const double> reconstructed, const EmbedConfig& cfg,
                                                              const RandomSeeds& seeds) {
  cfg.validate();
  const auto common = common_endpoints(reconstructed.size(), cfg, seeds);
  std::vector<std::vector<std::uint32_t>> out(reconstructed.size());
  for (std::size_t k = 1; k <= reconstructed.size(); ++k) out[k - 1] = decode_prefix(reconstructed[k - 1] - common[k - 1], k, cfg);
  return out;
}

ErasureQueue erasure_schedule(std::size_t packets, double arrival_rate, double gamma, double r, const RandomSeeds& seeds) {
  require(arrival_rate > 0.0 && gamma >= 0.0 && gamma < 1.0 && r > 0.0, ErrorKind::InvalidConfig,
          "queue needs arrival rate > 0, gamma in [0,1), r > 0");
  ErasureQueue q;
  q.bound_applies = gamma < 1.0 / 16.0;
  q.exponent_bound = gamma > 0.0 ? -std::log2(gamma) - 2.0 * std::pow(gamma, r) : std::numeric_limits<double>::infinity();
  q.delay.assign(packets, 0);
  const CounterRng coin = seeds.source_rng().fork("erasure");
  // Packet p arrives at slot floor(p / arrival_rate).
  std::size_t next = 0, served = 0, slot = 0;
  const std::size_t slot_cap = static_cast<std::size_t>(static_cast<double>(packets) / std::min(arrival_rate, 1.0) * 4.0) + 64;
  std::vector<std::size_t> arrival(packets);
  for (std::size_t p = 0; p < packets; ++p) arrival[p] = static_cast<std::size_t>(std::floor(static_cast<double>(p) / arrival_rate));
  for (; served < packets && slot < slot_cap; ++slot) {
    while (next < packets && arrival[next] <= slot) ++next;
    const bool erased = coin.uniform_at(slot) < gamma;
    q.erased.push_back(erased ? 1 : 0);
    if (!erased && served < next) {
      q.delay[served] = static_cast<std::int64_t>(slot - arrival[served]);
      ++served;
    }
    q.backlog.push_back(next - served);
  }
  // Unstable when the backlog at the last arrival keeps growing linearly.
  if (packets > 0) {
    const std::size_t last = std::min(arrival.back(), q.backlog.size() - 1);
    const double b_end = static_cast<double>(q.backlog[last]);
    const double b_mid = static_cast<double>(q.backlog[last / 2]);
    q.unstable = b_end > 2.0 * std::sqrt(static_cast<double>(packets)) && b_end > 1.5 * b_mid;
  }
  if (served < packets) q.unstable = true;
  q.delay.resize(served);
  q.fit = stats::fit_survival_tail(q.delay);
  return q;
}

HistoryEmbedCodebook HistoryEmbedCodebook::make(std::size_t block_len, int bits, double lambda, double omega, std::uint64_t seed) {
  require(block_len >= 1 && block_len <= 6 && bits >= 1 && bits <= 8, ErrorKind::InvalidConfig,
          "toy history embedding needs block_len <= 6 and bits <= 8");
  HistoryEmbedCodebook b;
  b.block_len = block_len;
  b.bits = bits;
  const std::size_t size = std::size_t{1} << bits;
  b.words.resize(size * block_len);
  const CounterRng rng(stream_key(seed, "history_embed"));
  for (std::size_t c = 0; c < size; ++c) {
    CounterRng r = rng.fork(c);
    // Stable backward stretch ending at 0.
    double next = 0.0;
    for (std::size_t i = block_len; i-- > 0;) {
      const double w = omega * (r.uniform() - 0.5);
      next = (next - w) / lambda;
      b.words[c * block_len + i] = next;
    }
  }
  b.min_distance = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < size; ++a)
    for (std::size_t c = a + 1; c < size; ++c) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < block_len; ++i) {
        const double d = b.words[a * block_len + i] - b.words[c * block_len + i];
        d2 += d * d;
      }
      b.min_distance = std::min(b.min_distance, std::sqrt(d2));
    }
  return b;
}

std::vector<double> embed_history_bits(std::span<const std::uint32_t> messages, std::span<const double> side_info,
                                       const HistoryEmbedCodebook& book) {
  require(side_info.size() == messages.size(), ErrorKind::InvalidArgument, "one side-information value per block");
  std::vector<double> out(messages.size() * book.block_len);
  for (std::size_t k = 0; k < messages.size(); ++k) {
    require(messages[k] < (1u << book.bits), ErrorKind::InvalidArgument, "message outside the codebook");
    const auto w = book.word(messages[k]);
    for (std::size_t i = 0; i < book.block_len; ++i) out[k * book.block_len + i] = w[i] + side_info[k];
  }
  return out;
}

std::vector<std::uint32_t> extract_history_bits(std::span<const double> blocks, std::span<const double> side_info,
                                                const HistoryEmbedCodebook& book) {
  const std::size_t K = side_info.size();
  require(blocks.size() == K * book.block_len, ErrorKind::InvalidArgument, "block count and side information disagree");
  std::vector<std::uint32_t> out(K);
  const std::uint32_t size = 1u << book.bits;
  for (std::size_t k = 0; k < K; ++k) {
    double best_d = std::numeric_limits<double>::infinity();
    for (std::uint32_t m = 0; m < size; ++m) {
      const auto w = book.word(m);
      double d = 0.0;
      for (std::size_t i = 0; i < book.block_len; ++i) {
        const double e = blocks[k * book.block_len + i] - side_info[k] - w[i];
        d += e * e;
      }
      if (d < best_d) {
        best_d = d;
        out[k] = m;
      }
    }
  }
  return out;
}

}  // namespace malab::embedding
