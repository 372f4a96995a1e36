#include <doctest.h>

#include <bit>
#include <cmath>

#include "malab/embedding.hpp"
#include "malab/error.hpp"
#include "malab/harness.hpp"

using namespace malab;
using namespace malab::embedding;

namespace {

EmbedConfig cfg_of(std::size_t n, int bits, double delta, double lambda) {
  EmbedConfig c;
  c.n = n;
  c.bits_per_block = bits;
  c.delta = delta;
  c.lambda = lambda;
  return c;
}

std::vector<std::uint32_t> digits(std::uint64_t code, std::size_t k, int bits) {
  std::vector<std::uint32_t> m(k);
  for (std::size_t i = 0; i < k; ++i) m[i] = static_cast<std::uint32_t>((code >> (bits * i)) & ((1u << bits) - 1));
  return m;
}

}  // namespace

TEST_CASE("gap constant") {
  CHECK(gap_constant(cfg_of(2, 1, 1.0, 2.0)) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(gap_constant(cfg_of(4, 2, 1.0, 2.0)) == doctest::Approx(22.0 / 15.0).epsilon(1e-14));
  CHECK(cfg_of(2, 1, 1.0, 2.0).beta() == 1.0);
  CHECK(message_point(cfg_of(2, 1, 1.0, 2.0), 0) == -0.5);
  CHECK(message_point(cfg_of(2, 1, 1.0, 2.0), 1) == 0.5);
  // nR must stay below log2(lambda^n - 1).
  CHECK_THROWS_AS(cfg_of(2, 2, 1.0, 2.0).validate(), Error);
  CHECK_THROWS_AS(gap_constant(cfg_of(2, 2, 1.0, 2.0)), Error);
  CHECK_NOTHROW(cfg_of(4, 3, 1.0, 2.0).validate());
}

TEST_CASE("endpoints of different message sequences stay apart") {
  const auto cfg = cfg_of(2, 1, 1.0, 2.0);
  const double K = gap_constant(cfg);
  const double ln = cfg.lambda_n();
  std::size_t violations = 0;
  double worst = 1e300;
  for (std::size_t k = 1; k <= 6; ++k) {
    const std::uint64_t total = 1ULL << k;
    for (std::uint64_t a = 0; a < total; ++a) {
      const auto ma = digits(a, k, 1);
      const double xa = message_endpoints(ma, cfg).back();
      for (std::uint64_t b = a + 1; b < total; ++b) {
        const auto mb = digits(b, k, 1);
        std::size_t i = 0;
        while (ma[i] == mb[i]) ++i;
        const double xb = message_endpoints(mb, cfg).back();
        const double need = K * std::pow(ln, static_cast<double>(k - 1 - i));
        const double ratio = std::abs(xa - xb) / need;
        worst = std::min(worst, ratio);
        violations += ratio < 1.0 - 1e-12;
      }
    }
  }
  CHECK(violations == 0);
  CHECK(worst >= 1.0);
}

TEST_CASE("extraction survives errors just under half the gap") {
  for (const auto& cfg : {cfg_of(2, 1, 1.0, 2.0), cfg_of(4, 2, 1.0, 2.0)}) {
    const double K = gap_constant(cfg);
    const double ln = cfg.lambda_n();
    CounterRng rng(13);
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t k = 1 + rng() % 6;
      std::vector<std::uint32_t> m(k);
      for (auto& v : m) v = static_cast<std::uint32_t>(rng() % cfg.messages());
      const double x = message_endpoints(m, cfg).back();
      const std::size_t i = 1 + rng() % k;  // prefix M_1..M_i must survive
      const double err = 0.99 * (K / 2.0) * std::pow(ln, static_cast<double>(k - i)) * (rng() & 1 ? 1.0 : -1.0);
      const auto got = decode_prefix(x + err, k, cfg);
      REQUIRE(got.size() == k);
      CHECK(std::equal(m.begin(), m.begin() + static_cast<long>(i), got.begin()));
      CHECK(decode_prefix(x, k, cfg) == m);
    }
  }
}

TEST_CASE("zero-noise extraction inverts embedding for many seeds") {
  const auto cfg = cfg_of(2, 1, 1.0, 2.0);
  std::size_t failures = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto seeds = RandomSeeds::from_master(s);
    CounterRng rng = seeds.channel_rng();
    std::vector<std::uint32_t> m(16);
    for (auto& v : m) v = static_cast<std::uint32_t>(rng() & 1);
    const auto e = embed_endpoint_bits(m, cfg, seeds);
    for (std::size_t k = 0; k < m.size(); ++k)
      CHECK(e.endpoint[k] == doctest::Approx(e.message_part[k] + e.common_part[k]).epsilon(1e-12));
    const auto got = extract_endpoint_bits(e.endpoint, cfg, seeds);
    failures += got.back() != m;
  }
  CHECK(failures == 0);
}

TEST_CASE("embedded block increments stay inside the noise support") {
  const auto cfg = cfg_of(2, 1, 1.0, 2.0);
  const auto seeds = RandomSeeds::from_master(2);
  CounterRng rng(99);
  std::vector<std::uint32_t> m(40);
  for (auto& v : m) v = static_cast<std::uint32_t>(rng() & 1);
  const auto e = embed_endpoint_bits(m, cfg, seeds);
  std::vector<double> w0;
  double prev = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    // X_{kn} - lambda^n X_{(k-1)n} = lambda^{n-1} W0 + W1.
    w0.push_back(e.endpoint[k] - cfg.lambda_n() * prev);
    prev = e.endpoint[k];
  }
  for (double w : w0) CHECK(std::abs(w) <= cfg.beta() + 0.5 * cfg.delta + 1e-9);
}

TEST_CASE("prefix errors fall with delay under heavy-tailed noise") {
  const auto cfg = cfg_of(2, 1, 1.0, 2.0);
  const auto t = harness::embedding_prefix_errors(cfg, 0.1, 200000, 3, "pareto", RandomSeeds::from_master(5));
  REQUIRE(t.delay.size() == 3);
  CHECK(t.delay.front() == 1);
  std::vector<std::uint64_t> totals(t.delay.size(), t.trials);
  const auto fit = stats::fit_exponential_tail(t.errors, totals, 5);
  const double reference = 2.5 * static_cast<double>(cfg.n) * std::log2(cfg.lambda);
  CHECK(fit.alpha >= 0.8 * reference);

  const auto g = harness::embedding_prefix_errors(cfg, 0.1, 20000, 3, "gaussian", RandomSeeds::from_master(5));
  for (std::size_t i = 0; i < g.delay.size(); ++i) CHECK(g.rate[i] <= 1.5 * g.bound[i]);
  CHECK_THROWS_AS(harness::embedding_prefix_errors(cfg, 0.1, 10, 3, "cauchy", RandomSeeds{}), Error);
}

TEST_CASE("erasure queue") {
  const auto none = erasure_schedule(10000, 0.5, 0.0, 0.5, RandomSeeds{});
  for (auto d : none.delay) CHECK(d == 0);
  CHECK_FALSE(none.unstable);

  const auto stable = erasure_schedule(100000, 0.5, 1.0 / 32.0, 0.5, RandomSeeds::from_master(3));
  CHECK_FALSE(stable.unstable);
  CHECK(stable.bound_applies);
  CHECK(stable.exponent_bound == doctest::Approx(5.0 - 2.0 * std::pow(1.0 / 32.0, 0.5)).epsilon(1e-12));
  CHECK(stable.fit.alpha >= 0.8 * stable.exponent_bound);
  std::size_t erased = 0;
  for (auto e : stable.erased) erased += e;
  CHECK(std::abs(static_cast<double>(erased) / static_cast<double>(stable.erased.size()) - 1.0 / 32.0) < 0.003);

  CHECK(erasure_schedule(20000, 1.2, 1.0 / 32.0, 0.5, RandomSeeds{}).unstable);
  CHECK_FALSE(erasure_schedule(1000, 0.5, 0.1, 0.5, RandomSeeds{}).bound_applies);
  CHECK_THROWS_AS(erasure_schedule(10, 0.5, 1.5, 0.5, RandomSeeds{}), Error);
}

TEST_CASE("history embedding codebook") {
  const auto book = HistoryEmbedCodebook::make(4, 4, std::sqrt(2.0), 1.0, 7);
  REQUIRE(book.words.size() == 16 * 4);
  CHECK(book.min_distance > 0.0);
  CHECK(book.min_distance == doctest::Approx(HistoryEmbedCodebook::make(4, 4, std::sqrt(2.0), 1.0, 7).min_distance));

  CounterRng rng(31);
  const std::size_t K = 2000;
  std::vector<std::uint32_t> msgs(K);
  std::vector<double> side(K);
  for (std::size_t k = 0; k < K; ++k) {
    msgs[k] = static_cast<std::uint32_t>(rng() % 16);
    side[k] = rng.uniform(-3.0, 3.0);
  }
  auto blocks = embed_history_bits(msgs, side, book);
  CHECK(extract_history_bits(blocks, side, book) == msgs);

  // Any perturbation shorter than half the minimum distance is harmless.
  for (std::size_t k = 0; k < K; ++k) {
    double dir[4], norm = 0.0;
    for (auto& d : dir) {
      d = rng.normal();
      norm += d * d;
    }
    for (std::size_t i = 0; i < 4; ++i) blocks[k * 4 + i] += 0.49 * book.min_distance * dir[i] / std::sqrt(norm);
  }
  CHECK(extract_history_bits(blocks, side, book) == msgs);

  double last = -1.0;
  for (double sigma : {0.0, 0.1, 0.2, 0.4, 0.8}) {
    auto noisy = embed_history_bits(msgs, side, book);
    CounterRng nr(77);
    for (auto& v : noisy) v += sigma * nr.normal();
    const auto got = extract_history_bits(noisy, side, book);
    std::size_t errors = 0;
    for (std::size_t k = 0; k < K; ++k) errors += std::popcount(got[k] ^ msgs[k]);
    const double ber = static_cast<double>(errors) / static_cast<double>(4 * K);
    CHECK(ber >= last);
    last = ber;
  }
  CHECK(last > 0.05);
  CHECK_THROWS_AS(HistoryEmbedCodebook::make(7, 4, 2.0, 1.0, 1), Error);
}
