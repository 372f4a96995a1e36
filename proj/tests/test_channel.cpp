#include <doctest.h>

#include <cmath>

#include "malab/channel.hpp"
#include "malab/error.hpp"
#include "malab/tree_code.hpp"

using namespace malab;
using namespace malab::channel;

namespace {

std::vector<std::uint8_t> random_bits(std::size_t n, std::uint64_t key) {
  CounterRng rng(key);
  std::vector<std::uint8_t> b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng() & 1);
  return b;
}

double path_metric(const TreeCode& code, const std::vector<std::vector<double>>& ll, const std::vector<std::uint8_t>& bits,
                   const std::vector<std::uint32_t>& y, std::uint64_t horizon) {
  const auto x = tree_encode(code, bits, horizon);
  double m = 0.0;
  for (std::uint64_t t = 0; t < horizon; ++t) m += ll[x[t]][y[t]];
  return m;
}

}  // namespace

TEST_CASE("dmc: extreme and typical crossover") {
  std::vector<std::uint32_t> x(100000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<std::uint32_t>(i & 1);
  CHECK(dmc_transmit(DmcSpec::bsc(0.0), x, CounterRng(1)) == x);
  const auto inv = dmc_transmit(DmcSpec::bsc(1.0), x, CounterRng(1));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(inv[i] == 1 - x[i]);

  std::vector<std::uint32_t> zeros(1000000, 0);
  const auto y = dmc_transmit(DmcSpec::bsc(0.1), zeros, CounterRng(7));
  std::size_t flips = 0;
  for (auto v : y) flips += v;
  CHECK(std::abs(static_cast<double>(flips) / 1e6 - 0.1) < 1e-3);

  const auto e = dmc_transmit(DmcSpec::bec(0.2), zeros, CounterRng(7));
  std::size_t erased = 0;
  for (auto v : e) {
    CHECK(v != 2);
    erased += v == 1;
  }
  CHECK(std::abs(static_cast<double>(erased) / 1e6 - 0.2) < 2e-3);
}

TEST_CASE("dmc: parsing") {
  CHECK(parse_channel("bsc:0.1").transition[0][1] == doctest::Approx(0.1));
  CHECK(parse_channel("bec:0.3").outputs() == 3);
  CHECK_THROWS_AS(parse_channel("awgn:1"), Error);
  CHECK_THROWS_AS(parse_channel("bsc:1.5"), Error);
  CHECK(parse_rate("1/2") == std::pair<std::uint32_t, std::uint32_t>{1, 2});
  CHECK(parse_rate("3") == std::pair<std::uint32_t, std::uint32_t>{3, 1});
  CHECK_THROWS_AS(parse_rate("x/2"), Error);
  CHECK_THROWS_AS(parse_rate("0/2"), Error);
}

TEST_CASE("tree code: causal, deterministic, uniform labels") {
  const auto code = TreeCode::make(DmcSpec::bsc(0.1), 1, 2, 42);
  CHECK(code.rate() == 0.5);
  CHECK(code.bits_at(1) == 0);
  CHECK(code.bits_at(2) == 1);
  CHECK(code.first_use(0) == 1);
  CHECK(code.first_use(3) == 6);

  auto a = random_bits(40, 1);
  auto b = a;
  b[25] ^= 1;
  const auto xa = tree_encode(code, a, 80);
  const auto xb = tree_encode(code, b, 80);
  CHECK(xa == tree_encode(code, a, 80));
  // Identical up to the use where bit 26 enters the prefix.
  const auto split = code.first_use(26);
  for (std::uint64_t t = 1; t < split; ++t) CHECK(xa[t - 1] == xb[t - 1]);
  std::size_t differ = 0;
  for (std::uint64_t t = split; t <= 80; ++t) differ += xa[t - 1] != xb[t - 1];
  CHECK(differ > 10);

  std::vector<std::uint64_t> counts(2, 0);
  for (std::uint64_t m = 0; m < 200; ++m) {
    const auto x = tree_encode(code, random_bits(50, 100 + m), 100);
    for (auto v : x) ++counts[v];
  }
  CHECK(stats::chi_square_uniform_p(counts) > 0.01);

  const auto other = TreeCode::make(DmcSpec::bsc(0.1), 1, 2, 43);
  CHECK(tree_encode(other, a, 80) != xa);
}

TEST_CASE("ml decoding agrees with brute force on short horizons") {
  const auto dmc = DmcSpec::bsc(0.15);
  const auto ll = log_likelihoods(dmc);
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    const auto code = TreeCode::make(dmc, 1, 2, 1000 + trial);
    for (std::uint64_t horizon : {2u, 5u, 8u}) {
      const auto bits = random_bits(code.bits_at(horizon), trial);
      const auto y = dmc_transmit(dmc, tree_encode(code, bits, horizon), CounterRng(trial));
      const auto est = ml_decode_anytime(code, dmc, y, horizon);
      REQUIRE(est.at_time.size() == horizon);
      const std::size_t depth = code.bits_at(horizon);
      double best = -1e300;
      for (std::uint64_t m = 0; m < (1ULL << depth); ++m) {
        std::vector<std::uint8_t> cand(depth);
        for (std::size_t j = 0; j < depth; ++j) cand[j] = static_cast<std::uint8_t>((m >> j) & 1);
        best = std::max(best, path_metric(code, ll, cand, y, horizon));
      }
      const auto& got = est.at_time[horizon - 1];
      REQUIRE(got.size() == depth);
      CHECK(path_metric(code, ll, got, y, horizon) == doctest::Approx(best).epsilon(1e-12));
    }
  }
}

TEST_CASE("ml scan: serial and parallel agree, noiseless recovery, causality") {
  const auto dmc = DmcSpec::bsc(0.1);
  const auto ll = log_likelihoods(dmc);
  const auto code = TreeCode::make(dmc, 1, 2, 9);
  const std::uint64_t horizon = 30;
  const auto bits = random_bits(15, 3);
  const auto x = tree_encode(code, bits, horizon);
  const auto y = dmc_transmit(dmc, x, CounterRng(11));
  const auto s = ml_scan(code, ll, y, horizon, 0, code.root(), Exec::Serial);
  const auto p = ml_scan(code, ll, y, horizon, 0, code.root(), Exec::Parallel);
  CHECK(s.metric == p.metric);
  CHECK(s.path == p.path);
  CHECK(s.depth == p.depth);

  // Without noise the estimate is always consistent with what was received,
  // and a few uses after a bit enters, ties on it are gone.
  const auto clean = ml_decode_anytime(code, DmcSpec::bsc(0.0), x, horizon);
  const auto& e = clean.at_time[horizon - 1];
  CHECK(path_metric(code, log_likelihoods(DmcSpec::bsc(0.0)), e, x, horizon) == 0.0);
  CHECK(std::equal(e.begin(), e.begin() + 8, bits.begin()));

  // Estimates up to time t depend only on the first t outputs.
  std::vector<std::uint32_t> cut(y.begin(), y.begin() + 12);
  cut.resize(horizon, 0);
  const auto full = ml_decode_anytime(code, dmc, y, horizon);
  const auto part = ml_decode_anytime(code, dmc, cut, horizon);
  for (std::uint64_t t = 1; t <= 12; ++t) CHECK(full.at_time[t - 1] == part.at_time[t - 1]);
}

TEST_CASE("windowed decoder: noiseless commits are exact and causal") {
  const auto dmc = DmcSpec::bsc(0.0);
  const auto code = TreeCode::make(dmc, 1, 4, 5);
  const auto bits = random_bits(200, 8);
  const auto x = tree_encode(code, bits, code.first_use(200));
  const auto w = windowed_decode(code, dmc, x, 10, 3);
  REQUIRE(w.bits.size() <= 200);
  CHECK(w.bits.size() >= 190);
  for (std::size_t i = 0; i < w.bits.size(); ++i) {
    CHECK(w.bits[i] == bits[i]);
    CHECK(w.commit_time[i] >= code.first_use(i + 1));
  }
}

TEST_CASE("anytime reliability degrades with the crossover probability") {
  const auto seeds = RandomSeeds::from_master(3);
  double last = 1e9;
  for (double p : {0.05, 0.1, 0.15}) {
    const auto dmc = DmcSpec::bsc(p);
    const auto code = TreeCode::make(dmc, 1, 2, 17);
    const auto table = measure_anytime_reliability(code, dmc, 24, 2000, seeds);
    REQUIRE(table.delay.size() == table.probability.size());
    for (std::size_t i = 1; i < table.probability.size(); ++i)
      CHECK(table.probability[i] <= table.probability[i - 1] + 0.01);
    CHECK(table.fit.alpha < last);
    last = table.fit.alpha;
  }
}

TEST_CASE("classical block transport") {
  const auto bits = random_bits(3000, 21);
  const auto clean = classical_block_transport(DmcSpec::bsc(0.0), bits, 3, 12, 4, CounterRng(1));
  CHECK(clean.bit_errors == 0);
  CHECK(clean.blocks == 1000);
  CHECK(std::equal(bits.begin(), bits.end(), clean.decoded.begin()));

  const auto dmc = DmcSpec::bsc(0.05);
  const auto noisy = classical_block_transport(dmc, bits, 3, 18, 3, CounterRng(2));
  CHECK(noisy.block_error_rate < 0.02);
  CHECK(noisy.bit_error_rate <= noisy.block_error_rate);
  CHECK_THROWS_AS(classical_block_transport(dmc, bits, 3, 21, 3, CounterRng(2)), Error);

  // Rate 1/4 at blocklength 16 against the random-coding bound.
  const auto bsc = DmcSpec::bsc(0.1);
  const auto many = random_bits(40000, 22);
  const auto r = classical_block_transport(bsc, many, 4, 16, 1, CounterRng(3));
  CHECK(r.blocks == 10000);
  CHECK(r.block_error_rate <= 8.0 * std::exp2(-16.0 * rdmath::random_coding_exponent(bsc, 0.25).exponent));
  // Above capacity the code is refused.
  CHECK_THROWS_AS(classical_block_transport(DmcSpec::bsc(0.3), bits, 3, 4, 3, CounterRng(2)), Error);
}
