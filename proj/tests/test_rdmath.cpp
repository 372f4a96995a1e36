#include <doctest.h>

#include <cmath>

#include "malab/error.hpp"
#include "malab/rdmath.hpp"

using namespace malab;
using namespace malab::rdmath;

namespace {

// Gallager E0 for BSC(p) with uniform inputs, written out directly.
double bsc_e0(double p, double rho) {
  const double s = 1.0 / (1.0 + rho);
  return rho - (1.0 + rho) * std::log2(std::pow(p, s) + std::pow(1.0 - p, s));
}

double bsc_er_grid(double p, double rate) {
  double best = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const double rho = i * 1e-4;
    best = std::max(best, bsc_e0(p, rho) - rho * rate);
  }
  return best;
}

}  // namespace

TEST_CASE("waterfill: kappa at the spectrum peak gives rate log2(lambda), D = 1/3") {
  const auto w = waterfill_point(2.0, 1.0, 1.0);
  CHECK(w.rate == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w.distortion == doctest::Approx(1.0 / std::sqrt(25.0 - 16.0)).epsilon(1e-9));
  const auto big = waterfill_point(2.0, 1.0, 10.0);
  CHECK(big.rate == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(big.distortion == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("waterfill: small kappa matches the log-spectrum asymptote") {
  // Below the spectrum minimum D = kappa and R = log2(lambda) + 0.5 log2(1/kappa) + 0.5 mean log2 S,
  // with mean log2 S = -log2((5 + 3) / 2) = -2 for lambda = 2.
  const double kappa = 1e-6;
  const auto w = waterfill_point(2.0, 1.0, kappa);
  CHECK(w.distortion == doctest::Approx(kappa).epsilon(1e-9));
  CHECK(w.rate == doctest::Approx(1.0 + 0.5 * std::log2(1.0 / kappa) - 1.0).epsilon(1e-9));
}

TEST_CASE("waterfill: forward and backward rates differ by log2(lambda)") {
  const auto grid = log_grid(1e-4, 5.0, 20);
  for (double lambda : {1.5, 2.0, 4.0}) {
    const auto f = rd_curve_forward(lambda, 1.0, grid);
    const auto b = rd_curve_backward(lambda, 1.0, grid);
    REQUIRE(f.points.size() == 20);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(std::abs(f.points[i].rate - b.points[i].rate - std::log2(lambda)) < 1e-12);
      CHECK(f.points[i].distortion == b.points[i].distortion);
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
      CHECK(f.points[i].distortion >= f.points[i - 1].distortion);
      CHECK(f.points[i].rate <= f.points[i - 1].rate);
    }
  }
  CHECK(distortion_at_rate(2.0, 1.0, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(distortion_at_rate(2.0, 1.0, 0.0, true) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("waterfill: distortion and rate inverses agree") {
  for (double r : {1.2, 2.0, 3.5}) {
    const double d = distortion_at_rate(2.0, 1.0, r);
    CHECK(rate_at_distortion(2.0, 1.0, d) == doctest::Approx(r).epsilon(1e-9));
  }
  // White region closed form: D_bwd(R) = 2^-2R / lambda^2 ... at lambda = 2, sigma = 1.
  CHECK(distortion_at_rate(2.0, 1.0, 2.0, true) == doctest::Approx(1.0 / 64.0).epsilon(1e-9));
}

TEST_CASE("sequential rate") {
  CHECK(rd_sequential(2.0, 1.0 / 3.0) == doctest::Approx(0.5 * std::log2(7.0)).epsilon(1e-12));
  CHECK(rd_sequential(2.0, 1.0) == doctest::Approx(0.5 * std::log2(5.0)).epsilon(1e-12));
  CHECK(rd_sequential(2.0, 1e12) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::isinf(distortion_sequential(2.0, 1.0)));
  CHECK(distortion_sequential(2.0, 0.5 * std::log2(7.0)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("phase transition: water-filling stays bounded while the causal curve diverges") {
  const double cap = 1.0 / (4.0 - 1.0);
  double prev_seq = 0.0;
  for (double excess : {0.1, 0.01, 0.001}) {
    CHECK(distortion_at_rate(2.0, 1.0, 1.0 + excess) <= cap + 1e-9);
    const double seq = distortion_sequential(2.0, 1.0 + excess);
    CHECK(seq > prev_seq);
    prev_seq = seq;
  }
  CHECK(prev_seq > 100.0);
}

TEST_CASE("entropy bound") {
  const double expect = 7.0 + 1.0 + 0.0 + 4.0 + 4.0 + (5.0 + std::log(2.0)) / (2.0 * std::log(2.0));
  CHECK(entropy_bound(4.0, 2.0, 1.0 / 16.0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(entropy_bound(4.0, 2.0, 1.0 / 64.0) > entropy_bound(4.0, 2.0, 1.0 / 16.0));
  CHECK_THROWS_AS(entropy_bound(1.0 / 512.0, 2.0, 1.0 / 16.0), Error);
}

TEST_CASE("capacity by Blahut-Arimoto") {
  CHECK(capacity(DmcSpec::bsc(0.1)) == doctest::Approx(1.0 - binary_entropy(0.1)).epsilon(1e-9));
  CHECK(capacity(DmcSpec::bsc(0.5)) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(capacity(DmcSpec::bec(0.2)) == doctest::Approx(0.8).epsilon(1e-9));
  // Z channel: closed form log2(1 + (1-q) q^(q/(1-q))).
  const double q = 0.3;
  DmcSpec z{{{1.0, 0.0}, {q, 1.0 - q}}};
  CHECK(capacity(z) == doctest::Approx(std::log2(1.0 + (1.0 - q) * std::pow(q, q / (1.0 - q)))).epsilon(1e-8));
}

TEST_CASE("random coding exponent: BSC against a rho grid") {
  for (double p : {0.05, 0.1}) {
    for (double r : {0.1, 0.25, 0.4}) {
      const auto e = random_coding_exponent(DmcSpec::bsc(p), r);
      CHECK(e.exponent == doctest::Approx(bsc_er_grid(p, r)).epsilon(1e-6));
      CHECK_FALSE(e.capacity_exceeded);
    }
  }
  CHECK(random_coding_exponent(DmcSpec::bsc(0.1), 0.25).exponent == doctest::Approx(0.0819575373).epsilon(1e-8));
}

TEST_CASE("random coding exponent: shape and edge cases") {
  const auto bsc = DmcSpec::bsc(0.1);
  double prev = 1e9;
  for (double r = 0.0; r < 0.53; r += 0.02) {
    const double e = random_coding_exponent(bsc, r).exponent;
    CHECK(e <= prev + 1e-12);
    prev = e;
  }
  // Below the critical rate the slope is -1.
  const double e0_1 = bsc_e0(0.1, 1.0);
  CHECK(random_coding_exponent(bsc, 0.05).exponent == doctest::Approx(e0_1 - 0.05).epsilon(1e-9));
  const auto at_cap = random_coding_exponent(bsc, capacity(bsc));
  CHECK(at_cap.exponent == doctest::Approx(0.0).epsilon(1e-9));
  const auto above = random_coding_exponent(bsc, 0.9);
  CHECK(above.exponent == 0.0);
  CHECK(above.capacity_exceeded);
  CHECK(random_coding_exponent(DmcSpec::bsc(0.0), 0.5).exponent == kExponentCap);
}

TEST_CASE("random coding exponent: asymmetric channel against a joint grid") {
  const double q = 0.3, r = 0.2;
  DmcSpec z{{{1.0, 0.0}, {q, 1.0 - q}}};
  CHECK_FALSE(is_symmetric(z));
  double best = 0.0;
  for (int i = 1; i < 400; ++i) {
    const double p1 = i / 400.0;
    const std::vector<double> in{1.0 - p1, p1};
    for (int j = 0; j <= 200; ++j) best = std::max(best, gallager_e0(z, j / 200.0, in) - j / 200.0 * r);
  }
  const auto e = random_coding_exponent(z, r);
  CHECK(e.exponent >= best - 1e-9);
  CHECK(e.exponent <= best + 1e-3);
}

TEST_CASE("dmc validation") {
  CHECK_THROWS_AS((DmcSpec{{{0.5, 0.4}, {0.5, 0.5}}}.validate()), Error);
  CHECK(is_noiseless(DmcSpec::bsc(0.0)));
  CHECK_FALSE(is_noiseless(DmcSpec::bsc(0.01)));
  CHECK(is_symmetric(DmcSpec::bsc(0.2)));
}
