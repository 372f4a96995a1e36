#include <doctest.h>

#include <cmath>
#include <sstream>

#include "malab/error.hpp"
#include "malab/process.hpp"
#include "malab/stats.hpp"

using namespace malab;
using namespace malab::process;

namespace {

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
double triangle_pdf(double x) { return std::max(0.0, 1.0 - std::abs(x)); }
double unit_uniform_pdf(double) { return 1.0; }

ProcessParams params(double lambda, NoiseModel noise, double omega0, std::size_t horizon) {
  ProcessParams p;
  p.lambda = lambda;
  p.noise = noise;
  p.omega0 = omega0;
  p.horizon = horizon;
  return p;
}

}  // namespace

TEST_CASE("forward: zero noise and zero start stays at zero") {
  const std::vector<double> w(4, 0.0);
  const auto t = simulate_forward(params(2.0, BoundedUniform{1.0}, 0.0, 5), 0.0, w);
  for (double v : t.values) CHECK(v == 0.0);
}

TEST_CASE("forward: a single impulse doubles each step") {
  const std::vector<double> w{1, 0, 0, 0};
  const auto t = simulate_forward(params(2.0, BoundedUniform{1.0}, 0.0, 5), 0.0, w);
  const std::vector<double> expect{0, 1, 2, 4, 8};
  CHECK(t.values == expect);
}

TEST_CASE("forward: gaussian noise has zero mean and reproduces the path") {
  const auto p = params(2.0, Gaussian{1.0}, 0.0, 1000000);
  const auto t = simulate_forward(p, RandomSeeds{});
  CHECK(t.noise.size() == p.horizon - 1);
  CHECK(std::abs(stats::mean(t.noise)) < 3e-3);
  // Early on the values are finite and give back the recorded noise.
  for (std::size_t i = 0; i < 16; ++i) CHECK(t.values[i + 1] - 2.0 * t.values[i] == doctest::Approx(t.noise[i]).epsilon(1e-6));
}

TEST_CASE("forward: bounded noise stays inside its support and seeds reproduce runs") {
  const auto p = params(1.5, BoundedUniform{0.75}, 0.1, 5000);
  const auto a = simulate_forward(p, RandomSeeds::from_master(9));
  const auto b = simulate_forward(p, RandomSeeds::from_master(9));
  const auto c = simulate_forward(p, RandomSeeds::from_master(10));
  for (double w : a.noise) CHECK(std::abs(w) <= 0.375);
  CHECK(std::abs(a.x0) <= 0.05);
  CHECK(a.noise == b.noise);
  CHECK(a.x0 == b.x0);
  CHECK(a.noise != c.noise);
}

TEST_CASE("forward: invalid parameters are refused") {
  CHECK_THROWS_AS(simulate_forward(params(2.0, BoundedUniform{1.0}, 0.0, 0), RandomSeeds{}), Error);
  CHECK_THROWS_AS(simulate_forward(params(0.9, BoundedUniform{1.0}, 0.0, 5), RandomSeeds{}), Error);
}

TEST_CASE("backward: stationary variance and terminal step") {
  const auto p = params(2.0, Gaussian{1.0}, 0.0, 1000000);
  const auto t = simulate_backward(p, RandomSeeds{});
  // sigma^2 lambda^-2 / (1 - lambda^-2) = 1/3
  CHECK(std::abs(stats::variance(t.values) / (1.0 / 3.0) - 1.0) < 0.01);

  std::vector<double> w(6, 0.0);
  w.back() = 1.0;
  const auto s = simulate_backward(params(2.0, BoundedUniform{2.0}, 0.0, 6), w);
  CHECK(s.values[5] == -0.5);
  CHECK(s.values[4] == -0.25);
}

TEST_CASE("forward and backward paths differ by lambda^(t-1) Z") {
  for (std::size_t T : {8u, 33u, 64u}) {
    const double lambda = 1.7;
    CounterRng rng(T);
    std::vector<double> w(T);
    for (auto& v : w) v = rng.uniform(-0.5, 0.5);
    const auto fwd = simulate_forward(params(lambda, BoundedUniform{1.0}, 0.0, T + 1), 0.0, w);
    const auto bwd = simulate_backward(params(lambda, BoundedUniform{1.0}, 0.0, T), w);
    double z = 0.0;
    for (std::size_t i = 0; i < T; ++i) z += std::pow(lambda, -static_cast<double>(i)) * w[i];
    for (std::size_t t = 1; t < T; ++t) {
      const double lhs = fwd.values[t];
      const double rhs = std::pow(lambda, static_cast<double>(t) - 1.0) * z + bwd.values[t];
      CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("decompose: uniform density needs no residual") {
  const auto d = tabulate(-0.5, 0.5, 64, unit_uniform_pdf);
  const auto m = decompose_noise(d, 0.1);
  CHECK(m.gamma == 0.0);
  CHECK(m.delta == 1.0);
  CHECK(m.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("decompose: tabulated gaussian reaches the target") {
  const auto d = tabulate(-8.0, 8.0, 16 * 1024, std_normal_pdf);
  // Renormalize the tabulation to within 1e-9.
  TabulatedDensity nd = d;
  const double mass = d.mass();
  for (auto& v : nd.values) v /= mass;
  const auto m = decompose_noise(nd, 0.05);
  CHECK(m.gamma <= 0.05);
  CHECK(m.total_mass() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("decompose: triangular gamma equals the lower Riemann sum") {
  const auto d = tabulate(-1.0, 1.0, 256, triangle_pdf);
  for (double target : {0.3, 0.1, 0.01}) {
    const auto m = decompose_noise(d, target);
    double lower = 0.0;
    const auto bins = static_cast<std::size_t>(std::llround(2.0 / m.delta));
    for (std::size_t b = 0; b < bins; ++b) {
      const double a = -1.0 + m.delta * static_cast<double>(b);
      lower += m.delta * std::min(triangle_pdf(a), triangle_pdf(a + m.delta));
    }
    CHECK(m.gamma == doctest::Approx(1.0 - lower).epsilon(1e-12));
    CHECK(m.gamma <= target);
  }
}

TEST_CASE("decompose: unreachable target fails") {
  const auto d = tabulate(-1.0, 1.0, 256, triangle_pdf);
  CHECK_THROWS_AS(decompose_noise(d, 0.0), Error);
}

TEST_CASE("mixture: branches and resampled distribution") {
  const auto d = tabulate(-1.0, 1.0, 256, triangle_pdf);
  const auto m = decompose_noise(d, 0.05);
  CounterRng rng(77);
  std::vector<double> xs(1000000);
  for (auto& x : xs) {
    const auto s = sample_mixture(m, rng);
    if (s.coin) {
      CHECK(s.value == s.tail);
    } else {
      CHECK(std::abs(s.value - s.grid) <= m.delta / 2.0);
    }
    x = s.value;
  }
  CHECK(stats::ks_distance(xs, [&](double x) { return d.cdf(x); }) < 0.002);
}

TEST_CASE("trajectory csv round trip") {
  const auto p = params(2.0, BoundedUniform{1.0}, 0.0625, 40);
  const auto t = simulate_forward(p, RandomSeeds::from_master(3));
  std::stringstream ss;
  write_trajectory_csv(ss, t);
  const auto back = read_trajectory_csv(ss);
  CHECK(back.lambda == 2.0);
  CHECK(back.noise == "uniform:1");
  CHECK(back.values == t.values);
}
