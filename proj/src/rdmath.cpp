#include "malab/rdmath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "malab/error.hpp"

namespace malab::rdmath {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kStartPanels = std::size_t{1} << 14;
constexpr std::size_t kMaxPanels = std::size_t{1} << 24;
constexpr double kQuadTol = 1e-9;

void check_source(double lambda, double sigma) {
  require(std::isfinite(lambda) && lambda > 1.0, ErrorKind::InvalidArgument, "lambda must be > 1");
  require(std::isfinite(sigma) && sigma > 0.0, ErrorKind::InvalidArgument, "sigma must be > 0");
}

// Simpson on [a, b], doubling panels until the relative change is below tolerance.
template <class F>
double integrate(const F& f, double a, double b, Exec exec) {
  if (b <= a) return 0.0;
  std::size_t panels = kStartPanels;
  double prev = simpson(f, a, b, panels, exec);
  while (panels < kMaxPanels) {
    panels *= 2;
    const double cur = simpson(f, a, b, panels, exec);
    const double scale = std::max(std::abs(cur), 1e-300);
    if (std::abs(cur - prev) <= kQuadTol * scale || cur == prev) return cur;
    prev = cur;
  }
  fail(ErrorKind::NumericFailure, "water-filling quadrature did not converge");
}

double smax(double lambda, double sigma) { return sigma * sigma / ((lambda - 1.0) * (lambda - 1.0)); }
double smin(double lambda, double sigma) { return sigma * sigma / ((lambda + 1.0) * (lambda + 1.0)); }
double stationary_variance(double lambda, double sigma) { return sigma * sigma / (lambda * lambda - 1.0); }

// Rate and distortion without the log2(lambda) term. The spectrum is even and
// decreasing on [0, pi], so it crosses the water line at most once, at w*.
WaterfillPoint waterfill_core(double lambda, double sigma, double kappa, Exec exec) {
  check_source(lambda, sigma);
  require(std::isfinite(kappa) && kappa > 0.0, ErrorKind::InvalidArgument, "kappa must be > 0");
  WaterfillPoint p{kappa, 0.0, 0.0};
  const double s2 = sigma * sigma;
  const double c = (1.0 + lambda * lambda - s2 / kappa) / (2.0 * lambda);
  const auto S = [=](double w) { return spectrum(lambda, sigma, w); };
  const auto log_ratio = [=](double w) { return 0.5 * std::log2(S(w) / kappa); };

  if (c >= 1.0) {  // water above the spectrum everywhere
    p.distortion = integrate(S, 0.0, kPi, exec) / kPi;
    p.rate = 0.0;
    return p;
  }
  if (c <= -1.0) {  // spectrum above the water everywhere
    p.distortion = kappa;
    p.rate = integrate(log_ratio, 0.0, kPi, exec) / kPi;
    return p;
  }
  const double wstar = std::acos(c);
  p.distortion = (kappa * wstar + integrate(S, wstar, kPi, exec)) / kPi;
  p.rate = integrate(log_ratio, 0.0, wstar, exec) / kPi;
  return p;
}

// Bisection on log kappa for a monotone map g(kappa) against target.
template <class G>
double bisect_kappa(const G& g, double target, double lo, double hi, bool decreasing) {
  double a = std::log(lo), b = std::log(hi);
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    const double mid = 0.5 * (a + b);
    const double v = g(std::exp(mid));
    const bool go_right = decreasing ? (v > target) : (v < target);
    (go_right ? a : b) = mid;
  }
  return std::exp(0.5 * (a + b));
}

}  // namespace

void DmcSpec::validate() const {
  require(!transition.empty() && outputs() > 0, ErrorKind::InvalidArgument, "DMC needs at least one input and output");
  for (const auto& row : transition) {
    require(row.size() == outputs(), ErrorKind::InvalidArgument, "DMC rows must have equal length");
    double sum = 0.0;
    for (double v : row) {
      require(std::isfinite(v) && v >= 0.0, ErrorKind::InvalidArgument, "DMC entries must be >= 0");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-12, ErrorKind::InvalidArgument, "DMC rows must sum to 1");
  }
}

DmcSpec DmcSpec::bsc(double p) {
  require(p >= 0.0 && p <= 1.0, ErrorKind::InvalidArgument, "BSC crossover must be in [0,1]");
  return DmcSpec{{{1.0 - p, p}, {p, 1.0 - p}}};
}

DmcSpec DmcSpec::bec(double eps) {
  require(eps >= 0.0 && eps <= 1.0, ErrorKind::InvalidArgument, "erasure probability must be in [0,1]");
  return DmcSpec{{{1.0 - eps, eps, 0.0}, {0.0, eps, 1.0 - eps}}};
}

double spectrum(double lambda, double sigma, double omega) {
  return sigma * sigma / (1.0 - 2.0 * lambda * std::cos(omega) + lambda * lambda);
}

WaterfillPoint waterfill_point(double lambda, double sigma, double kappa, Exec exec) {
  WaterfillPoint p = waterfill_core(lambda, sigma, kappa, exec);
  p.rate += std::log2(lambda);
  return p;
}

WaterfillPoint waterfill_point_backward(double lambda, double sigma, double kappa, Exec exec) {
  return waterfill_core(lambda, sigma, kappa, exec);
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  require(lo > 0.0 && hi >= lo && points >= 1, ErrorKind::InvalidArgument, "log grid needs 0 < lo <= hi");
  std::vector<double> g(points);
  if (points == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < points; ++i) g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  g.back() = hi;
  return g;
}

namespace {
RdCurve curve_from(double lambda, double sigma, std::span<const double> grid, bool backward, const char* label) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] > 0.0 && (i == 0 || grid[i] > grid[i - 1]), ErrorKind::InvalidArgument, "kappa grid must be positive and ascending");
  }
  RdCurve c;
  c.label = label;
  c.points.resize(grid.size());
  for_each_index(grid.size(), Exec::Parallel, [&](std::size_t i) {
    const auto p = backward ? waterfill_point_backward(lambda, sigma, grid[i]) : waterfill_point(lambda, sigma, grid[i]);
    c.points[i] = {p.rate, p.distortion};
  });
  return c;
}
}  // namespace

RdCurve rd_curve_forward(double lambda, double sigma, std::span<const double> kappa_grid) {
  return curve_from(lambda, sigma, kappa_grid, false, "forward");
}

RdCurve rd_curve_backward(double lambda, double sigma, std::span<const double> kappa_grid) {
  return curve_from(lambda, sigma, kappa_grid, true, "backward");
}

RdCurve rd_curve_sequential(double lambda, double sigma, std::span<const double> d_grid) {
  RdCurve c;
  c.label = "sequential";
  for (double d : d_grid) c.points.push_back({rd_sequential(lambda, d, sigma), d});
  return c;
}

double rd_sequential(double lambda, double d, double sigma) {
  check_source(lambda, sigma);
  require(d > 0.0, ErrorKind::InvalidArgument, "distortion must be > 0");
  return 0.5 * std::log2(lambda * lambda + sigma * sigma / d);
}

double distortion_sequential(double lambda, double rate, double sigma) {
  check_source(lambda, sigma);
  const double denom = std::exp2(2.0 * rate) - lambda * lambda;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return sigma * sigma / denom;
}

double distortion_at_rate(double lambda, double sigma, double rate, bool backward) {
  check_source(lambda, sigma);
  const double shift = backward ? 0.0 : std::log2(lambda);
  const double r = rate - shift;  // rate of the backward curve
  if (r < 0.0) return backward ? stationary_variance(lambda, sigma) : std::numeric_limits<double>::infinity();
  if (r == 0.0) return stationary_variance(lambda, sigma);
  // Water below the spectrum minimum: D = kappa and r = 0.5 log2(sigma^2/kappa) - log2 lambda.
  const double kappa_white = sigma * sigma * std::exp2(-2.0 * r) / (lambda * lambda);
  if (kappa_white <= smin(lambda, sigma)) return kappa_white;
  const auto g = [&](double k) { return waterfill_core(lambda, sigma, k, Exec::Serial).rate; };
  const double k = bisect_kappa(g, r, smin(lambda, sigma), smax(lambda, sigma), true);
  return waterfill_core(lambda, sigma, k, Exec::Serial).distortion;
}

double rate_at_distortion(double lambda, double sigma, double d, bool backward) {
  check_source(lambda, sigma);
  require(d > 0.0, ErrorKind::InvalidArgument, "distortion must be > 0");
  const double shift = backward ? 0.0 : std::log2(lambda);
  if (d >= stationary_variance(lambda, sigma)) return shift;
  if (d <= smin(lambda, sigma)) return shift + 0.5 * std::log2(sigma * sigma / d) - std::log2(lambda);
  const auto g = [&](double k) { return waterfill_core(lambda, sigma, k, Exec::Serial).distortion; };
  const double k = bisect_kappa(g, d, smin(lambda, sigma), smax(lambda, sigma), false);
  return shift + waterfill_core(lambda, sigma, k, Exec::Serial).rate;
}

double entropy_bound(double K, double eta, double delta) {
  require(eta > 0.0 && delta > 0.0, ErrorKind::InvalidArgument, "eta and delta must be > 0");
  require(K > std::pow(delta, eta), ErrorKind::InvalidArgument, "entropy bound needs K > delta^eta");
  require(K > 1.0 && delta < 1.0, ErrorKind::InvalidArgument, "entropy bound needs K > 1 and delta < 1");
  const double a = std::log2(K) / eta;
  const double b = std::log2(1.0 / delta);
  return 7.0 + a + 2.0 * std::log2(a) + b + 2.0 * std::log2(b) + (5.0 + std::numbers::ln2) / (eta * std::numbers::ln2);
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

// ---------------------------------------------------------------- channels

bool is_noiseless(const DmcSpec& dmc) {
  for (std::size_t y = 0; y < dmc.outputs(); ++y) {
    int positive = 0;
    for (std::size_t x = 0; x < dmc.inputs(); ++x) positive += dmc.transition[x][y] > 0.0;
    if (positive > 1) return false;
  }
  return true;
}

bool is_symmetric(const DmcSpec& dmc) {
  auto sorted_row = [&](std::size_t x) {
    auto r = dmc.transition[x];
    std::sort(r.begin(), r.end());
    return r;
  };
  const auto ref = sorted_row(0);
  for (std::size_t x = 1; x < dmc.inputs(); ++x) {
    const auto r = sorted_row(x);
    for (std::size_t y = 0; y < r.size(); ++y) {
      if (std::abs(r[y] - ref[y]) > 1e-12) return false;
    }
  }
  double col0 = 0.0;
  for (std::size_t x = 0; x < dmc.inputs(); ++x) col0 += dmc.transition[x][0];
  for (std::size_t y = 1; y < dmc.outputs(); ++y) {
    double col = 0.0;
    for (std::size_t x = 0; x < dmc.inputs(); ++x) col += dmc.transition[x][y];
    if (std::abs(col - col0) > 1e-12) return false;
  }
  return true;
}

double gallager_e0(const DmcSpec& dmc, double rho, std::span<const double> input) {
  const double s = 1.0 / (1.0 + rho);
  double total = 0.0;
  for (std::size_t y = 0; y < dmc.outputs(); ++y) {
    double inner = 0.0;
    for (std::size_t x = 0; x < dmc.inputs(); ++x) {
      const double p = dmc.transition[x][y];
      if (p > 0.0 && input[x] > 0.0) inner += input[x] * std::pow(p, s);
    }
    if (inner > 0.0) total += std::pow(inner, 1.0 + rho);
  }
  return -std::log2(total);
}

namespace {

// Input distribution maximizing E0(rho, .) by exponentiated gradient on the
// convex objective sum_y (sum_x q_x P(y|x)^{1/(1+rho)})^{1+rho}.
std::vector<double> optimize_input(const DmcSpec& dmc, double rho) {
  const std::size_t nx = dmc.inputs(), ny = dmc.outputs();
  std::vector<double> q(nx, 1.0 / static_cast<double>(nx));
  if (is_symmetric(dmc)) return q;
  const double s = 1.0 / (1.0 + rho);
  std::vector<std::vector<double>> a(nx, std::vector<double>(ny));
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y) a[x][y] = dmc.transition[x][y] > 0.0 ? std::pow(dmc.transition[x][y], s) : 0.0;
  std::vector<double> inner(ny), grad(nx);
  for (int it = 0; it < 2000; ++it) {
    double obj = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
      inner[y] = 0.0;
      for (std::size_t x = 0; x < nx; ++x) inner[y] += q[x] * a[x][y];
      obj += std::pow(inner[y], 1.0 + rho);
    }
    double gmax = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      grad[x] = 0.0;
      for (std::size_t y = 0; y < ny; ++y) {
        if (inner[y] > 0.0) grad[x] += (1.0 + rho) * std::pow(inner[y], rho) * a[x][y];
      }
      grad[x] /= obj;
      gmax = std::max(gmax, grad[x]);
    }
    double norm = 0.0, change = 0.0;
    std::vector<double> next(nx);
    for (std::size_t x = 0; x < nx; ++x) {
      next[x] = q[x] * std::exp(-0.5 * (grad[x] - gmax));
      norm += next[x];
    }
    for (std::size_t x = 0; x < nx; ++x) {
      next[x] /= norm;
      change = std::max(change, std::abs(next[x] - q[x]));
    }
    q = std::move(next);
    if (change < 1e-13) break;
  }
  return q;
}

double exponent_at(const DmcSpec& dmc, double rho, double rate, std::vector<double>* q_out) {
  auto q = optimize_input(dmc, rho);
  const double v = gallager_e0(dmc, rho, q) - rho * rate;
  if (q_out) *q_out = std::move(q);
  return v;
}

}  // namespace

ExponentResult random_coding_exponent(const DmcSpec& dmc, double rate) {
  dmc.validate();
  require(rate >= 0.0, ErrorKind::InvalidArgument, "rate must be >= 0");
  ExponentResult r;
  const double cap = capacity(dmc);
  if (rate >= cap) {
    r.capacity_exceeded = true;
    r.input = capacity_achieving_input(dmc);
    return r;
  }
  if (is_noiseless(dmc)) {
    r.exponent = kExponentCap;
    r.rho = 1.0;
    r.input = capacity_achieving_input(dmc);
    return r;
  }
  // E0(rho) - rho R is concave in rho: coarse grid, then golden section around the best node.
  constexpr int kGrid = 100;
  int best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kGrid; ++i) {
    const double v = exponent_at(dmc, static_cast<double>(i) / kGrid, rate, nullptr);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  double a = std::max(0, best - 1) / static_cast<double>(kGrid);
  double b = std::min(kGrid, best + 1) / static_cast<double>(kGrid);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = exponent_at(dmc, c, rate, nullptr), fd = exponent_at(dmc, d, rate, nullptr);
  while (b - a > 1e-12) {
    if (fc < fd) {
      a = c; c = d; fc = fd;
      d = a + g * (b - a);
      fd = exponent_at(dmc, d, rate, nullptr);
    } else {
      b = d; d = c; fd = fc;
      c = b - g * (b - a);
      fc = exponent_at(dmc, c, rate, nullptr);
    }
  }
  double rho = 0.5 * (a + b);
  double v = exponent_at(dmc, rho, rate, &r.input);
  if (best_v > v) {  // endpoint optimum
    rho = best / static_cast<double>(kGrid);
    v = exponent_at(dmc, rho, rate, &r.input);
  }
  r.rho = rho;
  r.exponent = std::max(0.0, v);
  return r;
}

namespace {

struct BaResult {
  double capacity;
  std::vector<double> input;
};

BaResult blahut_arimoto(const DmcSpec& dmc) {
  dmc.validate();
  const std::size_t nx = dmc.inputs(), ny = dmc.outputs();
  std::vector<double> q(nx, 1.0 / static_cast<double>(nx)), out(ny), dkl(nx);
  double lower = 0.0;
  for (int it = 0; it < 100000; ++it) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y) out[y] += q[x] * dmc.transition[x][y];
    double dmax = -std::numeric_limits<double>::infinity();
    lower = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      dkl[x] = 0.0;
      for (std::size_t y = 0; y < ny; ++y) {
        const double p = dmc.transition[x][y];
        if (p > 0.0) dkl[x] += p * std::log2(p / out[y]);
      }
      lower += q[x] * dkl[x];
      dmax = std::max(dmax, dkl[x]);
    }
    // Capacity lies in [lower, dmax].
    if (dmax - lower < 1e-10) return {std::max(0.0, lower), q};
    double norm = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      q[x] *= std::exp2(dkl[x] - dmax);
      norm += q[x];
    }
    for (double& v : q) v /= norm;
  }
  return {std::max(0.0, lower), q};
}

}  // namespace

double capacity(const DmcSpec& dmc) { return blahut_arimoto(dmc).capacity; }

std::vector<double> capacity_achieving_input(const DmcSpec& dmc) { return blahut_arimoto(dmc).input; }

}  // namespace malab::rdmath
