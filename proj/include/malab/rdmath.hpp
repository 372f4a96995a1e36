#pragma once

// Gaussian rate-distortion by water-filling, the causal (sequential) rate,
// channel capacity and random-coding exponents, and the entropy bound for
// quantized variables with a bounded moment.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "malab/kernels.hpp"

namespace malab::rdmath {

struct RdPoint {
  double rate = 0.0;
  double distortion = 0.0;
};

struct RdCurve {
  std::vector<RdPoint> points;
  std::string label;
};

struct WaterfillPoint {
  double kappa = 0.0;
  double rate = 0.0;
  double distortion = 0.0;
};

/// Discrete memoryless channel; transition[x][y] = P(y | x).
struct DmcSpec {
  std::vector<std::vector<double>> transition;

  std::size_t inputs() const { return transition.size(); }
  std::size_t outputs() const { return transition.empty() ? 0 : transition.front().size(); }
  /// Throws InvalidArgument unless rows are probability vectors (to 1e-12).
  void validate() const;

  static DmcSpec bsc(double p);
  static DmcSpec bec(double eps);
};

/// Power spectrum sigma^2 / (1 - 2 lambda cos w + lambda^2) of the source.
double spectrum(double lambda, double sigma, double omega);

/// Forward water-filling point. Throws NumericFailure if the quadrature does not settle.
WaterfillPoint waterfill_point(double lambda, double sigma, double kappa, Exec exec = Exec::Serial);

/// Same point for the stable backward process: identical distortion, rate lower by log2 lambda.
WaterfillPoint waterfill_point_backward(double lambda, double sigma, double kappa, Exec exec = Exec::Serial);

std::vector<double> log_grid(double lo, double hi, std::size_t points);

RdCurve rd_curve_forward(double lambda, double sigma, std::span<const double> kappa_grid);
RdCurve rd_curve_backward(double lambda, double sigma, std::span<const double> kappa_grid);
/// Causal curve evaluated at the distortions of `d_grid`.
RdCurve rd_curve_sequential(double lambda, double sigma, std::span<const double> d_grid);

/// Causal rate 0.5 log2(lambda^2 + sigma^2/d).
double rd_sequential(double lambda, double d, double sigma = 1.0);
/// Inverse of rd_sequential; +inf at or below log2 lambda.
double distortion_sequential(double lambda, double rate, double sigma = 1.0);

/// D(R) and R(D) on the water-filling curve (bisection on kappa).
/// Forward D(R) is +inf below log2 lambda; backward D(R) saturates at the variance.
double distortion_at_rate(double lambda, double sigma, double rate, bool backward = false);
double rate_at_distortion(double lambda, double sigma, double d, bool backward = false);

/// Bound on the entropy (bits) of a variable with E|Z|^eta <= K quantized to step delta.
double entropy_bound(double K, double eta, double delta);

/// Gallager E0(rho, q) in bits.
double gallager_e0(const DmcSpec& dmc, double rho, std::span<const double> input);

inline constexpr double kExponentCap = 64.0;

struct ExponentResult {
  double exponent = 0.0;
  bool capacity_exceeded = false;
  double rho = 0.0;
  std::vector<double> input;  // optimizing input distribution
};

/// max over rho in [0,1] and inputs of E0(rho, q) - rho*rate.
ExponentResult random_coding_exponent(const DmcSpec& dmc, double rate);

/// True when every output symbol identifies the input.
bool is_noiseless(const DmcSpec& dmc);
/// Rows are permutations of each other and column sums are equal.
bool is_symmetric(const DmcSpec& dmc);

/// Blahut-Arimoto capacity in bits/use to absolute tolerance 1e-9.
double capacity(const DmcSpec& dmc);
std::vector<double> capacity_achieving_input(const DmcSpec& dmc);

double binary_entropy(double p);

}  // namespace malab::rdmath
