#pragma once

// Scalar unstable Markov source X_{t+1} = lambda X_t + W_t, its stable
// time-reversed counterpart, and the Riemann mixture decomposition of a
// tabulated noise density.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "malab/rng.hpp"

namespace malab::process {

/// Density tabulated at lo + i*step, i = 0..N, read as the piecewise-linear
/// interpolant of the samples and zero outside [lo, hi].
struct TabulatedDensity {
  double lo = 0.0;
  double step = 1.0;
  std::vector<double> values;

  double hi() const { return lo + step * static_cast<double>(values.size() - 1); }
  std::size_t cells() const { return values.size() - 1; }
  double pdf(double x) const;
  double cdf(double x) const;
  /// Trapezoid mass, exact for the interpolant.
  double mass() const;
};

TabulatedDensity tabulate(double lo, double hi, std::size_t cells, double (*pdf)(double));

/// Piecewise-linear nonnegative function on equal-width cells; used for the
/// residual part of a mixture. Sampled by mass, then by inverse CDF within a cell.
struct PiecewiseLinear {
  double lo = 0.0;
  double width = 1.0;
  std::vector<double> left;   // value at the left edge of each cell
  std::vector<double> right;  // value at the right edge of each cell
  std::vector<double> cumulative;  // normalized cumulative cell masses

  double mass() const;
  void finalize();  // builds `cumulative`
  double sample(CounterRng& rng) const;
};

struct Mixture {
  double gamma = 0.0;  // P(C = 1)
  double delta = 1.0;  // uniform blur width
  std::vector<double> atom_centers;
  std::vector<double> atom_probs;   // conditional on C = 0; sums to 1
  std::vector<double> atom_cumulative;
  PiecewiseLinear residual;         // density of W'' scaled to mass 1 (empty when gamma == 0)

  /// (1 - gamma) * sum(atom_probs) + gamma * residual mass.
  double total_mass() const;
};

struct BoundedUniform {
  double omega = 1.0;  // support [-omega/2, omega/2]
};
struct Gaussian {
  double sigma = 1.0;
};

using NoiseModel = std::variant<BoundedUniform, Gaussian, Mixture>;

/// Text form used in file headers and on the command line:
/// "uniform:<omega>", "gaussian:<sigma>", "mixture:<gamma>:<delta>".
std::string describe(const NoiseModel& noise);
/// Parses "uniform:<omega>" or "gaussian:<sigma>".
NoiseModel parse_noise(std::string_view spec);

double noise_variance(const NoiseModel& noise);
bool is_bounded(const NoiseModel& noise);

struct ProcessParams {
  double lambda = 2.0;
  NoiseModel noise = BoundedUniform{1.0};
  double omega0 = 1.0 / 16.0;
  std::size_t horizon = 1;

  void validate() const;
};

/// A sampled path. `noise` is the driving sequence that produced it; for long
/// unstable horizons `values` may overflow to +-inf while `x0` and `noise`
/// remain exact, and the codecs work from those.
struct Trajectory {
  ProcessParams params;
  std::uint64_t seed = 0;
  double x0 = 0.0;
  std::vector<double> noise;
  std::vector<double> values;
};

double draw_noise(const NoiseModel& noise, CounterRng& rng);

Trajectory simulate_forward(const ProcessParams& params, const RandomSeeds& seeds);
/// Forward path from an explicit start and noise sequence (length horizon - 1).
Trajectory simulate_forward(const ProcessParams& params, double x0, std::span<const double> noise);

/// Backward process: values[t] = (values[t+1] - W_t) / lambda, generated from
/// the terminal index down with values[horizon] = 0. Uses horizon noise draws.
Trajectory simulate_backward(const ProcessParams& params, const RandomSeeds& seeds);
Trajectory simulate_backward(const ProcessParams& params, std::span<const double> noise);

/// Riemann lower-sum decomposition: W = (1 - C)(G + U) + C W'' with C ~ Bernoulli(gamma).
/// Halves delta from the full support width until gamma <= gamma_target.
Mixture decompose_noise(const TabulatedDensity& density, double gamma_target);

struct MixtureDraw {
  double value = 0.0;
  bool coin = false;     // C
  double grid = 0.0;     // G
  double uniform = 0.0;  // U, on [-delta/2, delta/2]
  double tail = 0.0;     // W''
};

/// Always consumes the same number of draws, whatever the branch.
MixtureDraw sample_mixture(const Mixture& m, CounterRng& rng);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

struct TrajectoryFile {
  double lambda = 0.0;
  std::string noise;
  std::uint64_t seed = 0;
  std::vector<double> values;
};
TrajectoryFile read_trajectory_csv(std::istream& in);

}  // namespace malab::process
