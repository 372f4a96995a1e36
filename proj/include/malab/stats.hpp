#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace malab::stats {

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and `cdf`.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);
double ks_distance_uniform(std::span<const double> samples, double lo, double hi);

struct MannKendall {
  double s = 0.0;
  double z = 0.0;
  double p_two_sided = 1.0;
  /// One-sided p-value for an increasing trend.
  double p_increasing = 1.0;
};

/// Mann-Kendall trend test with tie-corrected variance and continuity correction.
/// Infinite values take part through ordinary comparisons; NaN is rejected.
MannKendall mann_kendall(std::span<const double> series);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit least_squares(std::span<const double> x, std::span<const double> y);

/// Upper-tail p-value of Pearson's chi-square statistic against equal cell probabilities.
double chi_square_uniform_p(std::span<const std::uint64_t> counts);

double mean(std::span<const double> xs);
double variance(std::span<const double> xs);
double lag1_correlation(std::span<const double> xs);

/// Plug-in entropy in bits of the empirical distribution of integer labels.
double plugin_entropy_bits(std::span<const std::int64_t> labels);

/// Fit of log2 P(event at delay d) = log2 K - alpha*d over delays with enough events.
struct TailFit {
  double alpha = 0.0;
  double k = 1.0;
  std::vector<int> delays_used;
  bool truncated = false;  // fit range cut short for lack of events
  bool degenerate = false; // fewer than two usable points
};

/// `events[d]` = number of error events at delay d, `totals[d]` = number of trials.
/// Uses delays with at least `min_events` events; alpha is capped at `cap` when the
/// empirical probability is zero everywhere or the fit degenerates.
TailFit fit_exponential_tail(std::span<const std::uint64_t> events, std::span<const std::uint64_t> totals,
                             std::uint64_t min_events = 10, double cap = 64.0);

/// Convenience: tail fit of P(value > s) from raw nonnegative integer samples.
TailFit fit_survival_tail(std::span<const std::int64_t> samples, std::uint64_t min_events = 10, double cap = 64.0);

}  // namespace malab::stats
