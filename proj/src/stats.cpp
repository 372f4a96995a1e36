#include "malab/stats.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <map>
#include <numeric>

#include "malab/error.hpp"

namespace malab::stats {

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
  require(!samples.empty(), ErrorKind::InvalidArgument, "ks_distance: no samples");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

double ks_distance_uniform(std::span<const double> samples, double lo, double hi) {
  return ks_distance(samples, [lo, hi](double x) { return std::clamp((x - lo) / (hi - lo), 0.0, 1.0); });
}

MannKendall mann_kendall(std::span<const double> series) {
  const std::size_t n = series.size();
  require(n >= 3, ErrorKind::InvalidArgument, "mann_kendall: need at least 3 points");
  for (double v : series) require(!std::isnan(v), ErrorKind::InvalidArgument, "mann_kendall: NaN in series");

  double s = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (series[j] > series[i]) s += 1.0;
      else if (series[j] < series[i]) s -= 1.0;
    }
  }
  std::map<double, std::size_t> ties;
  for (double v : series) ++ties[v];
  const double nn = static_cast<double>(n);
  double var = nn * (nn - 1.0) * (2.0 * nn + 5.0);
  for (const auto& [value, t] : ties) {
    const double tt = static_cast<double>(t);
    if (t > 1) var -= tt * (tt - 1.0) * (2.0 * tt + 5.0);
  }
  var /= 18.0;

  MannKendall out;
  out.s = s;
  if (var <= 0.0) return out;
  const double sd = std::sqrt(var);
  if (s > 0) out.z = (s - 1.0) / sd;
  else if (s < 0) out.z = (s + 1.0) / sd;
  out.p_two_sided = std::erfc(std::abs(out.z) / std::sqrt(2.0));
  out.p_increasing = 0.5 * std::erfc(out.z / std::sqrt(2.0));
  return out;
}

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::InvalidArgument, "least_squares: need >= 2 points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, ErrorKind::NumericFailure, "least_squares: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

double chi_square_uniform_p(std::span<const std::uint64_t> counts) {
  require(counts.size() >= 2, ErrorKind::InvalidArgument, "chi_square_uniform_p: need >= 2 cells");
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  const double expected = total / static_cast<double>(counts.size());
  double chi2 = 0.0;
  for (auto c : counts) chi2 += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  const double dof = static_cast<double>(counts.size() - 1);
  return boost::math::gamma_q(dof / 2.0, chi2 / 2.0);
}

double mean(std::span<const double> xs) {
  require(!xs.empty(), ErrorKind::InvalidArgument, "mean of empty sequence");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  require(xs.size() >= 2, ErrorKind::InvalidArgument, "variance needs >= 2 samples");
  const double m = mean(xs);
  double acc = 0.0;
  for (double v : xs) acc += (v - m) * (v - m);
  return acc / static_cast<double>(xs.size() - 1);
}

double lag1_correlation(std::span<const double> xs) {
  require(xs.size() >= 3, ErrorKind::InvalidArgument, "lag1_correlation needs >= 3 samples");
  const double m = mean(xs);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    den += (xs[i] - m) * (xs[i] - m);
    if (i + 1 < xs.size()) num += (xs[i] - m) * (xs[i + 1] - m);
  }
  return den > 0.0 ? num / den : 0.0;
}

double plugin_entropy_bits(std::span<const std::int64_t> labels) {
  require(!labels.empty(), ErrorKind::InvalidArgument, "plugin_entropy_bits: no samples");
  std::vector<std::int64_t> s(labels.begin(), labels.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double h = 0.0;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    const double p = static_cast<double>(j - i) / n;
    h -= p * std::log2(p);
    i = j;
  }
  return h;
}

TailFit fit_exponential_tail(std::span<const std::uint64_t> events, std::span<const std::uint64_t> totals,
                             std::uint64_t min_events, double cap) {
  require(events.size() == totals.size(), ErrorKind::InvalidArgument, "fit_exponential_tail: size mismatch");
  TailFit fit;
  std::vector<double> x, y;
  // Contiguous run of delays with enough events, starting at the first such delay.
  for (std::size_t d = 0; d < events.size(); ++d) {
    const bool usable = totals[d] > 0 && events[d] >= min_events;
    if (!usable) {
      if (!x.empty()) {
        fit.truncated = true;
        break;
      }
      continue;
    }
    x.push_back(static_cast<double>(d));
    y.push_back(std::log2(static_cast<double>(events[d]) / static_cast<double>(totals[d])));
    fit.delays_used.push_back(static_cast<int>(d));
  }
  if (x.size() < 2) {
    fit.degenerate = true;
    fit.alpha = cap;
    fit.k = x.empty() ? 0.0 : std::exp2(y[0]);
    return fit;
  }
  const LineFit lf = least_squares(x, y);
  fit.alpha = std::min(-lf.slope, cap);
  fit.k = std::exp2(lf.intercept);
  return fit;
}

TailFit fit_survival_tail(std::span<const std::int64_t> samples, std::uint64_t min_events, double cap) {
  require(!samples.empty(), ErrorKind::InvalidArgument, "fit_survival_tail: no samples");
  const std::int64_t max_v = *std::max_element(samples.begin(), samples.end());
  const std::size_t len = static_cast<std::size_t>(std::max<std::int64_t>(max_v, 0)) + 1;
  std::vector<std::uint64_t> exceed(len, 0), totals(len, samples.size());
  for (auto v : samples) {
    for (std::int64_t s = 0; s < v && s < static_cast<std::int64_t>(len); ++s) ++exceed[static_cast<std::size_t>(s)];
  }
  return fit_exponential_tail(exceed, totals, min_events, cap);
}

}  // namespace malab::stats
