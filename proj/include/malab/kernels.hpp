#pragma once

// Data-parallel kernels. Every kernel has a serial reference path and an
// OpenMP path selected by Exec; both produce bit-identical results (reductions
// use a fixed chunking that does not depend on the thread count).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace malab {

enum class Exec { Serial, Parallel };

int worker_threads() noexcept;

/// Calls fn(i) for i in [0, count). Parallel iterations must only write to slot i.
template <class Fn>
void for_each_index(std::size_t count, Exec exec, Fn&& fn) {
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
#if defined(MALAB_HAVE_OPENMP)
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) fn(static_cast<std::size_t>(i));
#else
  for (std::size_t i = 0; i < count; ++i) fn(i);
#endif
}

inline constexpr std::size_t kReductionChunks = 64;

/// Composite Simpson rule on [a, b] with an even number of panels.
/// Serial: one running sum. Parallel: kReductionChunks partial sums added in order.
template <class F>
double simpson(const F& f, double a, double b, std::size_t panels, Exec exec) {
  if (panels % 2 != 0) ++panels;
  const double h = (b - a) / static_cast<double>(panels);
  const auto weight = [panels](std::size_t i) {
    if (i == 0 || i == panels) return 1.0;
    return (i % 2 == 1) ? 4.0 : 2.0;
  };
  if (exec == Exec::Serial) {
    double acc = 0.0;
    for (std::size_t i = 0; i <= panels; ++i) acc += weight(i) * f(a + h * static_cast<double>(i));
    return acc * h / 3.0;
  }
  std::vector<double> partial(kReductionChunks, 0.0);
  const std::size_t points = panels + 1;
  for_each_index(kReductionChunks, Exec::Parallel, [&](std::size_t c) {
    const std::size_t lo = points * c / kReductionChunks;
    const std::size_t hi = points * (c + 1) / kReductionChunks;
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += weight(i) * f(a + h * static_cast<double>(i));
    partial[c] = acc;
  });
  double acc = 0.0;
  for (double p : partial) acc += p;
  return acc * h / 3.0;
}

struct NearestResult {
  std::vector<std::uint32_t> index;
  std::vector<double> distance;  // squared Euclidean
};

/// For each row of `vectors` (row-major, `dim` columns) the index of the
/// nearest row of `codebook`; ties go to the lower index.
NearestResult nearest_codewords(std::span<const double> vectors, std::span<const double> codebook,
                                std::size_t dim, Exec exec);

}  // namespace malab
