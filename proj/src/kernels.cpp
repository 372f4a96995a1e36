#include "malab/kernels.hpp"

#include <limits>

#include "malab/error.hpp"

#if defined(MALAB_HAVE_OPENMP)
#include <omp.h>
#endif

namespace malab {

int worker_threads() noexcept {
#if defined(MALAB_HAVE_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

void nearest_row(std::span<const double> vectors, std::span<const double> codebook, std::size_t dim,
                 std::size_t row, NearestResult& out) {
  const std::size_t words = codebook.size() / dim;
  const double* v = vectors.data() + row * dim;
  double best = std::numeric_limits<double>::infinity();
  std::uint32_t best_i = 0;
  for (std::size_t w = 0; w < words; ++w) {
    const double* c = codebook.data() + w * dim;
    double d = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double e = v[j] - c[j];
      d += e * e;
    }
    if (d < best) {
      best = d;
      best_i = static_cast<std::uint32_t>(w);
    }
  }
  out.index[row] = best_i;
  out.distance[row] = best;
}

}  // namespace

NearestResult nearest_codewords(std::span<const double> vectors, std::span<const double> codebook,
                                std::size_t dim, Exec exec) {
  require(dim > 0 && vectors.size() % dim == 0 && codebook.size() % dim == 0 && !codebook.empty(),
          ErrorKind::InvalidArgument, "nearest_codewords: shape mismatch");
  const std::size_t rows = vectors.size() / dim;
  NearestResult out{std::vector<std::uint32_t>(rows), std::vector<double>(rows)};
  for_each_index(rows, exec, [&](std::size_t r) { nearest_row(vectors, codebook, dim, r, out); });
  return out;
}

}  // namespace malab
