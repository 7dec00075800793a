#include "relsim/kernels.hpp"

namespace relsim::kernels::scalar {

void reflect(double* x, const double* delta, std::size_t n, double lo, double hi) {
  for (std::size_t i = 0; i < n; ++i) x[i] = reflect_one(x[i], delta[i], lo, hi);
}

void squared_distances(const double* columns, const double* center, std::size_t dims,
                       std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
  for (std::size_t d = 0; d < dims; ++d) {
    const double* col = columns + d * n;
    const double c = center[d];
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = col[i] - c;
      out[i] = out[i] + diff * diff;
    }
  }
}

}  // namespace relsim::kernels::scalar
