// Compiled with -mavx2 (and without -mfma); only entered after a runtime CPU check.

#include "relsim/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#endif

namespace relsim::kernels::avx2 {

#if defined(__AVX2__)

bool compiled() noexcept { return true; }

void reflect(double* x, const double* delta, std::size_t n, double lo, double hi) {
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  const __m256d two_lo = _mm256_set1_pd(lo + lo);
  const __m256d two_hi = _mm256_set1_pd(hi + hi);
  const double width = hi - lo;
  const __m256d vwidth = _mm256_set1_pd(width);
  const __m256d vperiod = _mm256_set1_pd(width + width);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(delta + i));
    const __m256d inside = _mm256_and_pd(_mm256_cmp_pd(v, vlo, _CMP_GE_OQ),
                                         _mm256_cmp_pd(v, vhi, _CMP_LE_OQ));
    if (_mm256_movemask_pd(inside) == 0xF) {
      _mm256_storeu_pd(x + i, v);
      continue;
    }
    const __m256d up = _mm256_sub_pd(two_hi, v);
    const __m256d down = _mm256_sub_pd(two_lo, v);
    const __m256d use_up =
        _mm256_and_pd(_mm256_cmp_pd(v, vhi, _CMP_GT_OQ), _mm256_cmp_pd(up, vlo, _CMP_GE_OQ));
    const __m256d use_down =
        _mm256_and_pd(_mm256_cmp_pd(v, vlo, _CMP_LT_OQ), _mm256_cmp_pd(down, vhi, _CMP_LE_OQ));

    const __m256d y = _mm256_sub_pd(v, vlo);
    const __m256d k = _mm256_floor_pd(_mm256_div_pd(y, vperiod));
    __m256d m = _mm256_sub_pd(y, _mm256_mul_pd(k, vperiod));
    m = _mm256_blendv_pd(m, _mm256_sub_pd(vperiod, m), _mm256_cmp_pd(m, vwidth, _CMP_GT_OQ));
    __m256d folded = _mm256_add_pd(vlo, m);
    folded = _mm256_blendv_pd(folded, vlo, _mm256_cmp_pd(folded, vlo, _CMP_LT_OQ));
    folded = _mm256_blendv_pd(folded, vhi, _mm256_cmp_pd(folded, vhi, _CMP_GT_OQ));

    __m256d r = folded;
    r = _mm256_blendv_pd(r, down, use_down);
    r = _mm256_blendv_pd(r, up, use_up);
    r = _mm256_blendv_pd(r, v, inside);
    _mm256_storeu_pd(x + i, r);
  }
  for (; i < n; ++i) x[i] = reflect_one(x[i], delta[i], lo, hi);
}

void squared_distances(const double* columns, const double* center, std::size_t dims,
                       std::size_t n, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t d = 0; d < dims; ++d) {
      const __m256d diff =
          _mm256_sub_pd(_mm256_loadu_pd(columns + d * n + i), _mm256_set1_pd(center[d]));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double diff = columns[d * n + i] - center[d];
      acc = acc + diff * diff;
    }
    out[i] = acc;
  }
}

#else

bool compiled() noexcept { return false; }

void reflect(double* x, const double* delta, std::size_t n, double lo, double hi) {
  scalar::reflect(x, delta, n, lo, hi);
}

void squared_distances(const double* columns, const double* center, std::size_t dims,
                       std::size_t n, double* out) {
  scalar::squared_distances(columns, center, dims, n, out);
}

#endif

}  // namespace relsim::kernels::avx2
