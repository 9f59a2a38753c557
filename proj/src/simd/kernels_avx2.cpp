// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include "judgevar/simd/kernels.hpp"

namespace judgevar::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double sum_avx2(const double* x, std::size_t len) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
    a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= len; i += 4) a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
  double acc = hsum(_mm256_add_pd(a0, a1));
  for (; i < len; ++i) acc += x[i];
  return acc;
}

double sum_sq_dev_avx2(const double* x, std::size_t len, double center) {
  const __m256d c = _mm256_set1_pd(center);
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), c);
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), c);
    a0 = _mm256_fmadd_pd(d0, d0, a0);
    a1 = _mm256_fmadd_pd(d1, d1, a1);
  }
  for (; i + 4 <= len; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), c);
    a0 = _mm256_fmadd_pd(d, d, a0);
  }
  double acc = hsum(_mm256_add_pd(a0, a1));
  for (; i < len; ++i) {
    const double d = x[i] - center;
    acc += d * d;
  }
  return acc;
}

void row_col_sums_avx2(const double* x, std::size_t rows, std::size_t cols, double* row_out,
                       double* col_acc) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = x + r * cols;
    __m256d racc = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d v = _mm256_loadu_pd(row + c);
      racc = _mm256_add_pd(racc, v);
      _mm256_storeu_pd(col_acc + c, _mm256_add_pd(_mm256_loadu_pd(col_acc + c), v));
    }
    double acc = hsum(racc);
    for (; c < cols; ++c) {
      acc += row[c];
      col_acc[c] += row[c];
    }
    row_out[r] = acc;
  }
}

double double_centered_ss_avx2(const double* x, std::size_t rows, std::size_t cols,
                               const double* row_center, const double* col_center) {
  __m256d vacc = _mm256_setzero_pd();
  double tail = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = x + r * cols;
    const __m256d rc = _mm256_set1_pd(row_center[r]);
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d d = _mm256_sub_pd(_mm256_sub_pd(_mm256_loadu_pd(row + c), rc),
                                      _mm256_loadu_pd(col_center + c));
      vacc = _mm256_fmadd_pd(d, d, vacc);
    }
    for (; c < cols; ++c) {
      const double d = row[c] - row_center[r] - col_center[c];
      tail += d * d;
    }
  }
  return hsum(vacc) + tail;
}

double gather_sum_avx2(const double* values, const std::uint32_t* idx, std::size_t len) {
  __m256d a0 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= len; k += 4) {
    const __m128i vi = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + k));
    a0 = _mm256_add_pd(a0, _mm256_i32gather_pd(values, vi, 8));
  }
  double acc = hsum(a0);
  for (; k < len; ++k) acc += values[idx[k]];
  return acc;
}

}  // namespace

const KernelTable& avx2_kernels() noexcept {
  static const KernelTable table{Isa::Avx2,       sum_avx2,
                                 sum_sq_dev_avx2, row_col_sums_avx2,
                                 double_centered_ss_avx2, gather_sum_avx2};
  return table;
}

}  // namespace judgevar::simd
