// AArch64 only; NEON is part of the base ISA there so no runtime check.

#include <arm_neon.h>

#include "judgevar/simd/kernels.hpp"

namespace judgevar::simd {
namespace {

double sum_neon(const double* x, std::size_t len) {
  float64x2_t a0 = vdupq_n_f64(0.0);
  float64x2_t a1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    a0 = vaddq_f64(a0, vld1q_f64(x + i));
    a1 = vaddq_f64(a1, vld1q_f64(x + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(a0, a1));
  for (; i < len; ++i) acc += x[i];
  return acc;
}

double sum_sq_dev_neon(const double* x, std::size_t len, double center) {
  const float64x2_t c = vdupq_n_f64(center);
  float64x2_t a0 = vdupq_n_f64(0.0);
  float64x2_t a1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const float64x2_t d0 = vsubq_f64(vld1q_f64(x + i), c);
    const float64x2_t d1 = vsubq_f64(vld1q_f64(x + i + 2), c);
    a0 = vfmaq_f64(a0, d0, d0);
    a1 = vfmaq_f64(a1, d1, d1);
  }
  double acc = vaddvq_f64(vaddq_f64(a0, a1));
  for (; i < len; ++i) {
    const double d = x[i] - center;
    acc += d * d;
  }
  return acc;
}

void row_col_sums_neon(const double* x, std::size_t rows, std::size_t cols, double* row_out,
                       double* col_acc) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = x + r * cols;
    float64x2_t racc = vdupq_n_f64(0.0);
    std::size_t c = 0;
    for (; c + 2 <= cols; c += 2) {
      const float64x2_t v = vld1q_f64(row + c);
      racc = vaddq_f64(racc, v);
      vst1q_f64(col_acc + c, vaddq_f64(vld1q_f64(col_acc + c), v));
    }
    double acc = vaddvq_f64(racc);
    for (; c < cols; ++c) {
      acc += row[c];
      col_acc[c] += row[c];
    }
    row_out[r] = acc;
  }
}

double double_centered_ss_neon(const double* x, std::size_t rows, std::size_t cols,
                               const double* row_center, const double* col_center) {
  float64x2_t vacc = vdupq_n_f64(0.0);
  double tail = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = x + r * cols;
    const float64x2_t rc = vdupq_n_f64(row_center[r]);
    std::size_t c = 0;
    for (; c + 2 <= cols; c += 2) {
      const float64x2_t d = vsubq_f64(vsubq_f64(vld1q_f64(row + c), rc), vld1q_f64(col_center + c));
      vacc = vfmaq_f64(vacc, d, d);
    }
    for (; c < cols; ++c) {
      const double d = row[c] - row_center[r] - col_center[c];
      tail += d * d;
    }
  }
  return vaddvq_f64(vacc) + tail;
}

// No gather instruction; two independent accumulators still help.
double gather_sum_neon(const double* values, const std::uint32_t* idx, std::size_t len) {
  float64x2_t a0 = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= len; k += 2) {
    const double pair[2] = {values[idx[k]], values[idx[k + 1]]};
    a0 = vaddq_f64(a0, vld1q_f64(pair));
  }
  double acc = vaddvq_f64(a0);
  for (; k < len; ++k) acc += values[idx[k]];
  return acc;
}

}  // namespace

const KernelTable& neon_kernels() noexcept {
  static const KernelTable table{Isa::Neon,       sum_neon,
                                 sum_sq_dev_neon, row_col_sums_neon,
                                 double_centered_ss_neon, gather_sum_neon};
  return table;
}

}  // namespace judgevar::simd
