#include "judgevar/simd/kernels.hpp"

namespace judgevar::simd {
namespace {

double sum_scalar(const double* x, std::size_t len) {
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) acc += x[i];
  return acc;
}

double sum_sq_dev_scalar(const double* x, std::size_t len, double center) {
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double d = x[i] - center;
    acc += d * d;
  }
  return acc;
}

void row_col_sums_scalar(const double* x, std::size_t rows, std::size_t cols, double* row_out,
                         double* col_acc) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = x + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      acc += row[c];
      col_acc[c] += row[c];
    }
    row_out[r] = acc;
  }
}

double double_centered_ss_scalar(const double* x, std::size_t rows, std::size_t cols,
                                 const double* row_center, const double* col_center) {
  double acc = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = x + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = row[c] - row_center[r] - col_center[c];
      acc += d * d;
    }
  }
  return acc;
}

double gather_sum_scalar(const double* values, const std::uint32_t* idx, std::size_t len) {
  double acc = 0.0;
  for (std::size_t k = 0; k < len; ++k) acc += values[idx[k]];
  return acc;
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{Isa::Scalar,       sum_scalar,
                                 sum_sq_dev_scalar, row_col_sums_scalar,
                                 double_centered_ss_scalar, gather_sum_scalar};
  return table;
}

}  // namespace judgevar::simd
