#ifndef HYPERMIX_SRC_KERNEL_ROWS_HPP_
#define HYPERMIX_SRC_KERNEL_ROWS_HPP_

// Per-row bodies shared by the serial and OpenMP kernels.

#include <optional>
#include <stdexcept>

#include "hypermix/geodesic.hpp"
#include "hypermix/kernels.hpp"

namespace hypermix::kernels::detail {

inline void check_same_dim(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("kernel operands differ in dimension");
}

inline void check_same_shape(const Matrix& a, const Matrix& b, const Matrix& out) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || out.rows() != a.rows() ||
      out.cols() != a.cols())
    throw std::invalid_argument("kernel operands differ in shape");
}

inline void similarity_row(const Matrix& a, const Matrix& b, std::size_t i, Matrix& out) {
  const auto ai = a.row(i);
  for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(ai, b.row(j));
}

inline void sq_distance_row(const Matrix& a, const Matrix& b, std::size_t i, Matrix& out) {
  const auto ai = a.row(i);
  for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = squared_distance(ai, b.row(j));
}

inline double row_sum(const Matrix& m, std::size_t i) {
  double s = 0.0;
  for (double x : m.row(i)) s += x;
  return s;
}

inline std::optional<MixFailure> to_failure(MixStatus status, std::size_t row) {
  if (status == MixStatus::Ok) return std::nullopt;
  return MixFailure{row, status == MixStatus::Antipodal};
}

}  // namespace hypermix::kernels::detail

#endif  // HYPERMIX_SRC_KERNEL_ROWS_HPP_
