#include "hypermix/kernels.hpp"
#include "kernel_rows.hpp"

namespace hypermix::kernels::serial {

Matrix similarity(const Matrix& a, const Matrix& b) {
  detail::check_same_dim(a, b);
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) detail::similarity_row(a, b, i, out);
  return out;
}

Matrix squared_distance(const Matrix& a, const Matrix& b) {
  detail::check_same_dim(a, b);
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) detail::sq_distance_row(a, b, i, out);
  return out;
}

std::optional<MixFailure> geodesic_mix_rows(double lambda, const Matrix& a, const Matrix& b,
                                            Matrix& out) {
  detail::check_same_shape(a, b, out);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto status = geodesic_mix_into(lambda, a.row(i), b.row(i), out.row(i));
    if (auto f = detail::to_failure(status, i)) return f;
  }
  return std::nullopt;
}

std::optional<MixFailure> linear_mix_rows(double lambda, const Matrix& a, const Matrix& b,
                                          Matrix& out) {
  detail::check_same_shape(a, b, out);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto status = linear_mix_into(lambda, a.row(i), b.row(i), out.row(i));
    if (auto f = detail::to_failure(status, i)) return f;
  }
  return std::nullopt;
}

void row_sums(const Matrix& m, std::span<double> out) {
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = detail::row_sum(m, i);
}

}  // namespace hypermix::kernels::serial
