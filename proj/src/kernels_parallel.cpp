#include <vector>

#include "hypermix/kernels.hpp"
#include "kernel_rows.hpp"

namespace hypermix::kernels::parallel {

namespace {

using Index = std::ptrdiff_t;

Index as_index(std::size_t n) { return static_cast<Index>(n); }

template <typename MixFn>
std::optional<MixFailure> mix_rows(MixFn mix, const Matrix& a, const Matrix& b, Matrix& out) {
  detail::check_same_shape(a, b, out);
  std::vector<MixStatus> status(a.rows(), MixStatus::Ok);
  const Index n = as_index(a.rows());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    status[r] = mix(a.row(r), b.row(r), out.row(r));
  }
  for (std::size_t i = 0; i < status.size(); ++i)
    if (auto f = detail::to_failure(status[i], i)) return f;
  return std::nullopt;
}

}  // namespace

Matrix similarity(const Matrix& a, const Matrix& b) {
  detail::check_same_dim(a, b);
  Matrix out(a.rows(), b.rows());
  const Index n = as_index(a.rows());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) detail::similarity_row(a, b, static_cast<std::size_t>(i), out);
  return out;
}

Matrix squared_distance(const Matrix& a, const Matrix& b) {
  detail::check_same_dim(a, b);
  Matrix out(a.rows(), b.rows());
  const Index n = as_index(a.rows());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) detail::sq_distance_row(a, b, static_cast<std::size_t>(i), out);
  return out;
}

std::optional<MixFailure> geodesic_mix_rows(double lambda, const Matrix& a, const Matrix& b,
                                            Matrix& out) {
  return mix_rows(
      [lambda](auto x, auto y, auto o) { return geodesic_mix_into(lambda, x, y, o); }, a, b, out);
}

std::optional<MixFailure> linear_mix_rows(double lambda, const Matrix& a, const Matrix& b,
                                          Matrix& out) {
  return mix_rows(
      [lambda](auto x, auto y, auto o) { return linear_mix_into(lambda, x, y, o); }, a, b, out);
}

void row_sums(const Matrix& m, std::span<double> out) {
  const Index n = as_index(m.rows());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    out[r] = detail::row_sum(m, r);
  }
}

}  // namespace hypermix::kernels::parallel
