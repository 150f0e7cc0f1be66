#ifndef HYPERMIX_KERNELS_HPP_
#define HYPERMIX_KERNELS_HPP_

#include <cstddef>
#include <optional>

#include "hypermix/matrix.hpp"

namespace hypermix::kernels {

// Row-wise mixing reports the first failing row (lowest index) instead of
// throwing, so the OpenMP variants can hand the error back to the caller.
struct MixFailure {
  std::size_t row;
  bool antipodal;  // false: the mixed row collapsed to zero
};

// Reference implementations. Single-threaded, straightforward loops; the
// test suite holds the parallel kernels to bitwise equality with these.
namespace serial {

Matrix similarity(const Matrix& a, const Matrix& b);
Matrix squared_distance(const Matrix& a, const Matrix& b);
std::optional<MixFailure> geodesic_mix_rows(double lambda, const Matrix& a,
                                            const Matrix& b, Matrix& out);
std::optional<MixFailure> linear_mix_rows(double lambda, const Matrix& a,
                                          const Matrix& b, Matrix& out);
// out_i = sum_j m_ij, accumulated in column order.
void row_sums(const Matrix& m, std::span<double> out);

}  // namespace serial

// OpenMP variants. Each output row is produced by exactly one thread with the
// same instruction sequence as the serial kernel, so results are identical
// for any thread count.
namespace parallel {

Matrix similarity(const Matrix& a, const Matrix& b);
Matrix squared_distance(const Matrix& a, const Matrix& b);
std::optional<MixFailure> geodesic_mix_rows(double lambda, const Matrix& a,
                                            const Matrix& b, Matrix& out);
std::optional<MixFailure> linear_mix_rows(double lambda, const Matrix& a,
                                          const Matrix& b, Matrix& out);
void row_sums(const Matrix& m, std::span<double> out);

}  // namespace parallel

}  // namespace hypermix::kernels

#endif  // HYPERMIX_KERNELS_HPP_
