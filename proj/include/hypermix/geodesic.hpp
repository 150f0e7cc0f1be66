#ifndef HYPERMIX_GEODESIC_HPP_
#define HYPERMIX_GEODESIC_HPP_

#include <span>

namespace hypermix {

// Row-level mixing primitives over raw spans. Higher-level code (typed
// batches, losses) builds on these; they never throw so they can run inside
// OpenMP regions.

inline constexpr double kAntipodalMargin = 1e-6;    // theta > pi - margin
inline constexpr double kParallelSinThreshold = 1e-6;  // sin(theta) below -> chord
inline constexpr double kZeroNorm = 1e-12;

enum class MixStatus { Ok, Antipodal, Zero };

// m = a sin(l t)/sin t + b sin((1-l) t)/sin t with t = acos(clamp(a.b)).
// lambda == 1 returns a and lambda == 0 returns b exactly. When sin t is
// below kParallelSinThreshold the normalized chord is returned instead.
MixStatus geodesic_mix_into(double lambda, std::span<const double> a,
                            std::span<const double> b, std::span<double> out);

// normalize(l a + (1-l) b); the endpoints are returned as is.
MixStatus linear_mix_into(double lambda, std::span<const double> a,
                          std::span<const double> b, std::span<double> out);

// Vector-Jacobian product of geodesic_mix_into, treating a and b as free
// vectors and lambda as a constant. Accumulates into grad_a / grad_b.
void geodesic_mix_backward(double lambda, std::span<const double> a,
                           std::span<const double> b, std::span<const double> grad_out,
                           std::span<double> grad_a, std::span<double> grad_b);

// Backprop through u = v / |v|: grad_v += (grad_u - u (u . grad_u)) / |v|.
void normalize_backward(std::span<const double> raw, std::span<const double> grad_unit,
                        std::span<double> grad_raw);

}  // namespace hypermix

#endif  // HYPERMIX_GEODESIC_HPP_
