#ifndef HYPERMIX_VMF_HPP_
#define HYPERMIX_VMF_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hypermix/random.hpp"
#include "hypermix/sphere.hpp"

namespace hypermix {

// Circular (d = 2) von Mises-Fisher parameters.
struct VmfParams {
  double mean_angle = 0.0;  // radians, [0, 2pi)
  double kappa = 0.0;

  VmfParams() = default;
  // Wraps the angle into [0, 2pi); throws OutOfRange for negative or
  // non-finite kappa.
  VmfParams(double mean_angle, double kappa);
};

struct SumVmfApprox {
  double mean_angle = 0.0;
  double kappa_tilde = 0.0;
};

inline constexpr double kBesselSeriesLimit = 15.0;

double bessel_i0(double kappa);
double bessel_i1(double kappa);
double log_bessel_i0(double kappa);

// A(kappa) = I1(kappa) / I0(kappa)
double mean_resultant(double kappa);
double mean_resultant_inverse(double r);

std::vector<double> vmf_sample_angles(const VmfParams& p, std::size_t n, Rng& rng);
std::vector<UnitVector> vmf_sample_2d(const VmfParams& p, std::size_t n, std::uint64_t seed);

// One draw from vMF(mu, kappa) on S^(d-1) by Wood's rejection method.
std::vector<double> sample_vmf(std::span<const double> mu, double kappa, Rng& rng);

double vmf_log_density_2d(const VmfParams& p, double angle);

double vmf_kl_closed(const VmfParams& p1, const VmfParams& p2);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  std::size_t shards = 0;
};

inline constexpr std::size_t kMonteCarloShards = 8;

// Samples are split over kMonteCarloShards deterministic substreams, so the
// estimate does not depend on the thread count.
McEstimate vmf_kl_monte_carlo(const VmfParams& p1, const VmfParams& p2, std::size_t n,
                              std::uint64_t seed);

// Requires equal concentrations and non-antipodal means.
SumVmfApprox sum_vmf_approx(const VmfParams& p1, const VmfParams& p2);

struct TheoremCheck {
  double kappa = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double delta_mu = 0.0;     // wrapped to [0, pi]
  double kappa_tilde = 0.0;
  double mean_tilde = 0.0;
  double kl_mixed = 0.0;
  double kl_cross = 0.0;
  McEstimate mc;             // Monte-Carlo estimate of kl_mixed
  bool holds = false;
};

TheoremCheck theorem1_check(double kappa, double mu1, double mu2, std::size_t n,
                            std::uint64_t seed);

}  // namespace hypermix

#endif  // HYPERMIX_VMF_HPP_
