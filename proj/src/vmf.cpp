#include "hypermix/vmf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hypermix/error.hpp"
#include "hypermix/geodesic.hpp"

namespace hypermix {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Below this the envelope parameters lose all precision; the density is
// uniform to within 1e-8 anyway.
constexpr double kUniformKappa = 1e-8;

double wrap_angle(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

void require_kappa(double kappa) {
  if (!std::isfinite(kappa) || kappa < 0.0)
    throw Error(ErrorCode::OutOfRange, "kappa must be finite and nonnegative");
}

// sum_k (x/2)^(2k+nu) / (k! (k+nu)!)
double bessel_series(int nu, double x) {
  const double q = 0.25 * x * x;
  double term = nu == 0 ? 1.0 : 0.5 * x;
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k + nu));
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

// exp(-x) sqrt(2 pi x) I_nu(x) for large x, summing the asymptotic series
// until its terms stop shrinking.
double bessel_asymptotic_sum(int nu, double x) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (8.0 * k * x);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

double bessel(int nu, double kappa) {
  require_kappa(kappa);
  if (kappa <= kBesselSeriesLimit) return bessel_series(nu, kappa);
  return std::exp(kappa) / std::sqrt(kTwoPi * kappa) * bessel_asymptotic_sum(nu, kappa);
}

double mean_resultant_slope(double kappa, double a) {
  if (kappa == 0.0) return 0.5;
  return 1.0 - a * a - a / kappa;
}

// Best-Fisher wrapped-Cauchy envelope, one angle offset from the mean.
class VonMisesSampler {
 public:
  explicit VonMisesSampler(double kappa) : kappa_(kappa) {
    if (kappa_ > kUniformKappa) {
      const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa_ * kappa_);
      const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa_);
      r_ = (1.0 + rho * rho) / (2.0 * rho);
    }
  }

  double offset(Rng& rng) const {
    if (kappa_ <= kUniformKappa) return kTwoPi * sample_uniform(rng);
    for (;;) {
      const double u1 = sample_uniform(rng);
      const double u2 = 1.0 - sample_uniform(rng);  // (0, 1]
      const double u3 = sample_uniform(rng);
      const double z = std::cos(std::numbers::pi * u1);
      const double f = (1.0 + r_ * z) / (r_ + z);
      const double c = kappa_ * (r_ - f);
      if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
        const double a = std::acos(std::clamp(f, -1.0, 1.0));
        return u3 < 0.5 ? -a : a;
      }
    }
  }

 private:
  double kappa_;
  double r_ = 0.0;
};

struct Welford {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const Welford& o) {
    if (o.n == 0) return;
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }
};

}  // namespace

VmfParams::VmfParams(double mean, double k) : mean_angle(wrap_angle(mean)), kappa(k) {
  require_kappa(k);
  if (!std::isfinite(mean)) throw Error(ErrorCode::OutOfRange, "mean angle must be finite");
}

double bessel_i0(double kappa) { return bessel(0, kappa); }
double bessel_i1(double kappa) { return bessel(1, kappa); }

double log_bessel_i0(double kappa) {
  require_kappa(kappa);
  if (kappa <= kBesselSeriesLimit) return std::log(bessel_series(0, kappa));
  return kappa - 0.5 * std::log(kTwoPi * kappa) + std::log(bessel_asymptotic_sum(0, kappa));
}

double mean_resultant(double kappa) {
  require_kappa(kappa);
  if (kappa == 0.0) return 0.0;
  if (kappa <= kBesselSeriesLimit) return bessel_series(1, kappa) / bessel_series(0, kappa);
  return bessel_asymptotic_sum(1, kappa) / bessel_asymptotic_sum(0, kappa);
}

double mean_resultant_inverse(double r) {
  if (!(r >= 0.0 && r < 1.0)) throw Error(ErrorCode::OutOfRange, "r must lie in [0, 1)");
  if (r == 0.0) return 0.0;
  double lo = 0.0;
  double hi = r * (2.0 - r * r) / (1.0 - r * r);
  while (mean_resultant(hi) < r) {
    lo = hi;
    hi *= 2.0;
  }
  double k = hi;
  for (int it = 0; it < 200; ++it) {
    const double a = mean_resultant(k);
    const double f = a - r;
    if (std::abs(f) < 1e-15) break;
    if (f > 0.0) hi = k;
    else lo = k;
    double next = k - f / mean_resultant_slope(k, a);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == k || hi - lo < 1e-15 * hi) break;
    k = next;
  }
  return k;
}

std::vector<double> vmf_sample_angles(const VmfParams& p, std::size_t n, Rng& rng) {
  const VonMisesSampler sampler(p.kappa);
  std::vector<double> out(n);
  for (double& a : out) a = wrap_angle(p.mean_angle + sampler.offset(rng));
  return out;
}

std::vector<UnitVector> vmf_sample_2d(const VmfParams& p, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be positive");
  Rng rng(seed);
  std::vector<UnitVector> out;
  out.reserve(n);
  for (double a : vmf_sample_angles(p, n, rng))
    out.push_back(l2_normalize(std::vector<double>{std::cos(a), std::sin(a)}));
  return out;
}

std::vector<double> sample_vmf(std::span<const double> mu, double kappa, Rng& rng) {
  require_kappa(kappa);
  const std::size_t d = mu.size();
  if (d < 2) throw Error(ErrorCode::InvalidArgument, "dimension must be at least 2");
  auto normal_vector = [&] {
    std::vector<double> v(d);
    for (double& x : v) x = sample_normal(rng);
    return v;
  };
  if (kappa == 0.0) {
    for (;;) {
      auto v = normal_vector();
      const double n = norm(v);
      if (n < kZeroNorm) continue;
      for (double& x : v) x /= n;
      return v;
    }
  }
  const double dm1 = static_cast<double>(d - 1);
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);
  double w = 0.0;
  for (;;) {
    const double z = sample_beta(rng, 0.5 * dm1, 0.5 * dm1);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = 1.0 - sample_uniform(rng);
    if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
  }
  // Tangent direction: a Gaussian draw with its mu component removed.
  std::vector<double> v;
  double vn = 0.0;
  do {
    v = normal_vector();
    const double proj = dot(v, mu);
    for (std::size_t k = 0; k < d; ++k) v[k] -= proj * mu[k];
    vn = norm(v);
  } while (vn < kZeroNorm);
  const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
  std::vector<double> x(d);
  for (std::size_t k = 0; k < d; ++k) x[k] = w * mu[k] + s * v[k] / vn;
  const double xn = norm(x);
  for (double& e : x) e /= xn;
  return x;
}

double vmf_log_density_2d(const VmfParams& p, double angle) {
  return p.kappa * std::cos(angle - p.mean_angle) - std::log(kTwoPi) - log_bessel_i0(p.kappa);
}

double vmf_kl_closed(const VmfParams& p1, const VmfParams& p2) {
  const double a1 = mean_resultant(p1.kappa);
  return log_bessel_i0(p2.kappa) - log_bessel_i0(p1.kappa) + p1.kappa * a1 -
         p2.kappa * a1 * std::cos(p1.mean_angle - p2.mean_angle);
}

McEstimate vmf_kl_monte_carlo(const VmfParams& p1, const VmfParams& p2, std::size_t n,
                              std::uint64_t seed) {
  if (n < 1000) throw Error(ErrorCode::InvalidArgument, "Monte-Carlo KL needs n >= 1000");
  std::vector<Welford> parts(kMonteCarloShards);
  const auto shards = static_cast<std::ptrdiff_t>(kMonteCarloShards);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < shards; ++s) {
    const auto shard = static_cast<std::size_t>(s);
    const std::size_t count = n / kMonteCarloShards + (shard < n % kMonteCarloShards ? 1 : 0);
    Rng rng(derive_seed(seed, {shard}));
    Welford acc;
    for (double a : vmf_sample_angles(p1, count, rng))
      acc.add(vmf_log_density_2d(p1, a) - vmf_log_density_2d(p2, a));
    parts[shard] = acc;
  }
  Welford total;
  for (const auto& part : parts) total.merge(part);
  McEstimate out;
  out.estimate = total.mean;
  out.std_error = std::sqrt(total.m2 / static_cast<double>(total.n - 1) /
                            static_cast<double>(total.n));
  out.n = total.n;
  out.shards = kMonteCarloShards;
  return out;
}

SumVmfApprox sum_vmf_approx(const VmfParams& p1, const VmfParams& p2) {
  if (p1.kappa != p2.kappa)
    throw Error(ErrorCode::InvalidArgument, "sum approximation needs equal concentrations");
  const double x = std::cos(p1.mean_angle) + std::cos(p2.mean_angle);
  const double y = std::sin(p1.mean_angle) + std::sin(p2.mean_angle);
  if (std::hypot(x, y) < kZeroNorm)
    throw Error(ErrorCode::UndefinedDirection, "antipodal means have no sum direction");
  SumVmfApprox out;
  out.mean_angle = p1.mean_angle == p2.mean_angle ? p1.mean_angle : wrap_angle(std::atan2(y, x));
  const double a = mean_resultant(p1.kappa);
  out.kappa_tilde = mean_resultant_inverse(a * a);
  return out;
}

TheoremCheck theorem1_check(double kappa, double mu1, double mu2, std::size_t n,
                            std::uint64_t seed) {
  if (!(kappa > 0.0) || !std::isfinite(kappa))
    throw Error(ErrorCode::InvalidArgument, "kappa must be positive");
  const VmfParams p1(mu1, kappa);
  const VmfParams p2(mu2, kappa);
  if (p1.mean_angle == p2.mean_angle)
    throw Error(ErrorCode::InvalidArgument, "mean directions must differ");
  const SumVmfApprox approx = sum_vmf_approx(p1, p2);
  const VmfParams mixed(approx.mean_angle, approx.kappa_tilde);
  TheoremCheck t;
  t.kappa = kappa;
  t.mu1 = p1.mean_angle;
  t.mu2 = p2.mean_angle;
  const double diff = std::abs(p1.mean_angle - p2.mean_angle);
  t.delta_mu = std::min(diff, kTwoPi - diff);
  t.kappa_tilde = approx.kappa_tilde;
  t.mean_tilde = approx.mean_angle;
  t.kl_mixed = vmf_kl_closed(p1, mixed);
  t.kl_cross = vmf_kl_closed(p1, p2);
  t.mc = vmf_kl_monte_carlo(p1, mixed, n, seed);
  t.holds = t.kl_mixed <= t.kl_cross;
  return t;
}

}  // namespace hypermix
