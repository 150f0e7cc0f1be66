#include "hypermix/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "hypermix/matrix.hpp"

namespace hypermix {

namespace {

void copy_into(std::span<const double> src, std::span<double> dst) {
  std::copy(src.begin(), src.end(), dst.begin());
}

double clamped_dot(std::span<const double> a, std::span<const double> b) {
  return std::clamp(dot(a, b), -1.0, 1.0);
}

}  // namespace

MixStatus linear_mix_into(double lambda, std::span<const double> a,
                          std::span<const double> b, std::span<double> out) {
  if (lambda == 1.0 || lambda == 0.0) {
    copy_into(lambda == 1.0 ? a : b, out);
    return MixStatus::Ok;
  }
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = lambda * a[k] + (1.0 - lambda) * b[k];
  const double n = norm(out);
  if (n < kZeroNorm) return MixStatus::Zero;
  for (double& x : out) x /= n;
  return MixStatus::Ok;
}

MixStatus geodesic_mix_into(double lambda, std::span<const double> a,
                            std::span<const double> b, std::span<double> out) {
  const double theta = std::acos(clamped_dot(a, b));
  if (theta > std::numbers::pi - kAntipodalMargin) return MixStatus::Antipodal;
  if (lambda == 1.0) {
    copy_into(a, out);
    return MixStatus::Ok;
  }
  if (lambda == 0.0) {
    copy_into(b, out);
    return MixStatus::Ok;
  }
  const double s = std::sin(theta);
  if (s < kParallelSinThreshold) return linear_mix_into(lambda, a, b, out);
  const double ka = std::sin(lambda * theta) / s;
  const double kb = std::sin((1.0 - lambda) * theta) / s;
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = ka * a[k] + kb * b[k];
  return MixStatus::Ok;
}

void geodesic_mix_backward(double lambda, std::span<const double> a,
                           std::span<const double> b, std::span<const double> g,
                           std::span<double> grad_a, std::span<double> grad_b) {
  if (lambda == 1.0) {
    axpy(1.0, g, grad_a);
    return;
  }
  if (lambda == 0.0) {
    axpy(1.0, g, grad_b);
    return;
  }
  const double c = clamped_dot(a, b);
  const double theta = std::acos(c);
  const double s = std::sin(theta);
  if (s < kParallelSinThreshold) {
    std::vector<double> n(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) n[k] = lambda * a[k] + (1.0 - lambda) * b[k];
    const double len = norm(n);
    for (double& x : n) x /= len;
    const double mg = dot(n, g);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double dn = (g[k] - n[k] * mg) / len;
      grad_a[k] += lambda * dn;
      grad_b[k] += (1.0 - lambda) * dn;
    }
    return;
  }
  const double la = lambda * theta;
  const double lb = (1.0 - lambda) * theta;
  const double ka = std::sin(la) / s;
  const double kb = std::sin(lb) / s;
  const double cos_t = std::cos(theta);
  // d/dtheta of sin(x theta)/sin(theta), then chain through theta = acos(c).
  const double dka_dt = (lambda * std::cos(la) * s - std::sin(la) * cos_t) / (s * s);
  const double dkb_dt = ((1.0 - lambda) * std::cos(lb) * s - std::sin(lb) * cos_t) / (s * s);
  const double dka = -dka_dt / s;
  const double dkb = -dkb_dt / s;
  const double coupling = dka * dot(g, a) + dkb * dot(g, b);
  for (std::size_t k = 0; k < a.size(); ++k) {
    grad_a[k] += ka * g[k] + coupling * b[k];
    grad_b[k] += kb * g[k] + coupling * a[k];
  }
}

void normalize_backward(std::span<const double> raw, std::span<const double> grad_unit,
                        std::span<double> grad_raw) {
  const double len = norm(raw);
  double ug = 0.0;
  for (std::size_t k = 0; k < raw.size(); ++k) ug += raw[k] * grad_unit[k];
  ug /= len;
  for (std::size_t k = 0; k < raw.size(); ++k)
    grad_raw[k] += (grad_unit[k] - (raw[k] / len) * ug) / len;
}

}  // namespace hypermix
