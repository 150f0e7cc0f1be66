#include "hypermix/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "hypermix/error.hpp"
#include "hypermix/geodesic.hpp"
#include "hypermix/kernels.hpp"
#include "hypermix/random.hpp"

namespace hypermix {

namespace {

// Gradient sinks for one loss term. dI/dT are w.r.t. unit rows.
struct Grad {
  Matrix* dI;
  Matrix* dT;
  double* dlog_tau;
};

std::size_t mirror(std::size_t i, std::size_t m) { return m - 1 - i; }

Matrix flipped(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto src = a.row(mirror(i, a.rows()));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix mix_or_throw(double lambda, const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols());
  if (auto f = kernels::serial::geodesic_mix_rows(lambda, a, b, out)) {
    if (f->antipodal)
      throw Error(ErrorCode::AntipodalInputs, "geodesic between antipodal rows is undefined",
                  f->row);
    throw Error(ErrorCode::ZeroVector, "mixed row vanishes", f->row);
  }
  return out;
}

void add_scaled(double c, std::span<const double> v, std::span<double> out) { axpy(c, v, out); }

// Mean soft-target cross entropy over the rows (or columns) of sim / tau.
// When dsim is set, adds scale * dL/dsim to it and scale * dL/dlog(tau) to
// *dlog_tau.
double cross_entropy(const Matrix& sim, const Matrix& target, double tau, bool columns,
                     double scale, Matrix* dsim, double* dlog_tau) {
  const std::size_t m = sim.rows();
  std::vector<double> z(m);
  double total = 0.0;
  for (std::size_t line = 0; line < m; ++line) {
    auto at = [&](const Matrix& x, std::size_t k) { return columns ? x(k, line) : x(line, k); };
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) {
      z[k] = at(sim, k) / tau;
      mx = std::max(mx, z[k]);
    }
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += std::exp(z[k] - mx);
    const double lse = mx + std::log(s);
    double ysum = 0.0;
    double line_loss = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double y = at(target, k);
      if (y == 0.0) continue;
      line_loss += y * (lse - z[k]);
      ysum += y;
    }
    total += line_loss;
    if (dsim == nullptr) continue;
    for (std::size_t k = 0; k < m; ++k) {
      const double dz = scale * (std::exp(z[k] - lse) * ysum - at(target, k)) /
                        static_cast<double>(m);
      (columns ? (*dsim)(k, line) : (*dsim)(line, k)) += dz / tau;
      *dlog_tau -= dz * z[k];
    }
  }
  return total / static_cast<double>(m);
}

// Average of the row and column orientations.
double cross_entropy_2d(const Matrix& sim, const Matrix& target, double tau, double w,
                        Matrix* dsim, double* dlog_tau) {
  return 0.5 * (cross_entropy(sim, target, tau, false, 0.5 * w, dsim, dlog_tau) +
                cross_entropy(sim, target, tau, true, 0.5 * w, dsim, dlog_tau));
}

// Split a similarity-matrix gradient between plain dot-product entries.
void backprop_plain(double c, const Matrix& I, const Matrix& T, std::size_t i, std::size_t j,
                    const Grad& g) {
  add_scaled(c, T.row(j), g.dI->row(i));
  add_scaled(c, I.row(i), g.dT->row(j));
}

void backprop_mix(double lambda, const Matrix& a, const Matrix& b, const Matrix& dmix,
                  Matrix& da, Matrix& db, bool b_is_flipped_a) {
  const std::size_t m = a.rows();
  for (std::size_t i = 0; i < m; ++i) {
    auto grad_b = b_is_flipped_a ? da.row(mirror(i, m)) : db.row(i);
    geodesic_mix_backward(lambda, a.row(i), b.row(i), dmix.row(i), da.row(i), grad_b);
  }
}

double clip_term(const Matrix& I, const Matrix& T, double tau, const Grad* g, double w) {
  const std::size_t m = I.rows();
  const Matrix s = kernels::serial::similarity(I, T);
  const Matrix y = Matrix::identity(m);
  if (g == nullptr) return cross_entropy_2d(s, y, tau, w, nullptr, nullptr);
  Matrix ds(m, m);
  const double loss = cross_entropy_2d(s, y, tau, w, &ds, g->dlog_tau);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) backprop_plain(ds(i, j), I, T, i, j, *g);
  return loss;
}

struct M2Logits {
  Matrix mix;
  Matrix image;  // diagonal I_i.T_i, off-diagonal mix_i.T_j
  Matrix text;   // diagonal T_i.I_i, off-diagonal mix_i.I_j
};

M2Logits m2_logits(const Matrix& I, const Matrix& T, double lambda) {
  const std::size_t m = I.rows();
  if (m < 2) throw Error(ErrorCode::BatchTooSmall, "m2-Mix needs at least two pairs");
  M2Logits out{mix_or_throw(lambda, I, T), Matrix(m, m), Matrix(m, m)};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) {
        out.image(i, i) = dot(I.row(i), T.row(i));
        out.text(i, i) = dot(T.row(i), I.row(i));
      } else {
        out.image(i, j) = dot(out.mix.row(i), T.row(j));
        out.text(i, j) = dot(out.mix.row(i), I.row(j));
      }
    }
  }
  return out;
}

double m2_term(const Matrix& I, const Matrix& T, double tau, double lambda, const Grad* g,
               double w) {
  const std::size_t m = I.rows();
  const M2Logits z = m2_logits(I, T, lambda);
  const Matrix y = Matrix::identity(m);
  if (g == nullptr)
    return 0.5 * (cross_entropy(z.image, y, tau, false, 0.0, nullptr, nullptr) +
                  cross_entropy(z.text, y, tau, false, 0.0, nullptr, nullptr));
  Matrix da(m, m);
  Matrix db(m, m);
  const double loss =
      0.5 * (cross_entropy(z.image, y, tau, false, 0.5 * w, &da, g->dlog_tau) +
             cross_entropy(z.text, y, tau, false, 0.5 * w, &db, g->dlog_tau));
  Matrix dmix(m, I.cols());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) {
        backprop_plain(da(i, i) + db(i, i), I, T, i, i, *g);
        continue;
      }
      add_scaled(da(i, j), T.row(j), dmix.row(i));
      add_scaled(da(i, j), z.mix.row(i), g->dT->row(j));
      add_scaled(db(i, j), I.row(j), dmix.row(i));
      add_scaled(db(i, j), z.mix.row(i), g->dI->row(j));
    }
  }
  backprop_mix(lambda, I, T, dmix, *g->dI, *g->dT, false);
  return loss;
}

// First modality is mixed with its flipped batch; logits at (i, i) and
// (i, M-1-i) use the mixed row.
double uni_term(const Matrix& I, const Matrix& T, double tau, double lambda, const Grad* g,
                double w) {
  const std::size_t m = I.rows();
  const Matrix flip = flipped(I);
  const Matrix mix = mix_or_throw(lambda, I, flip);
  Matrix z(m, m);
  Matrix y(m, m);
  auto mixed = [m](std::size_t i, std::size_t j) { return j == i || j == mirror(i, m); };
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j)
      z(i, j) = dot(mixed(i, j) ? mix.row(i) : I.row(i), T.row(j));
    y(i, i) += lambda;
    y(i, mirror(i, m)) += 1.0 - lambda;
  }
  if (g == nullptr) return cross_entropy_2d(z, y, tau, w, nullptr, nullptr);
  Matrix dz(m, m);
  const double loss = cross_entropy_2d(z, y, tau, w, &dz, g->dlog_tau);
  Matrix dmix(m, I.cols());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!mixed(i, j)) {
        backprop_plain(dz(i, j), I, T, i, j, *g);
        continue;
      }
      add_scaled(dz(i, j), T.row(j), dmix.row(i));
      add_scaled(dz(i, j), mix.row(i), g->dT->row(j));
    }
  }
  backprop_mix(lambda, I, flip, dmix, *g->dI, *g->dI, true);
  return loss;
}

double vl_term(const Matrix& I, const Matrix& T, double tau, double lambda, const Grad* g,
               double w) {
  const std::size_t m = I.rows();
  const Matrix flip_i = flipped(I);
  const Matrix flip_t = flipped(T);
  const Matrix mix_i = mix_or_throw(lambda, I, flip_i);
  const Matrix mix_t = mix_or_throw(lambda, T, flip_t);
  Matrix z = kernels::serial::similarity(I, T);
  for (std::size_t i = 0; i < m; ++i) z(i, i) = dot(mix_i.row(i), mix_t.row(i));
  const Matrix y = Matrix::identity(m);
  if (g == nullptr) return cross_entropy_2d(z, y, tau, w, nullptr, nullptr);
  Matrix dz(m, m);
  const double loss = cross_entropy_2d(z, y, tau, w, &dz, g->dlog_tau);
  Matrix dmix_i(m, I.cols());
  Matrix dmix_t(m, I.cols());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i != j) {
        backprop_plain(dz(i, j), I, T, i, j, *g);
        continue;
      }
      add_scaled(dz(i, i), mix_t.row(i), dmix_i.row(i));
      add_scaled(dz(i, i), mix_i.row(i), dmix_t.row(i));
    }
  }
  backprop_mix(lambda, I, flip_i, dmix_i, *g->dI, *g->dI, true);
  backprop_mix(lambda, T, flip_t, dmix_t, *g->dT, *g->dT, true);
  return loss;
}

void require_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw Error(ErrorCode::InvalidArgument, "temperature must be positive and finite");
}

const Matrix& img(const PairedEmbeddings& p) { return p.image.matrix(); }
const Matrix& txt(const PairedEmbeddings& p) { return p.text.matrix(); }

struct GradSet {
  Matrix dI;
  Matrix dT;
  double dlog_tau1 = 0.0;
  double dlog_tau2 = 0.0;
};

LossValue evaluate(const Matrix& I, const Matrix& T, const MixLossConfig& cfg,
                   const MixLambdas& lambdas, int epoch, GradSet* gs) {
  cfg.validate();
  const double scale = mix_weight_scale(cfg, epoch);
  std::optional<Grad> g1;
  std::optional<Grad> g2;
  std::optional<Grad> g1_swapped;
  if (gs != nullptr) {
    g1 = Grad{&gs->dI, &gs->dT, &gs->dlog_tau1};
    g2 = Grad{&gs->dI, &gs->dT, &gs->dlog_tau2};
    g1_swapped = Grad{&gs->dT, &gs->dI, &gs->dlog_tau1};
  }
  auto ptr = [](std::optional<Grad>& g) { return g ? &*g : nullptr; };

  LossValue v;
  v.components[kClip] = clip_term(I, T, cfg.tau1, ptr(g1), 1.0);
  v.weights[kClip] = 1.0;
  v.total = v.components[kClip];

  auto add = [&](const char* name, double weight, double lambda, auto&& term) {
    if (weight <= 0.0) return;
    const double w = weight * scale;
    const double c = term(w);
    v.components[name] = c;
    v.weights[name] = w;
    v.lambda_used[name] = lambda;
    v.total += w * c;
  };
  add(kM2Mix, cfg.w_m2, lambdas.m2,
      [&](double w) { return m2_term(I, T, cfg.tau2, lambdas.m2, ptr(g2), w); });
  add(kVMix, cfg.w_v, lambdas.v,
      [&](double w) { return uni_term(I, T, cfg.tau1, lambdas.v, ptr(g1), w); });
  add(kLMix, cfg.w_l, lambdas.l,
      [&](double w) { return uni_term(T, I, cfg.tau1, lambdas.l, ptr(g1_swapped), w); });
  add(kVLMix, cfg.w_vl, lambdas.vl,
      [&](double w) { return vl_term(I, T, cfg.tau1, lambdas.vl, ptr(g1), w); });
  return v;
}

Matrix normalize_rows(const Matrix& raw) {
  Matrix out = raw;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    const double n = norm(r);
    if (!std::isfinite(n)) throw Error(ErrorCode::NonFiniteValue, "non-finite row", i);
    if (n < kZeroNorm) throw Error(ErrorCode::ZeroVector, "cannot normalize a zero row", i);
    for (double& x : r) x /= n;
  }
  return out;
}

double lse_off_diagonal(const Matrix& z, std::size_t i, double tau) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < z.cols(); ++j)
    if (j != i) mx = std::max(mx, z(i, j) / tau);
  double s = 0.0;
  for (std::size_t j = 0; j < z.cols(); ++j)
    if (j != i) s += std::exp(z(i, j) / tau - mx);
  return mx + std::log(s);
}

}  // namespace

void MixLossConfig::validate() const {
  auto weight = [](const char* field, double w) {
    if (!std::isfinite(w) || w < 0.0)
      throw Error(ErrorCode::InvalidConfig, std::string(field) + " must be finite and >= 0");
  };
  auto positive = [](const char* field, double x) {
    if (!std::isfinite(x) || !(x > 0.0))
      throw Error(ErrorCode::InvalidConfig, std::string(field) + " must be finite and > 0");
  };
  weight("w_m2", w_m2);
  weight("w_v", w_v);
  weight("w_l", w_l);
  weight("w_vl", w_vl);
  positive("alpha_m2", alpha_m2);
  positive("alpha_uni", alpha_uni);
  positive("tau1", tau1);
  positive("tau2", tau2);
}

double clip_loss(const PairedEmbeddings& p, double tau) {
  require_tau(tau);
  return clip_term(img(p), txt(p), tau, nullptr, 1.0);
}

double m2mix_loss(const PairedEmbeddings& p, double tau2, MixRatio lambda) {
  require_tau(tau2);
  return m2_term(img(p), txt(p), tau2, lambda.value(), nullptr, 1.0);
}

double vmix_loss(const PairedEmbeddings& p, double tau, MixRatio lambda) {
  require_tau(tau);
  return uni_term(img(p), txt(p), tau, lambda.value(), nullptr, 1.0);
}

double lmix_loss(const PairedEmbeddings& p, double tau, MixRatio lambda) {
  require_tau(tau);
  return uni_term(txt(p), img(p), tau, lambda.value(), nullptr, 1.0);
}

double vlmix_loss(const PairedEmbeddings& p, double tau, MixRatio lambda) {
  require_tau(tau);
  return vl_term(img(p), txt(p), tau, lambda.value(), nullptr, 1.0);
}

double mix_weight_scale(const MixLossConfig& cfg, int epoch) {
  if (epoch < 0) throw Error(ErrorCode::InvalidArgument, "epoch must be nonnegative");
  return cfg.epoch_decay ? 1.0 / static_cast<double>(epoch + 1) : 1.0;
}

MixLambdas sample_mix_lambdas(const MixLossConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  MixLambdas l;
  l.m2 = sample_beta(rng, cfg.alpha_m2, cfg.alpha_m2);
  l.v = sample_beta(rng, cfg.alpha_uni, cfg.alpha_uni);
  l.l = sample_beta(rng, cfg.alpha_uni, cfg.alpha_uni);
  l.vl = sample_beta(rng, cfg.alpha_uni, cfg.alpha_uni);
  return l;
}

MixLambdas mix_lambdas_for(const MixLossConfig& cfg, std::uint64_t seed, int epoch) {
  return sample_mix_lambdas(cfg, derive_seed(seed, {static_cast<std::uint64_t>(epoch)}));
}

LossValue m3mix_loss(const PairedEmbeddings& p, const MixLossConfig& cfg, std::uint64_t seed,
                     int epoch) {
  cfg.validate();
  return m3mix_loss(p, cfg, mix_lambdas_for(cfg, seed, epoch), epoch);
}

LossValue m3mix_loss(const PairedEmbeddings& p, const MixLossConfig& cfg,
                     const MixLambdas& lambdas, int epoch) {
  return evaluate(img(p), txt(p), cfg, lambdas, epoch, nullptr);
}

LossGradients loss_gradients(const Matrix& raw_image, const Matrix& raw_text,
                             const MixLossConfig& cfg, const MixLambdas& lambdas, int epoch) {
  if (raw_image.rows() != raw_text.rows() || raw_image.cols() != raw_text.cols())
    throw Error(ErrorCode::DimensionMismatch, "image and text batches differ in shape");
  const Matrix I = normalize_rows(raw_image);
  const Matrix T = normalize_rows(raw_text);
  GradSet gs{Matrix(I.rows(), I.cols()), Matrix(T.rows(), T.cols())};
  LossGradients out;
  out.value = evaluate(I, T, cfg, lambdas, epoch, &gs);
  out.d_image = Matrix(I.rows(), I.cols());
  out.d_text = Matrix(T.rows(), T.cols());
  for (std::size_t i = 0; i < I.rows(); ++i) {
    normalize_backward(raw_image.row(i), gs.dI.row(i), out.d_image.row(i));
    normalize_backward(raw_text.row(i), gs.dT.row(i), out.d_text.row(i));
  }
  out.d_log_tau1 = gs.dlog_tau1;
  out.d_log_tau2 = gs.dlog_tau2;
  return out;
}

LossGradients loss_gradients(const PairedEmbeddings& p, const MixLossConfig& cfg,
                             std::uint64_t seed, int epoch) {
  cfg.validate();
  return loss_gradients(img(p), txt(p), cfg, mix_lambdas_for(cfg, seed, epoch), epoch);
}

double hinge_value(const PairedEmbeddings& p) {
  const std::size_t m = p.size();
  if (m < 2) throw Error(ErrorCode::BatchTooSmall, "hinge needs at least two pairs");
  const Matrix s = kernels::serial::similarity(img(p), txt(p));
  double image_side = 0.0;
  double text_side = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    double col_max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      row_max = std::max(row_max, s(i, j));
      col_max = std::max(col_max, s(j, i));
    }
    image_side += std::max(row_max - s(i, i), 0.0);
    text_side += std::max(col_max - s(i, i), 0.0);
  }
  return 0.5 * (image_side + text_side) / static_cast<double>(m);
}

std::vector<LimitRow> limiting_behavior_probe(const PairedEmbeddings& p,
                                              std::span<const double> taus) {
  if (p.size() < 2) throw Error(ErrorCode::BatchTooSmall, "probe needs at least two pairs");
  for (std::size_t k = 0; k < taus.size(); ++k) {
    require_tau(taus[k]);
    if (k > 0 && taus[k] > taus[k - 1])
      throw Error(ErrorCode::InvalidArgument, "temperatures must be sorted descending");
  }
  const double hinge = hinge_value(p);
  const M2Logits z = m2_logits(img(p), txt(p), 0.5);
  const auto m = static_cast<double>(p.size());
  std::vector<LimitRow> rows;
  rows.reserve(taus.size());
  for (double tau : taus) {
    LimitRow r;
    r.tau = tau;
    r.tau_clip = tau * clip_loss(p, tau);
    r.hinge = hinge;
    r.tau_m2 = tau * m2mix_loss(p, tau, MixRatio(0.5));
    double proxy = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      proxy += lse_off_diagonal(z.image, i, tau) + lse_off_diagonal(z.text, i, tau);
    r.neg_uniformity_proxy = 0.5 * tau * proxy / m;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace hypermix
