#ifndef HYPERMIX_LOSSES_HPP_
#define HYPERMIX_LOSSES_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hypermix/matrix.hpp"
#include "hypermix/sphere.hpp"

namespace hypermix {

struct MixLossConfig {
  double w_m2 = 0.1;
  double w_v = 0.1;
  double w_l = 0.1;
  double w_vl = 0.1;
  double alpha_m2 = 0.5;
  double alpha_uni = 2.0;
  double tau1 = 0.01;
  double tau2 = 0.01;
  bool epoch_decay = false;

  // Throws InvalidConfig naming the first offending field.
  void validate() const;
};

inline constexpr const char* kClip = "clip";
inline constexpr const char* kM2Mix = "m2mix";
inline constexpr const char* kVMix = "vmix";
inline constexpr const char* kLMix = "lmix";
inline constexpr const char* kVLMix = "vlmix";

struct MixLambdas {
  double m2 = 0.5;
  double v = 0.5;
  double l = 0.5;
  double vl = 0.5;
};

struct LossValue {
  double total = 0.0;
  std::map<std::string, double> components;   // unweighted term values
  std::map<std::string, double> weights;      // effective weights, clip = 1
  std::map<std::string, double> lambda_used;
};

// Symmetric InfoNCE over the cross-modal similarity matrix.
double clip_loss(const PairedEmbeddings& p, double tau);
double m2mix_loss(const PairedEmbeddings& p, double tau2, MixRatio lambda);
double vmix_loss(const PairedEmbeddings& p, double tau, MixRatio lambda);
double lmix_loss(const PairedEmbeddings& p, double tau, MixRatio lambda);
double vlmix_loss(const PairedEmbeddings& p, double tau, MixRatio lambda);

// Mix weights after the optional 1/(epoch+1) schedule.
double mix_weight_scale(const MixLossConfig& cfg, int epoch);

// One Beta draw per term, in the order m2, v, l, vl.
MixLambdas sample_mix_lambdas(const MixLossConfig& cfg, std::uint64_t seed);
// The λ draws m3mix_loss(p, cfg, seed, epoch) uses.
MixLambdas mix_lambdas_for(const MixLossConfig& cfg, std::uint64_t seed, int epoch);

LossValue m3mix_loss(const PairedEmbeddings& p, const MixLossConfig& cfg, std::uint64_t seed,
                     int epoch);
LossValue m3mix_loss(const PairedEmbeddings& p, const MixLossConfig& cfg,
                     const MixLambdas& lambdas, int epoch);

struct LossGradients {
  LossValue value;
  Matrix d_image;  // w.r.t. raw rows
  Matrix d_text;
  double d_log_tau1 = 0.0;
  double d_log_tau2 = 0.0;
};

// Gradients of the m3-Mix total w.r.t. raw (unnormalized) rows and both
// log-temperatures, holding the λ draws fixed.
LossGradients loss_gradients(const Matrix& raw_image, const Matrix& raw_text,
                             const MixLossConfig& cfg, const MixLambdas& lambdas, int epoch);
LossGradients loss_gradients(const PairedEmbeddings& p, const MixLossConfig& cfg,
                             std::uint64_t seed, int epoch);

// Mean over both retrieval directions of max(max_{j!=i} s_ij - s_ii, 0).
double hinge_value(const PairedEmbeddings& p);

struct LimitRow {
  double tau = 0.0;
  double tau_clip = 0.0;
  double hinge = 0.0;
  double tau_m2 = 0.0;
  double neg_uniformity_proxy = 0.0;
};

// taus must be positive and sorted descending; m2 is evaluated at λ = 0.5.
std::vector<LimitRow> limiting_behavior_probe(const PairedEmbeddings& p,
                                              std::span<const double> taus);

}  // namespace hypermix

#endif  // HYPERMIX_LOSSES_HPP_
