#ifndef HYPERMIX_TRAINER_HPP_
#define HYPERMIX_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hypermix/losses.hpp"
#include "hypermix/matrix.hpp"
#include "hypermix/sphere.hpp"

namespace hypermix {

inline constexpr double kMinTau = 1e-3;
inline constexpr double kMaxTau = 1.0;

// Per-modality linear heads, stored d_out x d_in, plus log-temperatures.
struct ProjectionModel {
  Matrix w_img;
  Matrix w_txt;
  double log_tau1 = 0.0;
  double log_tau2 = 0.0;

  // Identity plus N(0, noise^2) entries; temperatures from the loss config.
  static ProjectionModel initial(std::size_t d, const MixLossConfig& loss, std::uint64_t seed,
                                 double noise = 1e-3);

  std::size_t d_in() const noexcept { return w_img.cols(); }
  std::size_t d_out() const noexcept { return w_img.rows(); }
  double tau1() const;
  double tau2() const;
  void clamp_temperatures();
  bool operator==(const ProjectionModel&) const = default;
};

struct TrainConfig {
  std::size_t epochs = 9;
  std::size_t batch_size = 128;
  double lr = 1e-2;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-6;
  double init_noise = 1e-3;
  MixLossConfig loss;
  std::uint64_t seed = 0;

  // Throws InvalidConfig naming the first offending field.
  void validate() const;
};

// Full-set diagnostics after an epoch. Loss components use λ = 0.5 and the
// model's current temperatures.
struct TrainRecord {
  std::size_t epoch = 0;
  std::map<std::string, double> components;
  double alignment = 0.0;
  double uniformity = 0.0;
  double modality_gap_norm = 0.0;
  double recall1_i2t = 0.0;
  double recall1_t2i = 0.0;
  double hardneg_mixed_image = 0.0;
  double hardneg_mixed_text = 0.0;
  double hardneg_orig_image = 0.0;
  double hardneg_orig_text = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
};

struct TrainResult {
  ProjectionModel model;
  TrainRecord initial;               // before the first update
  std::vector<TrainRecord> history;  // one per epoch, epochs 1..E
};

Matrix project_rows(const Matrix& w, const Matrix& x);
PairedEmbeddings forward(const ProjectionModel& model, const PairedEmbeddings& raw);

struct ModelGradients {
  LossValue value;
  Matrix d_w_img;
  Matrix d_w_txt;
  double d_log_tau1 = 0.0;
  double d_log_tau2 = 0.0;
};

// The model's temperatures override cfg.tau1 / cfg.tau2.
ModelGradients model_gradients(const ProjectionModel& model, const Matrix& x_img,
                               const Matrix& x_txt, const MixLossConfig& cfg,
                               const MixLambdas& lambdas, int epoch);
double model_loss(const ProjectionModel& model, const Matrix& x_img, const Matrix& x_txt,
                  const MixLossConfig& cfg, const MixLambdas& lambdas, int epoch);

struct AdamState {
  Matrix m_img, v_img, m_txt, v_txt;
  double m_tau1 = 0.0, v_tau1 = 0.0, m_tau2 = 0.0, v_tau2 = 0.0;
  std::size_t step = 0;

  static AdamState zeros_like(const ProjectionModel& model);
};

// Adam with bias correction; decoupled weight decay on the W matrices only.
// Temperatures are clamped afterwards.
void adam_step(ProjectionModel& model, const ModelGradients& grads, AdamState& state,
               const TrainConfig& cfg);

TrainRecord evaluate_record(const ProjectionModel& model, const PairedEmbeddings& raw,
                            std::size_t epoch);

TrainResult train(const PairedEmbeddings& raw, const TrainConfig& cfg);

struct FdReport {
  double max_rel_error = 0.0;
  std::string parameter;  // w_img, w_txt, log_tau1 or log_tau2
  std::size_t row = 0;
  std::size_t col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Denominator floor for the relative error, so near-zero gradients are
// judged on absolute error.
inline constexpr double kFdFloor = 1e-6;

FdReport finite_difference_check(const ProjectionModel& model, const Matrix& x_img,
                                 const Matrix& x_txt, const MixLossConfig& cfg,
                                 const MixLambdas& lambdas, int epoch, double step);
FdReport finite_difference_check(const ProjectionModel& model, const PairedEmbeddings& raw,
                                 const TrainConfig& cfg, double step);

// model.json (scalars and file names) plus one raw EMB1 file per matrix.
void save_model(const std::filesystem::path& dir, const ProjectionModel& model);
ProjectionModel load_model(const std::filesystem::path& dir);

}  // namespace hypermix

#endif  // HYPERMIX_TRAINER_HPP_
