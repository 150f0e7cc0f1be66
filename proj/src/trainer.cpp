#include "hypermix/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "hypermix/data_io.hpp"
#include "hypermix/error.hpp"
#include "hypermix/geodesic.hpp"
#include "hypermix/metrics.hpp"
#include "hypermix/random.hpp"

namespace hypermix {

namespace {

// Substream tags under the run seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kLambdaStream = 3;

const double kLogMinTau = std::log(kMinTau);
const double kLogMaxTau = std::log(kMaxTau);

MixLossConfig with_model_taus(MixLossConfig cfg, const ProjectionModel& model) {
  cfg.tau1 = model.tau1();
  cfg.tau2 = model.tau2();
  return cfg;
}

// dW += dY^T X
void accumulate_weight_grad(const Matrix& dy, const Matrix& x, Matrix& dw) {
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t o = 0; o < dw.rows(); ++o) axpy(dy(i, o), x.row(i), dw.row(o));
}

void adam_update(std::span<double> p, std::span<const double> g, std::span<double> m,
                 std::span<double> v, const TrainConfig& cfg, double c1, double c2) {
  for (std::size_t k = 0; k < p.size(); ++k) {
    m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
    v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
    p[k] -= cfg.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg.eps);
  }
}

Matrix gather(const Matrix& src, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = src.row(rows[i]);
    std::copy(r.begin(), r.end(), out.row(i).begin());
  }
  return out;
}

// Batch boundaries; a trailing batch smaller than two rows joins the
// previous one.
std::vector<std::size_t> batch_starts(std::size_t m, std::size_t batch) {
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s < m; s += batch) starts.push_back(s);
  if (starts.size() > 1 && m - starts.back() < 2) starts.pop_back();
  starts.push_back(m);
  return starts;
}

double central_difference(const auto& loss, double& x, double step) {
  const double saved = x;
  x = saved + step;
  const double up = loss();
  x = saved - step;
  const double down = loss();
  x = saved;
  return (up - down) / (2.0 * step);
}

}  // namespace

ProjectionModel ProjectionModel::initial(std::size_t d, const MixLossConfig& loss,
                                         std::uint64_t seed, double noise) {
  Rng rng(derive_seed(seed, {kInitStream}));
  ProjectionModel m;
  m.w_img = Matrix::identity(d);
  m.w_txt = Matrix::identity(d);
  for (double& x : m.w_img.flat()) x += noise * sample_normal(rng);
  for (double& x : m.w_txt.flat()) x += noise * sample_normal(rng);
  m.log_tau1 = std::log(loss.tau1);
  m.log_tau2 = std::log(loss.tau2);
  m.clamp_temperatures();
  return m;
}

double ProjectionModel::tau1() const { return std::exp(log_tau1); }
double ProjectionModel::tau2() const { return std::exp(log_tau2); }

void ProjectionModel::clamp_temperatures() {
  log_tau1 = std::clamp(log_tau1, kLogMinTau, kLogMaxTau);
  log_tau2 = std::clamp(log_tau2, kLogMinTau, kLogMaxTau);
}

void TrainConfig::validate() const {
  auto fail = [](const char* field, const char* rule) {
    throw Error(ErrorCode::InvalidConfig, std::string(field) + " " + rule);
  };
  if (batch_size < 1) fail("batch_size", "must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr", "must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
    fail("weight_decay", "must be nonnegative");
  if (!(beta1 > 0.0 && beta1 < 1.0)) fail("beta1", "must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) fail("beta2", "must lie in (0, 1)");
  if (!(eps > 0.0) || !std::isfinite(eps)) fail("eps", "must be positive");
  if (!(init_noise >= 0.0) || !std::isfinite(init_noise)) fail("init_noise", "must be nonnegative");
  try {
    loss.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, "loss." + e.message());
  }
}

Matrix project_rows(const Matrix& w, const Matrix& x) {
  if (w.cols() != x.cols())
    throw Error(ErrorCode::DimensionMismatch, "projection expects d_in = " +
                                                  std::to_string(w.cols()) + ", got " +
                                                  std::to_string(x.cols()));
  Matrix y(x.rows(), w.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t o = 0; o < w.rows(); ++o) y(i, o) = dot(w.row(o), x.row(i));
  return y;
}

PairedEmbeddings forward(const ProjectionModel& model, const PairedEmbeddings& raw) {
  return PairedEmbeddings(EmbeddingBatch::normalized(project_rows(model.w_img, raw.image.matrix())),
                          EmbeddingBatch::normalized(project_rows(model.w_txt, raw.text.matrix())));
}

ModelGradients model_gradients(const ProjectionModel& model, const Matrix& x_img,
                               const Matrix& x_txt, const MixLossConfig& cfg,
                               const MixLambdas& lambdas, int epoch) {
  const Matrix y_img = project_rows(model.w_img, x_img);
  const Matrix y_txt = project_rows(model.w_txt, x_txt);
  LossGradients g = loss_gradients(y_img, y_txt, with_model_taus(cfg, model), lambdas, epoch);
  ModelGradients out;
  out.value = std::move(g.value);
  out.d_w_img = Matrix(model.w_img.rows(), model.w_img.cols());
  out.d_w_txt = Matrix(model.w_txt.rows(), model.w_txt.cols());
  accumulate_weight_grad(g.d_image, x_img, out.d_w_img);
  accumulate_weight_grad(g.d_text, x_txt, out.d_w_txt);
  out.d_log_tau1 = g.d_log_tau1;
  out.d_log_tau2 = g.d_log_tau2;
  return out;
}

double model_loss(const ProjectionModel& model, const Matrix& x_img, const Matrix& x_txt,
                  const MixLossConfig& cfg, const MixLambdas& lambdas, int epoch) {
  const PairedEmbeddings p(EmbeddingBatch::normalized(project_rows(model.w_img, x_img)),
                           EmbeddingBatch::normalized(project_rows(model.w_txt, x_txt)));
  return m3mix_loss(p, with_model_taus(cfg, model), lambdas, epoch).total;
}

AdamState AdamState::zeros_like(const ProjectionModel& model) {
  AdamState s;
  s.m_img = s.v_img = Matrix(model.w_img.rows(), model.w_img.cols());
  s.m_txt = s.v_txt = Matrix(model.w_txt.rows(), model.w_txt.cols());
  return s;
}

void adam_step(ProjectionModel& model, const ModelGradients& grads, AdamState& state,
               const TrainConfig& cfg) {
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  const double decay = 1.0 - cfg.lr * cfg.weight_decay;
  for (double& w : model.w_img.flat()) w *= decay;
  for (double& w : model.w_txt.flat()) w *= decay;
  adam_update(model.w_img.flat(), grads.d_w_img.flat(), state.m_img.flat(), state.v_img.flat(),
              cfg, c1, c2);
  adam_update(model.w_txt.flat(), grads.d_w_txt.flat(), state.m_txt.flat(), state.v_txt.flat(),
              cfg, c1, c2);
  adam_update({&model.log_tau1, 1}, {&grads.d_log_tau1, 1}, {&state.m_tau1, 1},
              {&state.v_tau1, 1}, cfg, c1, c2);
  adam_update({&model.log_tau2, 1}, {&grads.d_log_tau2, 1}, {&state.m_tau2, 1},
              {&state.v_tau2, 1}, cfg, c1, c2);
  model.clamp_temperatures();
}

TrainRecord evaluate_record(const ProjectionModel& model, const PairedEmbeddings& raw,
                            std::size_t epoch) {
  const PairedEmbeddings p = forward(model, raw);
  TrainRecord r;
  r.epoch = epoch;
  const MixRatio half(0.5);
  r.components[kClip] = clip_loss(p, model.tau1());
  r.components[kM2Mix] = m2mix_loss(p, model.tau2(), half);
  r.components[kVMix] = vmix_loss(p, model.tau1(), half);
  r.components[kLMix] = lmix_loss(p, model.tau1(), half);
  r.components[kVLMix] = vlmix_loss(p, model.tau1(), half);
  r.alignment = relative_alignment(p);
  r.uniformity = uniformity(p);
  r.modality_gap_norm = modality_gap(p).norm;
  const Matrix s = pairwise_similarity(p.image, p.text);
  r.recall1_i2t = recall_at_k(s, 1, Direction::ImageToText).recall;
  r.recall1_t2i = recall_at_k(s, 1, Direction::TextToImage).recall;
  const auto mixed = hard_negative_proportion(p, batch_geodesic_mix(half, p.image, p.text));
  r.hardneg_mixed_image = mixed.image_side;
  r.hardneg_mixed_text = mixed.text_side;
  const auto orig = original_negative_proportion(p);
  r.hardneg_orig_image = orig.image_side;
  r.hardneg_orig_text = orig.text_side;
  r.tau1 = model.tau1();
  r.tau2 = model.tau2();
  return r;
}

TrainResult train(const PairedEmbeddings& raw, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t m = raw.size();
  if (m < 2) throw Error(ErrorCode::BatchTooSmall, "training needs at least two pairs");
  TrainResult out;
  out.model = ProjectionModel::initial(raw.dim(), cfg.loss, cfg.seed, cfg.init_noise);
  out.initial = evaluate_record(out.model, raw, 0);
  AdamState state = AdamState::zeros_like(out.model);
  Rng shuffle(derive_seed(cfg.seed, {kShuffleStream}));
  std::vector<std::size_t> order(m);
  const auto starts = batch_starts(m, std::min(cfg.batch_size, m));
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle);
    for (std::size_t b = 0; b + 1 < starts.size(); ++b) {
      const std::span<const std::size_t> rows(order.data() + starts[b], starts[b + 1] - starts[b]);
      const MixLambdas lambdas =
          sample_mix_lambdas(cfg.loss, derive_seed(cfg.seed, {kLambdaStream, epoch, b}));
      try {
        const ModelGradients g =
            model_gradients(out.model, gather(raw.image.matrix(), rows),
                            gather(raw.text.matrix(), rows), cfg.loss, lambdas,
                            static_cast<int>(epoch));
        adam_step(out.model, g, state, cfg);
      } catch (const Error& e) {
        throw Error(e.code(), "epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                                  ": " + e.message(), e.row());
      }
    }
    out.history.push_back(evaluate_record(out.model, raw, epoch + 1));
  }
  return out;
}

FdReport finite_difference_check(const ProjectionModel& model, const Matrix& x_img,
                                 const Matrix& x_txt, const MixLossConfig& cfg,
                                 const MixLambdas& lambdas, int epoch, double step) {
  if (!(step >= 1e-7 && step <= 1e-3))
    throw Error(ErrorCode::InvalidArgument, "step must lie in [1e-7, 1e-3]");
  const ModelGradients g = model_gradients(model, x_img, x_txt, cfg, lambdas, epoch);
  ProjectionModel probe = model;
  auto loss = [&] { return model_loss(probe, x_img, x_txt, cfg, lambdas, epoch); };
  FdReport report;
  auto check = [&](const char* name, std::size_t r, std::size_t c, double analytic, double& x) {
    const double numeric = central_difference(loss, x, step);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), kFdFloor});
    const double err = std::abs(analytic - numeric) / denom;
    if (err >= report.max_rel_error) {
      report = FdReport{err, name, r, c, analytic, numeric};
    }
  };
  for (std::size_t r = 0; r < probe.w_img.rows(); ++r)
    for (std::size_t c = 0; c < probe.w_img.cols(); ++c)
      check("w_img", r, c, g.d_w_img(r, c), probe.w_img(r, c));
  for (std::size_t r = 0; r < probe.w_txt.rows(); ++r)
    for (std::size_t c = 0; c < probe.w_txt.cols(); ++c)
      check("w_txt", r, c, g.d_w_txt(r, c), probe.w_txt(r, c));
  check("log_tau1", 0, 0, g.d_log_tau1, probe.log_tau1);
  check("log_tau2", 0, 0, g.d_log_tau2, probe.log_tau2);
  return report;
}

FdReport finite_difference_check(const ProjectionModel& model, const PairedEmbeddings& raw,
                                 const TrainConfig& cfg, double step) {
  cfg.validate();
  const MixLambdas lambdas = sample_mix_lambdas(cfg.loss, derive_seed(cfg.seed, {kLambdaStream, 0, 0}));
  return finite_difference_check(model, raw.image.matrix(), raw.text.matrix(), cfg.loss, lambdas,
                                 0, step);
}

void save_model(const std::filesystem::path& dir, const ProjectionModel& model) {
  write_emb_raw(dir / "model_w_img.emb", model.w_img);
  write_emb_raw(dir / "model_w_txt.emb", model.w_txt);
  nlohmann::ordered_json j;
  j["d_in"] = model.d_in();
  j["d_out"] = model.d_out();
  j["log_tau1"] = model.log_tau1;
  j["log_tau2"] = model.log_tau2;
  j["tau1"] = model.tau1();
  j["tau2"] = model.tau2();
  j["w_img"] = "model_w_img.emb";
  j["w_txt"] = "model_w_txt.emb";
  std::ofstream out(dir / "model.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create '" + (dir / "model.json").string() + "'");
  out << j.dump(2) << '\n';
}

ProjectionModel load_model(const std::filesystem::path& dir) {
  const auto path = dir / "model.json";
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
    ProjectionModel m;
    m.log_tau1 = j.at("log_tau1").get<double>();
    m.log_tau2 = j.at("log_tau2").get<double>();
    m.w_img = read_emb_raw(dir / j.at("w_img").get<std::string>());
    m.w_txt = read_emb_raw(dir / j.at("w_txt").get<std::string>());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "'" + path.string() + "': " + e.what());
  }
}

}  // namespace hypermix
