#include "hypermix/serialize.hpp"

#include <cstdio>
#include <set>
#include <sstream>
#include <vector>

#include "hypermix/error.hpp"

namespace hypermix {

namespace {

using Row = std::vector<std::pair<std::string, std::string>>;

std::string csv(const Row& row) {
  std::string head;
  std::string body;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) {
      head += ',';
      body += ',';
    }
    head += row[i].first;
    body += row[i].second;
  }
  return head + '\n' + body + '\n';
}

std::string num(std::size_t n) { return std::to_string(n); }

const std::vector<std::string> kComponentOrder = {kClip, kM2Mix, kVMix, kLMix, kVLMix};

Row record_row(const TrainRecord& r) {
  Row row{{"epoch", num(r.epoch)}};
  for (const auto& name : kComponentOrder) {
    const auto it = r.components.find(name);
    row.emplace_back(name, it == r.components.end() ? "" : format_double(it->second));
  }
  const std::pair<const char*, double> metrics[] = {
      {"alignment", r.alignment},
      {"uniformity", r.uniformity},
      {"modality_gap_norm", r.modality_gap_norm},
      {"recall1_i2t", r.recall1_i2t},
      {"recall1_t2i", r.recall1_t2i},
      {"hardneg_mixed_image", r.hardneg_mixed_image},
      {"hardneg_mixed_text", r.hardneg_mixed_text},
      {"hardneg_orig_image", r.hardneg_orig_image},
      {"hardneg_orig_text", r.hardneg_orig_text},
      {"tau1", r.tau1},
      {"tau2", r.tau2},
  };
  for (const auto& [k, v] : metrics) row.emplace_back(k, format_double(v));
  return row;
}

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::InvalidConfig, "field '" + field + "' " + why);
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                    const std::string& prefix) {
  if (!j.is_object()) bad_field(prefix.empty() ? "<root>" : prefix, "must be an object");
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) bad_field(prefix + k, "is not recognized");
}

double get_number(const nlohmann::json& j, const std::string& key, const std::string& prefix,
                  double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) bad_field(prefix + key, "must be a number");
  return j[key].get<double>();
}

std::uint64_t get_count(const nlohmann::json& j, const std::string& key,
                        const std::string& prefix, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j[key];
  if (!v.is_number_unsigned()) bad_field(prefix + key, "must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

bool get_bool(const nlohmann::json& j, const std::string& key, const std::string& prefix,
              bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) bad_field(prefix + key, "must be a boolean");
  return j[key].get<bool>();
}

// Re-label a validate() failure with the prefixed field name.
template <typename F>
void validate_as(const std::string& prefix, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, prefix + e.message());
  }
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json to_json(const MetricReport& r) {
  return Json{{"alignment", r.alignment},
              {"uniformity", r.uniformity},
              {"modality_gap_norm", r.modality_gap_norm},
              {"alignment_queries", r.alignment_queries},
              {"uniformity_pairs", r.uniformity_pairs},
              {"centroid_rows", r.centroid_rows}};
}

Json to_json(const EceReport& r) {
  std::size_t empty = 0;
  for (const auto& b : r.bins) empty += b.count == 0;
  return Json{{"ece", r.ece},
              {"n_bins", r.n_bins},
              {"n_queries", r.n_queries},
              {"empty_bins", empty}};
}

Json to_json(const RecallReport& r) {
  return Json{{"direction", std::string(to_string(r.direction))},
              {"k", r.k},
              {"queries", r.queries},
              {"hits", r.hits},
              {"recall", r.recall}};
}

Json to_json(const LossValue& v) {
  Json j;
  j["total"] = v.total;
  j["components"] = Json::object();
  j["weights"] = Json::object();
  j["lambda_used"] = Json::object();
  for (const auto& name : kComponentOrder) {
    if (auto it = v.components.find(name); it != v.components.end())
      j["components"][name] = it->second;
    if (auto it = v.weights.find(name); it != v.weights.end()) j["weights"][name] = it->second;
    if (auto it = v.lambda_used.find(name); it != v.lambda_used.end())
      j["lambda_used"][name] = it->second;
  }
  return j;
}

Json to_json(const TheoremCheck& t) {
  return Json{{"kappa", t.kappa},
              {"delta_mu", t.delta_mu},
              {"kl_mixed", t.kl_mixed},
              {"kl_cross", t.kl_cross},
              {"mc_estimate", t.mc.estimate},
              {"mc_std_error", t.mc.std_error},
              {"holds", t.holds},
              {"mu1", t.mu1},
              {"mu2", t.mu2},
              {"kappa_tilde", t.kappa_tilde},
              {"mean_tilde", t.mean_tilde},
              {"mc_samples", t.mc.n},
              {"mc_shards", t.mc.shards}};
}

Json to_json(const TrainRecord& r) {
  Json j;
  j["epoch"] = r.epoch;
  for (const auto& name : kComponentOrder)
    if (auto it = r.components.find(name); it != r.components.end()) j[name] = it->second;
  j["alignment"] = r.alignment;
  j["uniformity"] = r.uniformity;
  j["modality_gap_norm"] = r.modality_gap_norm;
  j["recall1_i2t"] = r.recall1_i2t;
  j["recall1_t2i"] = r.recall1_t2i;
  j["hardneg_mixed_image"] = r.hardneg_mixed_image;
  j["hardneg_mixed_text"] = r.hardneg_mixed_text;
  j["hardneg_orig_image"] = r.hardneg_orig_image;
  j["hardneg_orig_text"] = r.hardneg_orig_text;
  j["tau1"] = r.tau1;
  j["tau2"] = r.tau2;
  return j;
}

Json to_json(const MixLossConfig& c) {
  return Json{{"w_m2", c.w_m2},         {"w_v", c.w_v},
              {"w_l", c.w_l},           {"w_vl", c.w_vl},
              {"alpha_m2", c.alpha_m2}, {"alpha_uni", c.alpha_uni},
              {"tau1", c.tau1},         {"tau2", c.tau2},
              {"epoch_decay", c.epoch_decay}};
}

Json to_json(const TrainConfig& c) {
  return Json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"lr", c.lr},
              {"weight_decay", c.weight_decay},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"eps", c.eps},
              {"init_noise", c.init_noise},
              {"seed", c.seed},
              {"loss", to_json(c.loss)}};
}

Json to_json(const SynthConfig& c) {
  return Json{{"m", c.m},
              {"d", c.d},
              {"gap_angle", c.gap_angle},
              {"kappa_modality", c.kappa_modality},
              {"pair_coupling", c.pair_coupling},
              {"shared_kappa", c.shared_kappa},
              {"seed", c.seed}};
}

std::string to_csv(const MetricReport& r) {
  return csv({{"alignment", format_double(r.alignment)},
              {"uniformity", format_double(r.uniformity)},
              {"modality_gap_norm", format_double(r.modality_gap_norm)},
              {"alignment_queries", num(r.alignment_queries)},
              {"uniformity_pairs", num(r.uniformity_pairs)},
              {"centroid_rows", num(r.centroid_rows)}});
}

std::string to_csv(const EceReport& r) {
  return csv({{"ece", format_double(r.ece)},
              {"n_bins", num(r.n_bins)},
              {"n_queries", num(r.n_queries)}});
}

std::string to_csv(const RecallReport& r) {
  return csv({{"direction", std::string(to_string(r.direction))},
              {"k", num(r.k)},
              {"queries", num(r.queries)},
              {"hits", num(r.hits)},
              {"recall", format_double(r.recall)}});
}

std::string to_csv(const TheoremCheck& t) {
  return csv({{"kappa", format_double(t.kappa)},
              {"delta_mu", format_double(t.delta_mu)},
              {"kl_mixed", format_double(t.kl_mixed)},
              {"kl_cross", format_double(t.kl_cross)},
              {"mc_estimate", format_double(t.mc.estimate)},
              {"mc_std_error", format_double(t.mc.std_error)},
              {"holds", t.holds ? "true" : "false"}});
}

std::string reliability_csv(const EceReport& r) {
  std::string out = "bin_lo,bin_hi,count,mean_conf,mean_acc\n";
  for (const auto& b : r.bins)
    out += format_double(b.lo) + ',' + format_double(b.hi) + ',' + num(b.count) + ',' +
           format_double(b.mean_confidence) + ',' + format_double(b.mean_accuracy) + '\n';
  return out;
}

std::string history_csv(std::span<const TrainRecord> history) {
  std::string out;
  const Row header = record_row(TrainRecord{});
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i].first;
  out += '\n';
  for (const auto& r : history) {
    const Row row = record_row(r);
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i].second;
    out += '\n';
  }
  return out;
}

std::string history_jsonl(std::span<const TrainRecord> history) {
  std::string out;
  for (const auto& r : history) out += to_json(r).dump() + '\n';
  return out;
}

MixLossConfig mix_loss_config_from_json(const nlohmann::json& j, const std::string& prefix) {
  reject_unknown(j, {"w_m2", "w_v", "w_l", "w_vl", "alpha_m2", "alpha_uni", "tau1", "tau2",
                     "epoch_decay"},
                 prefix);
  MixLossConfig c;
  c.w_m2 = get_number(j, "w_m2", prefix, c.w_m2);
  c.w_v = get_number(j, "w_v", prefix, c.w_v);
  c.w_l = get_number(j, "w_l", prefix, c.w_l);
  c.w_vl = get_number(j, "w_vl", prefix, c.w_vl);
  c.alpha_m2 = get_number(j, "alpha_m2", prefix, c.alpha_m2);
  c.alpha_uni = get_number(j, "alpha_uni", prefix, c.alpha_uni);
  c.tau1 = get_number(j, "tau1", prefix, c.tau1);
  c.tau2 = get_number(j, "tau2", prefix, c.tau2);
  c.epoch_decay = get_bool(j, "epoch_decay", prefix, c.epoch_decay);
  validate_as(prefix, [&] { c.validate(); });
  return c;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"epochs", "batch_size", "lr", "weight_decay", "beta1", "beta2", "eps",
                     "init_noise", "seed", "loss"},
                 "");
  TrainConfig c;
  c.epochs = get_count(j, "epochs", "", c.epochs);
  c.batch_size = get_count(j, "batch_size", "", c.batch_size);
  c.lr = get_number(j, "lr", "", c.lr);
  c.weight_decay = get_number(j, "weight_decay", "", c.weight_decay);
  c.beta1 = get_number(j, "beta1", "", c.beta1);
  c.beta2 = get_number(j, "beta2", "", c.beta2);
  c.eps = get_number(j, "eps", "", c.eps);
  c.init_noise = get_number(j, "init_noise", "", c.init_noise);
  c.seed = get_count(j, "seed", "", c.seed);
  if (j.contains("loss")) c.loss = mix_loss_config_from_json(j["loss"], "loss.");
  validate_as("", [&] { c.validate(); });
  return c;
}

}  // namespace hypermix
