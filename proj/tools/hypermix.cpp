// hypermix: analysis, mixing, training and validation front-end.
#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "hypermix/data_io.hpp"
#include "hypermix/error.hpp"
#include "hypermix/losses.hpp"
#include "hypermix/metrics.hpp"
#include "hypermix/parallel.hpp"
#include "hypermix/serialize.hpp"
#include "hypermix/sphere.hpp"
#include "hypermix/trainer.hpp"
#include "hypermix/vmf.hpp"

namespace fs = std::filesystem;
using namespace hypermix;

namespace {

enum Exit : int {
  kOk = 0,
  kUsage = 1,
  kFile = 2,
  kShape = 3,
  kAntipodal = 4,
  kConfig = 5,
  kDomain = 6,
};

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::IoError:
    case ErrorCode::BadMagic:
    case ErrorCode::UnsupportedVersion:
    case ErrorCode::UnsupportedDtype:
    case ErrorCode::TruncatedFile:
    case ErrorCode::TrailingData:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::NotUnitNorm:
      return kFile;
    case ErrorCode::DimensionMismatch: return kShape;
    case ErrorCode::AntipodalInputs: return kAntipodal;
    case ErrorCode::InvalidConfig: return kConfig;
    default: return kDomain;
  }
}

struct Common {
  bool json = false;
  bool csv = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  auto* j = cmd->add_flag("--json", c.json, "Emit one JSON document on stdout");
  auto* s = cmd->add_flag("--csv", c.csv, "Emit CSV on stdout");
  j->excludes(s);
  cmd->add_option("--threads", c.threads, "Thread bound for metric kernels")
      ->check(CLI::PositiveNumber);
}

void apply_threads(const Common& c) {
  const int n = c.threads > 0 ? c.threads : threads_from_env();
  if (n > 0) set_num_threads(n);
}

void emit(const Common& c, const Json& j, const std::string& csv) {
  if (c.json) {
    std::cout << j.dump(2) << '\n';
  } else if (c.csv) {
    std::cout << csv;
  } else {
    for (const auto& [k, v] : j.items()) std::cout << k << ": " << v.dump() << '\n';
  }
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create '" + path.string() + "'");
  out << body;
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
}

std::string single_row_csv(const Json& j) {
  std::string head;
  std::string row;
  bool first = true;
  for (const auto& [k, v] : j.items()) {
    if (!first) {
      head += ',';
      row += ',';
    }
    first = false;
    head += k;
    row += v.is_number_float() ? format_double(v.get<double>()) : v.is_string() ? v.get<std::string>() : v.dump();
  }
  return head + '\n' + row + '\n';
}

struct PairInputs {
  std::string image;
  std::string text;
  std::string manifest;

  void add(CLI::App* cmd, bool required = true) {
    auto* i = cmd->add_option("--image", image, "Image-side EMB1 file");
    auto* t = cmd->add_option("--text", text, "Text-side EMB1 file");
    auto* m = cmd->add_option("--manifest", manifest, "JSON manifest naming both files");
    m->excludes(i)->excludes(t);
    if (required) {
      i->needs(t);
      t->needs(i);
    }
  }

  PairedEmbeddings load() const {
    if (!manifest.empty()) return load_pairs(read_manifest(manifest));
    if (image.empty() || text.empty())
      throw Error(ErrorCode::InvalidArgument, "need --image and --text, or --manifest");
    return load_pairs(image, text);
  }
};

// ---- subcommands ----

struct AnalyzeArgs {
  Common common;
  PairInputs in;
};

int run_analyze(const AnalyzeArgs& a) {
  apply_threads(a.common);
  const MetricReport r = metric_report(a.in.load());
  emit(a.common, to_json(r), to_csv(r));
  return kOk;
}

struct MixArgs {
  Common common;
  PairInputs in;
  double lambda = 0.5;
  bool linear = false;
  std::string out;
};

int run_mix(const MixArgs& a) {
  apply_threads(a.common);
  const PairedEmbeddings p = a.in.load();
  const MixRatio lambda(a.lambda);
  std::optional<EmbeddingBatch> mixed;
  try {
    mixed = a.linear ? batch_linear_mix(lambda, p.image, p.text)
                     : batch_geodesic_mix(lambda, p.image, p.text);
  } catch (const Error& e) {
    // A vanishing linear mix is the antipodal case of the chord.
    if (e.code() == ErrorCode::ZeroVector)
      throw Error(ErrorCode::AntipodalInputs, e.message(), e.row());
    throw;
  }
  write_emb(a.out, *mixed);
  const Json j{{"rows", mixed->size()},
               {"dim", mixed->dim()},
               {"lambda", a.lambda},
               {"method", a.linear ? "linear" : "geodesic"},
               {"out", a.out}};
  emit(a.common, j, single_row_csv(j));
  return kOk;
}

struct TrainArgs {
  Common common;
  PairInputs in;
  std::string config;
  std::string out;
  bool quiet = false;
};

TrainConfig load_train_config(const std::string& path) {
  if (path.empty()) return TrainConfig{};
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "'" + path + "': " + e.what());
  }
  return train_config_from_json(j);
}

int run_train(const TrainArgs& a) {
  apply_threads(a.common);
  const TrainConfig cfg = load_train_config(a.config);
  const PairedEmbeddings raw = a.in.load();
  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + dir.string() + "': " + ec.message());
  write_text(dir / "resolved_config.json", to_json(cfg).dump(2) + '\n');
  const TrainResult r = train(raw, cfg);
  if (!a.quiet) {
    for (const auto& h : r.history)
      std::cerr << "epoch " << h.epoch << " clip " << h.components.at(kClip) << " alignment "
                << h.alignment << " uniformity " << h.uniformity << '\n';
  }
  write_text(dir / "history.csv", history_csv(r.history));
  write_text(dir / "history.jsonl", history_jsonl(r.history));
  write_text(dir / "initial.json", to_json(r.initial).dump(2) + '\n');
  save_model(dir, r.model);
  const TrainRecord& last = r.history.empty() ? r.initial : r.history.back();
  Json j = to_json(last);
  j["epochs"] = cfg.epochs;
  j["out"] = dir.string();
  emit(a.common, j, history_csv(std::span(&last, 1)));
  return kOk;
}

struct TheoremArgs {
  Common common;
  double kappa = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  std::size_t n = 1'000'000;
  std::uint64_t seed = 0;
};

int run_theorem(const TheoremArgs& a) {
  apply_threads(a.common);
  const TheoremCheck t = theorem1_check(a.kappa, a.mu1, a.mu2, a.n, a.seed);
  Common c = a.common;
  if (!c.csv) c.json = true;
  emit(c, to_json(t), to_csv(t));
  return kOk;
}

struct RetrieveArgs {
  Common common;
  PairInputs in;
  std::size_t k = 1;
  std::string direction = "image_to_text";
};

int run_retrieve(const RetrieveArgs& a) {
  apply_threads(a.common);
  const Direction dir = parse_direction(a.direction);
  const PairedEmbeddings p = a.in.load();
  const RecallReport r = recall_at_k(pairwise_similarity(p.image, p.text), a.k, dir);
  emit(a.common, to_json(r), to_csv(r));
  return kOk;
}

struct CalibrateArgs {
  Common common;
  PairInputs in;
  double tau = 0.01;
  std::size_t bins = 10;
  std::string direction = "image_to_text";
  std::string reliability;
};

int run_calibrate(const CalibrateArgs& a) {
  apply_threads(a.common);
  const Direction dir = parse_direction(a.direction);
  const PairedEmbeddings p = a.in.load();
  const RetrievalConfidences rc =
      retrieval_confidences(pairwise_similarity(p.image, p.text), a.tau, dir);
  const EceReport r = ece(rc.confidence, rc.correct, a.bins);
  if (!a.reliability.empty()) write_text(a.reliability, reliability_csv(r));
  emit(a.common, to_json(r), to_csv(r));
  return kOk;
}

struct ArithArgs {
  Common common;
  PairInputs in;
  std::string gallery;
  std::size_t image_index = 0;
  std::size_t source_text = 0;
  std::size_t target_text = 0;
  double strength = 1.0;
};

UnitVector pick(const EmbeddingBatch& b, std::size_t i, const char* what) {
  if (i >= b.size())
    throw Error(ErrorCode::OutOfRange, std::string(what) + " index " + std::to_string(i) +
                                           " exceeds " + std::to_string(b.size()) + " rows");
  return b.unit_row(i);
}

int run_arith(const ArithArgs& a) {
  apply_threads(a.common);
  const PairedEmbeddings p = a.in.load();
  const EmbeddingBatch gallery = a.gallery.empty() ? p.image : read_emb(a.gallery);
  const SimatResult r = simat_transform(pick(p.image, a.image_index, "image"),
                                        pick(p.text, a.source_text, "source text"),
                                        pick(p.text, a.target_text, "target text"), a.strength,
                                        gallery);
  const Json j{{"top_index", r.top_index},
               {"top_similarity", r.top_similarity},
               {"strength", a.strength}};
  Json full = j;
  full["x"] = r.x;
  emit(a.common, full, single_row_csv(j));
  return kOk;
}

struct SynthArgs {
  Common common;
  SynthConfig cfg;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  apply_threads(a.common);
  const PairedEmbeddings p = synth_bipartite(a.cfg);
  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + dir.string() + "': " + ec.message());
  write_emb(dir / "image.emb", p.image);
  write_emb(dir / "text.emb", p.text);
  write_manifest(dir / "manifest.json", Manifest{"image.emb", "text.emb", std::nullopt});
  Json j = to_json(a.cfg);
  j["modality_gap_norm"] = modality_gap(p).norm;
  j["out"] = dir.string();
  emit(a.common, j, single_row_csv(j));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperspherical multi-modal embedding toolkit"};
  app.require_subcommand(1);

  AnalyzeArgs analyze;
  auto* c_analyze = app.add_subcommand("analyze", "Alignment, uniformity and modality gap");
  add_common(c_analyze, analyze.common);
  analyze.in.add(c_analyze);

  MixArgs mix;
  auto* c_mix = app.add_subcommand("mix", "Row-wise mix of paired embeddings");
  add_common(c_mix, mix.common);
  mix.in.add(c_mix);
  c_mix->add_option("--lambda", mix.lambda, "Weight of the image row")->required();
  c_mix->add_flag("--linear", mix.linear, "Convex mix then normalize instead of geodesic");
  c_mix->add_option("--out", mix.out, "Output EMB1 file")->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Fine-tune projection heads");
  add_common(c_train, tr.common);
  tr.in.add(c_train);
  c_train->add_option("--config", tr.config, "Training config JSON");
  c_train->add_option("--out", tr.out, "Output directory")->required();
  c_train->add_flag("--quiet", tr.quiet, "No per-epoch log on stderr");

  TheoremArgs th;
  auto* c_theorem = app.add_subcommand("theorem", "Mixed-vs-cross KL check for circular vMF");
  add_common(c_theorem, th.common);
  c_theorem->add_option("--kappa", th.kappa, "Concentration")->required();
  c_theorem->add_option("--mu1", th.mu1, "First mean angle (radians)")->required();
  c_theorem->add_option("--mu2", th.mu2, "Second mean angle (radians)")->required();
  c_theorem->add_option("--n", th.n, "Monte-Carlo samples");
  c_theorem->add_option("--seed", th.seed, "Sampling seed");

  RetrieveArgs rt;
  auto* c_retrieve = app.add_subcommand("retrieve", "Recall@k over paired rows");
  add_common(c_retrieve, rt.common);
  rt.in.add(c_retrieve);
  c_retrieve->add_option("--k", rt.k, "Cutoff");
  c_retrieve->add_option("--direction", rt.direction, "image_to_text or text_to_image");

  CalibrateArgs cal;
  auto* c_cal = app.add_subcommand("calibrate", "Expected calibration error of retrieval");
  add_common(c_cal, cal.common);
  cal.in.add(c_cal);
  c_cal->add_option("--tau", cal.tau, "Softmax temperature");
  c_cal->add_option("--bins", cal.bins, "Number of bins");
  c_cal->add_option("--direction", cal.direction, "image_to_text or text_to_image");
  c_cal->add_option("--reliability-csv", cal.reliability, "Write reliability bins here");

  ArithArgs ar;
  auto* c_arith = app.add_subcommand("arith", "Text-delta embedding arithmetic and retrieval");
  add_common(c_arith, ar.common);
  ar.in.add(c_arith);
  c_arith->add_option("--gallery", ar.gallery, "Gallery EMB1 file (default: image file)");
  c_arith->add_option("--image-index", ar.image_index, "Source image row")->required();
  c_arith->add_option("--source-text", ar.source_text, "Source text row")->required();
  c_arith->add_option("--target-text", ar.target_text, "Target text row")->required();
  c_arith->add_option("--strength", ar.strength, "Transformation strength");

  SynthArgs sy;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic bipartite fixture");
  add_common(c_synth, sy.common);
  c_synth->add_option("--out", sy.out, "Output directory")->required();
  c_synth->add_option("--m", sy.cfg.m, "Pairs");
  c_synth->add_option("--d", sy.cfg.d, "Dimension");
  c_synth->add_option("--gap", sy.cfg.gap_angle, "Angle between modality centroids");
  c_synth->add_option("--kappa", sy.cfg.kappa_modality, "Within-modality concentration");
  c_synth->add_option("--coupling", sy.cfg.pair_coupling, "Shared-direction blend");
  c_synth->add_option("--shared-kappa", sy.cfg.shared_kappa, "Shared-direction concentration");
  c_synth->add_option("--seed", sy.cfg.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*c_analyze) return run_analyze(analyze);
    if (*c_mix) return run_mix(mix);
    if (*c_train) return run_train(tr);
    if (*c_theorem) return run_theorem(th);
    if (*c_retrieve) return run_retrieve(rt);
    if (*c_cal) return run_calibrate(cal);
    if (*c_arith) return run_arith(ar);
    if (*c_synth) return run_synth(sy);
  } catch (const Error& e) {
    std::cerr << "hypermix: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "hypermix: " << e.what() << '\n';
    return kDomain;
  }
  return kUsage;
}
