#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <algorithm>
#include <cstdlib>
#include <string>

#include <json.hpp>

#include "hypermix/data_io.hpp"
#include "hypermix/metrics.hpp"
#include "support.hpp"

using namespace hypermix;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

Run cli(const std::string& args, const test::TempDir& dir, const std::string& env = "") {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + quote(HYPERMIX_CLI_PATH) + " " + args +
                          " >" + quote(out.string()) + " 2>" + quote(err.string());
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = test::read_text(out);
  r.err = test::read_text(err);
  return r;
}

std::string pair_args(const test::TempDir& dir, const std::string& img = "image.emb",
                      const std::string& txt = "text.emb") {
  return "--image " + quote((dir / img).string()) + " --text " + quote((dir / txt).string());
}

// A one-document JSON stdout.
json parse_only(const std::string& text) {
  json j;
  CHECK_NOTHROW(j = json::parse(text));
  return j;
}

void make_synth(const test::TempDir& dir, std::size_t m = 64) {
  const Run r = cli("synth --out " + quote(dir.path().string()) + " --m " + std::to_string(m) +
                        " --seed 3",
                    dir);
  REQUIRE(r.code == 0);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 1") {
  test::TempDir dir("cli_usage");
  CHECK(cli("", dir).code == 1);
  CHECK(cli("frobnicate", dir).code == 1);
  CHECK(cli("theorem --kappa 5 --mu1 0 --mu2 1 --bogus", dir).code == 1);
  CHECK(cli("theorem --kappa 5 --mu1 0", dir).code == 1);
  CHECK(cli("analyze --json --csv " + pair_args(dir), dir).code == 1);
  CHECK(cli("analyze --threads 0 " + pair_args(dir), dir).code == 1);
  CHECK(cli("--help", dir).code == 0);
}

TEST_CASE("synth and analyze") {
  test::TempDir dir("cli_analyze");
  make_synth(dir);
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  const Run a = cli("analyze --json --manifest " + quote((dir / "manifest.json").string()), dir);
  REQUIRE(a.code == 0);
  const json j = parse_only(a.out);
  CHECK(j["modality_gap_norm"].get<double>() > 0.5);
  CHECK(j.contains("alignment"));
  CHECK(j.contains("uniformity"));

  const Run plain = cli("analyze " + pair_args(dir), dir);
  CHECK(plain.code == 0);
  CHECK(plain.out.find("modality_gap_norm: ") != std::string::npos);
  const Run csv = cli("analyze --csv " + pair_args(dir), dir);
  CHECK(csv.out.rfind("alignment,", 0) == 0);

  const Run same = cli("analyze --json " + pair_args(dir, "image.emb", "image.emb"), dir);
  REQUIRE(same.code == 0);
  CHECK(json::parse(same.out)["modality_gap_norm"].get<double>() == 0.0);

  // gap direction points from the text cluster toward the image cluster (+e1)
  const auto p = load_pairs(dir / "image.emb", dir / "text.emb");
  const auto gap = modality_gap(p);
  CHECK(gap.delta[1] > 0.9 * gap.norm);
}

TEST_CASE("file and shape errors") {
  test::TempDir dir("cli_files");
  make_synth(dir, 16);
  const Run missing = cli("analyze " + pair_args(dir, "image.emb", "nope.emb"), dir);
  CHECK(missing.code == 2);
  CHECK(missing.err.find("nope.emb") != std::string::npos);
  test::write_text(dir / "junk.emb", "XXXXjunkjunkjunkjunk");
  CHECK(cli("analyze " + pair_args(dir, "junk.emb", "text.emb"), dir).code == 2);
  write_emb(dir / "short.emb", test::random_batch(5, 32, 1));
  CHECK(cli("analyze " + pair_args(dir, "image.emb", "short.emb"), dir).code == 3);
  write_emb(dir / "narrow.emb", test::random_batch(16, 8, 1));
  CHECK(cli("retrieve " + pair_args(dir, "image.emb", "narrow.emb"), dir).code == 3);
  CHECK(cli("retrieve --k 17 " + pair_args(dir), dir).code == 6);
  CHECK(cli("retrieve --direction sideways " + pair_args(dir), dir).code == 6);
}

TEST_CASE("mix endpoints are bit exact") {
  test::TempDir dir("cli_mix");
  make_synth(dir, 40);
  const std::string one = quote((dir / "one.emb").string());
  const std::string zero = quote((dir / "zero.emb").string());
  REQUIRE(cli("mix --lambda 1 --out " + one + " " + pair_args(dir), dir).code == 0);
  REQUIRE(cli("mix --lambda 0 --out " + zero + " " + pair_args(dir), dir).code == 0);
  CHECK(test::read_text(dir / "one.emb") == test::read_text(dir / "image.emb"));
  CHECK(test::read_text(dir / "zero.emb") == test::read_text(dir / "text.emb"));
  REQUIRE(cli("mix --linear --lambda 1 --out " + one + " " + pair_args(dir), dir).code == 0);
  CHECK(test::read_text(dir / "one.emb") == test::read_text(dir / "image.emb"));
}

TEST_CASE("mix midpoint and antipodal rows") {
  test::TempDir dir("cli_mix2");
  write_emb(dir / "i.emb", EmbeddingBatch::from_rows(Matrix{{1, 0, 0}, {0, 1, 0}}));
  write_emb(dir / "t.emb", EmbeddingBatch::from_rows(Matrix{{0, 1, 0}, {1, 0, 0}}));
  const Run r = cli("mix --json --lambda 0.5 --out " + quote((dir / "m.emb").string()) + " " +
                        pair_args(dir, "i.emb", "t.emb"),
                    dir);
  REQUIRE(r.code == 0);
  CHECK(parse_only(r.out)["rows"] == 2);
  const auto m = read_emb(dir / "m.emb");
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(m.row(i)[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-7));
    CHECK(m.row(i)[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-7));
    CHECK(m.row(i)[2] == 0.0);
  }
  write_emb(dir / "a.emb", EmbeddingBatch::from_rows(Matrix{{0, 1, 0}, {0, -1, 0}}));
  const auto out = quote((dir / "x.emb").string());
  const Run anti = cli("mix --lambda 0.5 --out " + out + " " + pair_args(dir, "i.emb", "a.emb"), dir);
  CHECK(anti.code == 4);
  CHECK(anti.err.find("row 1") != std::string::npos);
  const Run lin =
      cli("mix --linear --lambda 0.5 --out " + out + " " + pair_args(dir, "i.emb", "a.emb"), dir);
  CHECK(lin.code == 4);
  CHECK(cli("mix --lambda 1.5 --out " + out + " " + pair_args(dir, "i.emb", "t.emb"), dir).code == 6);
}

TEST_CASE("train outputs and determinism") {
  test::TempDir dir("cli_train");
  make_synth(dir, 48);
  test::write_text(dir / "cfg.json", R"({"epochs": 3, "batch_size": 16, "seed": 4})");
  auto train = [&](const std::string& out, const std::string& extra = "") {
    return cli("train --json --config " + quote((dir / "cfg.json").string()) + " --out " +
                   quote((dir / out).string()) + " " + pair_args(dir) + extra,
               dir);
  };
  const Run a = train("a");
  REQUIRE(a.code == 0);
  const json j = parse_only(a.out);
  CHECK(j["epoch"] == 3);
  CHECK(a.err.find("epoch 1") != std::string::npos);
  const Run b = train("b", " --threads 3");
  REQUIRE(b.code == 0);
  CHECK(test::read_text(dir / "a/history.csv") == test::read_text(dir / "b/history.csv"));
  CHECK(test::read_text(dir / "a/history.jsonl") == test::read_text(dir / "b/history.jsonl"));
  CHECK(test::read_text(dir / "a/model_w_img.emb") == test::read_text(dir / "b/model_w_img.emb"));
  for (const char* f : {"history.csv", "history.jsonl", "initial.json", "resolved_config.json",
                        "model.json", "model_w_img.emb", "model_w_txt.emb"})
    CHECK(std::filesystem::exists(dir / "a" / f));

  const json resolved = json::parse(test::read_text(dir / "a/resolved_config.json"));
  for (const char* k : {"epochs", "batch_size", "lr", "weight_decay", "beta1", "beta2", "eps",
                        "init_noise", "seed", "loss"})
    CHECK(resolved.contains(k));
  for (const char* k : {"w_m2", "w_v", "w_l", "w_vl", "alpha_m2", "alpha_uni", "tau1", "tau2",
                        "epoch_decay"})
    CHECK(resolved["loss"].contains(k));
  // rerunning from the echoed config reproduces the run
  const Run c = cli("train --quiet --config " + quote((dir / "a/resolved_config.json").string()) +
                        " --out " + quote((dir / "c").string()) + " " + pair_args(dir),
                    dir);
  REQUIRE(c.code == 0);
  CHECK(c.err.empty());
  CHECK(test::read_text(dir / "a/history.csv") == test::read_text(dir / "c/history.csv"));

  test::write_text(dir / "zero.json", R"({"epochs": 0})");
  const Run z = cli("train --quiet --config " + quote((dir / "zero.json").string()) + " --out " +
                        quote((dir / "z").string()) + " " + pair_args(dir),
                    dir);
  REQUIRE(z.code == 0);
  const std::string empty_history = test::read_text(dir / "z/history.csv");
  CHECK(std::count(empty_history.begin(), empty_history.end(), '\n') == 1);
}

TEST_CASE("train config violations exit 5 naming the field") {
  test::TempDir dir("cli_config");
  make_synth(dir, 16);
  auto run = [&](const std::string& cfg) {
    test::write_text(dir / "bad.json", cfg);
    return cli("train --quiet --config " + quote((dir / "bad.json").string()) + " --out " +
                   quote((dir / "o").string()) + " " + pair_args(dir),
               dir);
  };
  const Run unknown = run(R"({"learning_rate": 0.1})");
  CHECK(unknown.code == 5);
  CHECK(unknown.err.find("learning_rate") != std::string::npos);
  const Run range = run(R"({"loss": {"w_vl": -1}})");
  CHECK(range.code == 5);
  CHECK(range.err.find("loss.w_vl") != std::string::npos);
  CHECK(run("{not json").code == 5);
  CHECK(cli("train --config " + quote((dir / "absent.json").string()) + " --out " +
                quote((dir / "o").string()) + " " + pair_args(dir),
            dir)
            .code == 2);
}

TEST_CASE("theorem subcommand") {
  test::TempDir dir("cli_theorem");
  const Run r = cli("theorem --kappa 50 --mu1 0 --mu2 1.0471975511965976 --n 100000", dir);
  REQUIRE(r.code == 0);
  const json j = parse_only(r.out);
  CHECK(j["holds"] == true);
  CHECK(j["mc_std_error"].get<double>() > 0.0);
  CHECK(cli("theorem --kappa 50 --mu1 1 --mu2 1", dir).code == 6);
  CHECK(cli("theorem --kappa 0 --mu1 0 --mu2 1", dir).code == 6);
  CHECK(cli("theorem --csv --kappa 20 --mu1 0 --mu2 1 --n 1000", dir).out.rfind("kappa,", 0) == 0);
}

TEST_CASE("retrieve calibrate arith") {
  test::TempDir dir("cli_eval");
  Matrix eye(6, 6);
  for (std::size_t i = 0; i < 6; ++i) eye(i, i) = 1.0;
  write_emb(dir / "e.emb", EmbeddingBatch::from_rows(eye));
  const Run r = cli("retrieve --json --k 1 " + pair_args(dir, "e.emb", "e.emb"), dir);
  REQUIRE(r.code == 0);
  CHECK(parse_only(r.out)["recall"].get<double>() == 1.0);
  const Run t = cli("retrieve --json --direction t2i " + pair_args(dir, "e.emb", "e.emb"), dir);
  CHECK(json::parse(t.out)["direction"] == "text_to_image");

  const std::string rel = quote((dir / "rel.csv").string());
  const Run c = cli("calibrate --json --reliability-csv " + rel + " " + pair_args(dir, "e.emb", "e.emb"), dir);
  REQUIRE(c.code == 0);
  CHECK(parse_only(c.out)["ece"].get<double>() == 0.0);
  const std::string csv = test::read_text(dir / "rel.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
  CHECK(cli("calibrate --bins 0 " + pair_args(dir, "e.emb", "e.emb"), dir).code == 6);

  // image 0 moved from text 0 toward text 2 lands on image 2
  const Run a = cli("arith --json --image-index 0 --source-text 0 --target-text 2 " +
                        pair_args(dir, "e.emb", "e.emb"),
                    dir);
  REQUIRE(a.code == 0);
  CHECK(parse_only(a.out)["top_index"] == 2);
  CHECK(cli("arith --image-index 9 --source-text 0 --target-text 2 " + pair_args(dir, "e.emb", "e.emb"), dir)
            .code == 6);
}

TEST_CASE("thread count does not change JSON output") {
  test::TempDir dir("cli_threads");
  make_synth(dir, 96);
  const std::vector<std::string> commands{
      "analyze --json " + pair_args(dir),
      "retrieve --json --k 5 " + pair_args(dir),
      "calibrate --json " + pair_args(dir),
      "theorem --json --kappa 30 --mu1 0.2 --mu2 1.4 --n 20000",
  };
  for (const auto& cmd : commands) {
    const Run base = cli(cmd + " --threads 1", dir);
    REQUIRE(base.code == 0);
    parse_only(base.out);
    for (int t : {2, 3, 8}) CHECK(cli(cmd + " --threads " + std::to_string(t), dir).out == base.out);
    CHECK(cli(cmd, dir, "HYPERMIX_THREADS=4").out == base.out);
  }
}

}  // TEST_SUITE
