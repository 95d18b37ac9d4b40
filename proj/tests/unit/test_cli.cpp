#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "ratex/checkpoint.hpp"
#include "ratex/data.hpp"
#include "ratex/synth.hpp"
#include "run_config.hpp"

using namespace ratex;
using namespace ratex::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ratex_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write(const fs::path& p, const nlohmann::json& j) { std::ofstream(p) << j.dump(2); }

nlohmann::json tiny_synth() {
  return {{"preset", "sentiment"}, {"n_docs", 30},   {"mean_length", 40}, {"min_length", 16},
          {"max_length", 80},      {"vocab_size", 200}, {"lexicon_size", 10}, {"seed", 5}};
}

/// Synthesises a tiny corpus into `dir/data` once per directory.
fs::path make_data(const fs::path& dir) {
  const fs::path data = dir / "data";
  if (fs::exists(data / "train.jsonl")) return data;
  write(dir / "synth.json", tiny_synth());
  std::ostringstream out, err;
  EXPECT_EQ(cmd_synth({dir / "synth.json", data, std::nullopt}, out, err), kExitOk) << err.str();
  return data;
}

nlohmann::json tiny_run(const fs::path& data, const std::string& variant) {
  return {{"train_path", (data / "train.jsonl").string()},
          {"dev_path", (data / "dev.jsonl").string()},
          {"variant", variant},
          {"h", 8},
          {"n_layers", 1},
          {"n_heads", 2},
          {"window", 9},
          {"h_prime", 8},
          {"s", 8},
          {"epochs", 2},
          {"repeats", 1},
          {"learning_rate", 0.01}};
}

}  // namespace

TEST(RunConfig, ParsesResolvesAndRejectsUnknownKeys) {
  const RunConfig c = run_config_from_json({{"train_path", "t.jsonl"}, {"variant", "weighted-monolithic"}, {"k", 5}},
                                           "/base");
  EXPECT_EQ(c.train_path, fs::path("/base/t.jsonl"));
  EXPECT_EQ(c.model.variant, ModelVariant::weighted_monolithic);
  EXPECT_EQ(c.model.head.k, 5.0);
  EXPECT_THROW(run_config_from_json({{"bogus", 1}}), UsageError);
  EXPECT_THROW(run_config_from_json({{"h", "eight"}}), UsageError);
  EXPECT_EQ(run_config_from_json(to_json(c)).model.variant, c.model.variant);
}

TEST(RunConfig, OverridesAndHashIgnoresOutDir) {
  RunConfig c;
  Overrides o;
  o.seed = 9;
  o.beta = 2.0;
  o.variant = "compositional-weighted";
  o.out = "elsewhere";
  const std::string before = config_hash(c);
  apply(c, o);
  EXPECT_EQ(c.train.seed, 9u);
  EXPECT_EQ(c.model.head.beta, 2.0);
  EXPECT_EQ(c.model.variant, ModelVariant::compositional_weighted);
  EXPECT_NE(config_hash(c), before);
  RunConfig d = c;
  d.out_dir = "another";
  EXPECT_EQ(config_hash(c), config_hash(d));
}

TEST(Synth, WritesSplitsAndIsDeterministic) {
  const fs::path dir = fresh_dir("synth");
  write(dir / "synth.json", tiny_synth());
  std::ostringstream out, err;
  ASSERT_EQ(cmd_synth({dir / "synth.json", dir / "a", std::nullopt}, out, err), kExitOk) << err.str();
  ASSERT_EQ(cmd_synth({dir / "synth.json", dir / "b", std::nullopt}, out, err), kExitOk);
  for (const char* f : {"train.jsonl", "dev.jsonl", "test.jsonl"}) {
    ASSERT_TRUE(fs::exists(dir / "a" / f));
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f));
  }
  EXPECT_TRUE(fs::exists(dir / "a" / "manifest.json"));
  const Dataset train = load_jsonl(dir / "a" / "train.jsonl");
  EXPECT_EQ(train.size(), 24u);
  ASSERT_EQ(cmd_synth({dir / "synth.json", dir / "c", 77}, out, err), kExitOk);
  EXPECT_NE(slurp(dir / "a" / "train.jsonl"), slurp(dir / "c" / "train.jsonl"));
}

TEST(Synth, InfeasibleSpecIsUsageError) {
  const fs::path dir = fresh_dir("synth_bad");
  auto spec = tiny_synth();
  spec["evidence_fraction"] = 1.5;
  write(dir / "synth.json", spec);
  std::ostringstream out, err;
  EXPECT_EQ(cmd_synth({dir / "synth.json", dir / "o", std::nullopt}, out, err), kExitUsage);
  EXPECT_FALSE(fs::exists(dir / "o" / "train.jsonl"));
  EXPECT_EQ(cmd_synth({dir / "absent.json", dir / "o", std::nullopt}, out, err), kExitUsage);
}

TEST(Train, MissingDatasetFailsBeforeWriting) {
  const fs::path dir = fresh_dir("train_missing");
  auto cfg = tiny_run(dir / "nowhere", "compositional-ranked");
  cfg["out_dir"] = (dir / "run").string();
  write(dir / "run.json", cfg);
  std::ostringstream out, err;
  EXPECT_EQ(cmd_train({dir / "run.json", {}}, out, err), kExitUsage);
  EXPECT_NE(err.str().find("not found"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "run"));
}

TEST(Train, SingleRepeatWritesArtefactsWithZeroStd) {
  const fs::path dir = fresh_dir("train");
  const fs::path data = make_data(dir);
  auto cfg = tiny_run(data, "compositional-ranked");
  cfg["out_dir"] = (dir / "run").string();
  write(dir / "run.json", cfg);
  std::ostringstream out, err;
  ASSERT_EQ(cmd_train({dir / "run.json", {}}, out, err), kExitOk) << err.str();
  for (const char* f : {"repeat-1.ckpt", "repeat-1.json", "report.json", "report.txt", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  }
  const auto report = nlohmann::json::parse(slurp(dir / "run" / "report.json"));
  EXPECT_EQ(report.at("repeats").size(), 1u);
  EXPECT_EQ(report.at("std").at("doc_f1"), 0.0);
  EXPECT_EQ(report.at("std").at("token_f1"), 0.0);
  const auto sidecar = load_checkpoint(dir / "run" / "repeat-1").sidecar;
  EXPECT_EQ(sidecar.at("config_hash"), report.at("config_hash"));
  EXPECT_NE(slurp(dir / "run" / "report.txt").find("±"), std::string::npos);
}

TEST(Eval, ModelRandomAndTopkGuards) {
  const fs::path dir = fresh_dir("eval");
  const fs::path data = make_data(dir);
  std::ostringstream out, err;
  for (const std::string variant : {"compositional-ranked", "weighted-monolithic"}) {
    auto cfg = tiny_run(data, variant);
    cfg["out_dir"] = (dir / variant).string();
    cfg["epochs"] = 1;
    write(dir / (variant + ".json"), cfg);
    ASSERT_EQ(cmd_train({dir / (variant + ".json"), {}}, out, err), kExitOk) << err.str();
  }

  EvalOptions e;
  e.checkpoint = dir / "compositional-ranked" / "repeat-1.ckpt";
  e.data_path = data / "test.jsonl";
  e.out_dir = dir / "eval_model";
  ASSERT_EQ(cmd_eval(e, out, err), kExitOk) << err.str();
  EXPECT_EQ(read_predictions(e.out_dir / "predictions.jsonl").size(), load_jsonl(e.data_path).size());

  EvalOptions r;
  r.baseline = Baseline::random;
  r.data_path = data / "test.jsonl";
  r.out_dir = dir / "eval_random";
  ASSERT_EQ(cmd_eval(r, out, err), kExitOk) << err.str();
  const auto rep = nlohmann::json::parse(slurp(r.out_dir / "report.json"));
  EXPECT_TRUE(rep.at("doc_f1").is_null());
  EXPECT_FALSE(rep.at("map").is_null());

  EvalOptions t = e;
  t.baseline = Baseline::topk_attn;
  t.out_dir = dir / "eval_topk_bad";
  EXPECT_EQ(cmd_eval(t, out, err), kExitUsage);
  t.checkpoint = dir / "weighted-monolithic" / "repeat-1";
  t.out_dir = dir / "eval_topk";
  EXPECT_EQ(cmd_eval(t, out, err), kExitOk) << err.str();
  for (const auto& p : read_predictions(t.out_dir / "predictions.jsonl")) {
    double sum = 0;
    for (double s : p.token_scores) sum += s;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }

  EvalOptions missing = r;
  missing.data_path = dir / "nope.jsonl";
  EXPECT_EQ(cmd_eval(missing, out, err), kExitUsage);
  EXPECT_THROW(parse_baseline("oracle"), UsageError);
}

TEST(Report, HtmlDeterministicAndMismatchRejected) {
  const fs::path dir = fresh_dir("report");
  const fs::path data = make_data(dir);
  const Dataset test = load_jsonl(data / "test.jsonl");
  std::vector<Prediction> preds;
  for (const auto& d : test.documents) {
    preds.push_back({d.doc_id, 0.1, std::vector<double>(d.token_count(), 0.2), {}, std::vector<int>(d.token_count(), 0)});
  }
  write_predictions(dir / "p.jsonl", preds);
  std::ostringstream out, err;
  ASSERT_EQ(cmd_report({dir / "p.jsonl", data / "test.jsonl", dir / "a.html"}, out, err), kExitOk) << err.str();
  ASSERT_EQ(cmd_report({dir / "p.jsonl", data / "test.jsonl", dir / "b.html"}, out, err), kExitOk);
  const std::string html = slurp(dir / "a.html");
  EXPECT_EQ(html, slurp(dir / "b.html"));
  EXPECT_NE(html.find("title=\"0.2000\""), std::string::npos);
  auto count = [&](const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = html.find(needle); pos != std::string::npos; pos = html.find(needle, pos + 1)) ++n;
    return n;
  };
  // Only the legend carries tp/fp when no token is selected.
  EXPECT_EQ(count("class=\"tp\""), 1u);
  EXPECT_EQ(count("class=\"fp\""), 1u);
  EXPECT_EQ(count(" tp\""), 0u);

  preds.pop_back();
  write_predictions(dir / "short.jsonl", preds);
  std::ostringstream err2;
  EXPECT_EQ(cmd_report({dir / "short.jsonl", data / "test.jsonl", dir / "c.html"}, out, err2), kExitUsage);
  EXPECT_NE(err2.str().find(test.documents.back().doc_id), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "c.html"));
}

TEST(Bench, TwoRowsAndRatio) {
  const fs::path dir = fresh_dir("bench");
  const fs::path data = make_data(dir);
  auto cfg = tiny_run(data, "compositional-ranked");
  cfg["out_dir"] = (dir / "bench").string();
  cfg["bench_variants"] = {"compositional-ranked", "weighted-monolithic"};
  cfg["bench_epochs"] = 1;
  cfg["bench_max_docs"] = 6;
  write(dir / "bench.json", cfg);
  std::ostringstream out, err;
  ASSERT_EQ(cmd_bench({dir / "bench.json", {}}, out, err), kExitOk) << err.str();
  const auto j = nlohmann::json::parse(slurp(dir / "bench" / "bench.json"));
  EXPECT_EQ(j.at("documents"), 6);
  ASSERT_EQ(j.at("variants").size(), 2u);
  const double a = j["variants"][0]["seconds_per_epoch"], b = j["variants"][1]["seconds_per_epoch"];
  EXPECT_DOUBLE_EQ(j.at("ratio").get<double>(), a / b);
  EXPECT_NE(out.str().find("ratio compositional-ranked / weighted-monolithic"), std::string::npos);

  cfg["bench_variants"] = {"compositional-ranked"};
  write(dir / "bench1.json", cfg);
  EXPECT_EQ(cmd_bench({dir / "bench1.json", {}}, out, err), kExitUsage);
}
