#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using namespace ratex::cli;

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Base random seed");
  cmd->add_option("--k", o.k, "Supervised top-k percentage");
  cmd->add_option("--beta", o.beta, "Attention sharpness");
  cmd->add_option("--gamma", o.gamma, "Weight of the min/max score terms");
  cmd->add_option("--gamma-ranked", o.gamma_ranked, "Weight of the ranked term");
  cmd->add_option("--variant", o.variant,
                  "weighted-monolithic, ranked-monolithic, compositional-ranked or compositional-weighted");
  cmd->add_option("--out", o.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised token-level rationale extraction for long documents"};
  app.require_subcommand(1);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with planted rationales");
  synth_cmd->add_option("--config", synth.spec_path, "Synthetic spec JSON")->required();
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Override the spec's seed");

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train repeated runs and keep each run's best checkpoint");
  train_cmd->add_option("--config", train.config_path, "Run config JSON")->required();
  add_overrides(train_cmd, train.overrides);

  EvalOptions eval;
  std::string baseline = "none";
  std::optional<std::uint64_t> eval_seed;
  bool no_token_metrics = false;
  std::string reduction = "mean";
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint or a baseline on a dataset");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint (.ckpt, .json or their common stem)");
  eval_cmd->add_option("--data", eval.data_path, "Dataset JSONL")->required();
  eval_cmd->add_option("--baseline", baseline, "random or topk-attn")->check(CLI::IsMember({"none", "random", "topk-attn"}));
  eval_cmd->add_option("--k", eval.k, "Top-k percentage used by the baselines");
  eval_cmd->add_option("--seed", eval_seed, "Seed of the random baseline");
  eval_cmd->add_option("--head-reduction", reduction, "Head reduction for topk-attn")
      ->check(CLI::IsMember({"mean", "max"}));
  eval_cmd->add_flag("--no-token-metrics", no_token_metrics, "Report document F1 only");
  eval_cmd->add_option("--out", eval.out_dir, "Output directory");

  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Render predictions as a highlighted HTML page");
  report_cmd->add_option("--predictions", report.predictions_path, "Predictions JSONL")->required();
  report_cmd->add_option("--data", report.data_path, "Dataset JSONL")->required();
  report_cmd->add_option("--out", report.out_html, "Output HTML file")->required();

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time training epochs of several variants");
  bench_cmd->add_option("--config", bench.config_path, "Run config JSON with bench_variants")->required();
  add_overrides(bench_cmd, bench.overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*synth_cmd) return cmd_synth(synth, std::cout, std::cerr);
  if (*train_cmd) return cmd_train(train, std::cout, std::cerr);
  if (*eval_cmd) {
    eval.baseline = parse_baseline(baseline);
    if (eval_seed) eval.seed = *eval_seed;
    eval.token_metrics = !no_token_metrics;
    eval.head_max = reduction == "max";
    return cmd_eval(eval, std::cout, std::cerr);
  }
  if (*report_cmd) return cmd_report(report, std::cout, std::cerr);
  return cmd_bench(bench, std::cout, std::cerr);
}
