#pragma once

// Subcommands of the `ratex` tool. Each returns a process exit code:
// 0 success, 1 internal failure, 2 bad input. Inputs are validated before any
// file is written.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace ratex::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct SynthOptions {
  std::filesystem::path spec_path;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
};

struct TrainOptions {
  std::filesystem::path config_path;
  Overrides overrides;
};

enum class Baseline { none, random, topk_attn };

struct EvalOptions {
  std::filesystem::path checkpoint;  // either checkpoint file or their common stem
  std::filesystem::path data_path;
  std::filesystem::path out_dir = "eval";
  Baseline baseline = Baseline::none;
  std::optional<double> k;
  std::uint64_t seed = 1;
  bool token_metrics = true;
  bool head_max = false;  // top-k attention baseline: max over heads instead of mean
};

struct ReportOptions {
  std::filesystem::path predictions_path;
  std::filesystem::path data_path;
  std::filesystem::path out_html;
};

struct BenchOptions {
  std::filesystem::path config_path;
  Overrides overrides;
};

int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err);

Baseline parse_baseline(const std::string& name);

}  // namespace ratex::cli
