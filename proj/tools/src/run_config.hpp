#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ratex/model.hpp"
#include "ratex/training.hpp"

namespace ratex::cli {

/// Bad flags, configs or inputs: exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat JSON config shared by train, eval and bench.
struct RunConfig {
  std::filesystem::path train_path;
  std::filesystem::path dev_path;
  std::filesystem::path test_path;  // optional
  std::filesystem::path out_dir = "runs/latest";
  std::size_t vocab_size = 20000;
  ModelConfig model;
  TrainConfig train;
  std::vector<ModelVariant> bench_variants;
  std::size_t bench_epochs = 2;
  std::size_t bench_max_docs = 0;  // 0 keeps every training document

  void validate() const;
};

nlohmann::ordered_json to_json(const RunConfig& cfg);
/// Unknown keys and ill-typed values raise UsageError. Relative paths are
/// resolved against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Command-line overrides applied on top of a config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> k;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::optional<double> gamma_ranked;
  std::optional<std::string> variant;
  std::optional<std::filesystem::path> out;
};

void apply(RunConfig& cfg, const Overrides& o);

/// Stable hash of the resolved config, excluding output location.
std::string config_hash(const RunConfig& cfg);

}  // namespace ratex::cli
