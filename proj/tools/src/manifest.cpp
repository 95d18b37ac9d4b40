#include "manifest.hpp"

#include <chrono>
#include <ctime>

#include "ratex/checkpoint.hpp"

namespace ratex::cli {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest::RunManifest(std::string command, nlohmann::ordered_json config, std::uint64_t seed)
    : command_(std::move(command)), config_(std::move(config)), seed_(seed), started_(utc_timestamp()) {}

void RunManifest::input(const std::string& name, const std::filesystem::path& path) {
  inputs_[name] = path.string();
}

void RunManifest::output(const std::string& name, const std::filesystem::path& path) {
  outputs_[name] = path.string();
  hashes_[path.string()] = file_hash(path);
}

void RunManifest::write(const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["config"] = config_;
  j["seed"] = seed_;
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  j["started_at"] = started_;
  j["finished_at"] = utc_timestamp();
  j["artifact_hashes"] = hashes_;
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace ratex::cli
