#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

namespace ratex::cli {

/// Record of one command invocation, written atomically when it completes.
class RunManifest {
 public:
  RunManifest(std::string command, nlohmann::ordered_json config, std::uint64_t seed);

  void input(const std::string& name, const std::filesystem::path& path);
  /// Records the path and the FNV-1a hash of the file as it is now.
  void output(const std::string& name, const std::filesystem::path& path);
  void write(const std::filesystem::path& path);

 private:
  std::string command_;
  nlohmann::ordered_json config_;
  std::uint64_t seed_;
  std::string started_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
  std::map<std::string, std::string> hashes_;
};

/// Current UTC time as ISO 8601.
std::string utc_timestamp();

}  // namespace ratex::cli
