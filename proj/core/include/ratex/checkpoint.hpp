#pragma once

// On-disk artefacts: parameter containers with a JSON sidecar, and
// per-document prediction files.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ratex/model.hpp"
#include "ratex/training.hpp"

namespace ratex {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary layout, little-endian host order:
///   "RATEXCKP" | u32 version | u32 count | count x (u32 name_len, name,
///   u32 rank, rank x u64 dims, f64 values)
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_tensors(std::ostream& out, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensors(std::istream& in);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);
/// FNV-1a of a file's bytes, hex encoded.
std::string file_hash(const std::filesystem::path& path);

/// Writes `<stem>.ckpt` and `<stem>.json`. The sidecar holds epoch, dev_report,
/// and seconds plus every key of `extra`, which is expected to carry
/// config_hash.
void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& checkpoint, const nlohmann::json& extra);

struct LoadedCheckpoint {
  Checkpoint checkpoint;
  nlohmann::json sidecar;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& stem);

/// `stem` with ".ckpt" or ".json" stripped, so either file may be named.
std::filesystem::path checkpoint_stem(const std::filesystem::path& path);

/// JSON Lines of {doc_id, y_hat, token_scores, binary_rationale}.
void write_predictions(std::ostream& out, std::span<const Prediction> predictions);
void write_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions);
std::vector<Prediction> read_predictions(std::istream& in);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

/// Writes via a temporary sibling file and rename, so readers never see a
/// partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace ratex
