#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ratex/vocab.hpp"

namespace ratex {

/// Malformed input data. Messages carry the line number or doc_id at fault.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Document {
  std::string doc_id;
  std::vector<std::vector<std::string>> sentences;
  int doc_label = 0;
  /// Evaluation-only gold rationale, parallel to `sentences`.
  std::optional<std::vector<std::vector<int>>> token_labels;

  std::size_t token_count() const;
  std::vector<std::string> flat_tokens() const;
  std::vector<std::size_t> sentence_lengths() const;
  /// Empty when the document carries no token labels.
  std::vector<int> flat_token_labels() const;
  /// Throws DataError naming the doc_id when an invariant is broken.
  void validate() const;

  friend bool operator==(const Document&, const Document&) = default;
};

enum class Split { train, dev, test };
std::string to_string(Split split);

struct Dataset {
  std::string name;
  Split split = Split::train;
  std::vector<Document> documents;

  std::size_t size() const noexcept { return documents.size(); }
  std::size_t token_count() const;
  /// True when every document carries token labels.
  bool has_token_labels() const;
  /// Share of gold-positive tokens among the tokens of documents that contain
  /// any gold-positive token (the evidence-bearing class). Zero without labels.
  double evidence_fraction() const;
  /// Document validation plus doc_id uniqueness.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

Document parse_document(std::string_view json_line);
std::string to_json_line(const Document& doc);

/// One JSON object per line: doc_id, sentences, doc_label, token_labels (optional).
Dataset read_jsonl(std::istream& in, std::string name = "dataset", Split split = Split::train);
Dataset load_jsonl(const std::filesystem::path& path, Split split = Split::train);
void write_jsonl(const Dataset& dataset, std::ostream& out);
void write_jsonl(const Dataset& dataset, const std::filesystem::path& path);

/// Splits after ".", "!" and "?" tokens, then chunks runs longer than
/// `max_len`. Never yields an empty sentence; concatenation reproduces input.
std::vector<std::vector<std::string>> segment_sentences(std::span<const std::string> tokens, std::size_t max_len);

/// The `max_size` most frequent tokens (reserved ids excluded from the count),
/// ties broken lexicographically.
Vocab build_vocab(const Dataset& train, std::size_t max_size);

/// Token ids per sentence.
std::vector<std::vector<std::size_t>> encode_document(const Document& doc, const Vocab& vocab);

struct SplitFractions {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

struct DatasetSplits {
  Dataset train;
  Dataset dev;
  Dataset test;
};

/// Seeded shuffle followed by contiguous slices.
DatasetSplits split_dataset(const Dataset& dataset, SplitFractions fractions, std::uint64_t seed);

}  // namespace ratex
