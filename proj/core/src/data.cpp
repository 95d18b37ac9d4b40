#include "ratex/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace ratex {

using ojson = nlohmann::ordered_json;

std::size_t Document::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

std::vector<std::string> Document::flat_tokens() const {
  std::vector<std::string> out;
  out.reserve(token_count());
  for (const auto& s : sentences) out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::vector<std::size_t> Document::sentence_lengths() const {
  std::vector<std::size_t> out;
  for (const auto& s : sentences) out.push_back(s.size());
  return out;
}

std::vector<int> Document::flat_token_labels() const {
  std::vector<int> out;
  if (!token_labels) return out;
  for (const auto& s : *token_labels) out.insert(out.end(), s.begin(), s.end());
  return out;
}

void Document::validate() const {
  if (doc_id.empty()) throw DataError("document with empty doc_id");
  if (sentences.empty()) throw DataError("document '" + doc_id + "' has no sentences");
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (sentences[i].empty()) throw DataError("document '" + doc_id + "' has empty sentence " + std::to_string(i));
  }
  if (doc_label != 0 && doc_label != 1) throw DataError("document '" + doc_id + "' has doc_label outside {0,1}");
  if (!token_labels) return;
  if (token_labels->size() != sentences.size()) {
    throw DataError("document '" + doc_id + "': token_labels has " + std::to_string(token_labels->size()) +
                    " sentences, expected " + std::to_string(sentences.size()));
  }
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& labels = (*token_labels)[i];
    if (labels.size() != sentences[i].size()) {
      throw DataError("document '" + doc_id + "': token_labels sentence " + std::to_string(i) + " has " +
                      std::to_string(labels.size()) + " labels for " + std::to_string(sentences[i].size()) +
                      " tokens");
    }
    for (int v : labels)
      if (v != 0 && v != 1) throw DataError("document '" + doc_id + "': token label outside {0,1}");
  }
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "unknown";
}

std::size_t Dataset::token_count() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.token_count();
  return n;
}

bool Dataset::has_token_labels() const {
  return !documents.empty() &&
         std::all_of(documents.begin(), documents.end(), [](const Document& d) { return d.token_labels.has_value(); });
}

double Dataset::evidence_fraction() const {
  std::size_t positive = 0, tokens = 0;
  for (const auto& d : documents) {
    const auto labels = d.flat_token_labels();
    const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    if (pos == 0) continue;
    positive += pos;
    tokens += labels.size();
  }
  return tokens ? static_cast<double>(positive) / static_cast<double>(tokens) : 0.0;
}

void Dataset::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& d : documents) {
    d.validate();
    if (!seen.insert(d.doc_id).second) throw DataError("duplicate doc_id '" + d.doc_id + "' in " + name);
  }
}

Document parse_document(std::string_view json_line) {
  const auto j = ojson::parse(json_line);  // throws nlohmann::json::parse_error
  if (!j.is_object()) throw DataError("expected a JSON object");
  Document doc;
  if (!j.contains("doc_id") || !j["doc_id"].is_string()) throw DataError("missing string field 'doc_id'");
  doc.doc_id = j["doc_id"].get<std::string>();
  if (!j.contains("sentences") || !j["sentences"].is_array()) {
    throw DataError("document '" + doc.doc_id + "': missing array field 'sentences'");
  }
  for (const auto& s : j["sentences"]) {
    if (!s.is_array()) throw DataError("document '" + doc.doc_id + "': sentences must be arrays of strings");
    auto& out = doc.sentences.emplace_back();
    for (const auto& t : s) {
      if (!t.is_string()) throw DataError("document '" + doc.doc_id + "': tokens must be strings");
      out.push_back(t.get<std::string>());
    }
  }
  if (!j.contains("doc_label") || !j["doc_label"].is_number_integer()) {
    throw DataError("document '" + doc.doc_id + "': missing integer field 'doc_label'");
  }
  doc.doc_label = j["doc_label"].get<int>();
  if (j.contains("token_labels") && !j["token_labels"].is_null()) {
    const auto& tl = j["token_labels"];
    if (!tl.is_array()) throw DataError("document '" + doc.doc_id + "': token_labels must be an array");
    std::vector<std::vector<int>> labels;
    for (const auto& s : tl) {
      if (!s.is_array()) throw DataError("document '" + doc.doc_id + "': token_labels must be arrays of 0/1");
      auto& out = labels.emplace_back();
      for (const auto& v : s) {
        if (!v.is_number_integer()) throw DataError("document '" + doc.doc_id + "': token labels must be integers");
        out.push_back(v.get<int>());
      }
    }
    doc.token_labels = std::move(labels);
  }
  doc.validate();
  return doc;
}

std::string to_json_line(const Document& doc) {
  ojson j;
  j["doc_id"] = doc.doc_id;
  j["sentences"] = doc.sentences;
  j["doc_label"] = doc.doc_label;
  if (doc.token_labels) j["token_labels"] = *doc.token_labels;
  return j.dump();
}

Dataset read_jsonl(std::istream& in, std::string name, Split split) {
  Dataset ds;
  ds.name = std::move(name);
  ds.split = split;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      ds.documents.push_back(parse_document(line));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(ds.name + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    } catch (const DataError& e) {
      throw DataError(ds.name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  ds.validate();
  return ds;
}

Dataset load_jsonl(const std::filesystem::path& path, Split split) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path.string());
  return read_jsonl(in, path.string(), split);
}

void write_jsonl(const Dataset& dataset, std::ostream& out) {
  for (const auto& d : dataset.documents) out << to_json_line(d) << '\n';
}

void write_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset file " + path.string());
  write_jsonl(dataset, out);
}

std::vector<std::vector<std::string>> segment_sentences(std::span<const std::string> tokens, std::size_t max_len) {
  if (max_len == 0) throw std::invalid_argument("segment_sentences: max_len must be positive");
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (const auto& t : tokens) {
    current.push_back(t);
    if (t == "." || t == "!" || t == "?" || current.size() == max_len) flush();
  }
  flush();
  return out;
}

Vocab build_vocab(const Dataset& train, std::size_t max_size) {
  if (train.documents.empty()) throw std::invalid_argument("build_vocab: empty training split");
  std::map<std::string, std::size_t> counts;
  for (const auto& d : train.documents)
    for (const auto& s : d.sentences)
      for (const auto& t : s) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, c] : counts) {
    if (tok == Vocab::kClsToken || tok == Vocab::kPadToken || tok == Vocab::kUnkToken) continue;
    ranked.emplace_back(tok, c);
  }
  // `counts` iterates lexicographically, so a stable sort on frequency keeps that tie order.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size) ranked.resize(max_size);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [tok, c] : ranked) tokens.push_back(tok);
  return Vocab(tokens);
}

std::vector<std::vector<std::size_t>> encode_document(const Document& doc, const Vocab& vocab) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(doc.sentences.size());
  for (const auto& s : doc.sentences) out.push_back(vocab.encode(s));
  return out;
}

DatasetSplits split_dataset(const Dataset& dataset, SplitFractions fractions, std::uint64_t seed) {
  const double sum = fractions.train + fractions.dev + fractions.test;
  if (std::abs(sum - 1.0) > 1e-9 || fractions.train < 0 || fractions.dev < 0 || fractions.test < 0) {
    throw std::invalid_argument("split fractions must be non-negative and sum to 1, got sum " + std::to_string(sum));
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n = dataset.size();
  const auto n_train = std::min(n, static_cast<std::size_t>(std::llround(fractions.train * static_cast<double>(n))));
  const auto n_dev =
      std::min(n - n_train, static_cast<std::size_t>(std::llround(fractions.dev * static_cast<double>(n))));

  DatasetSplits out;
  auto fill = [&](Dataset& part, Split split, std::size_t begin, std::size_t end) {
    part.name = dataset.name;
    part.split = split;
    for (std::size_t i = begin; i < end; ++i) part.documents.push_back(dataset.documents[order[i]]);
  };
  fill(out.train, Split::train, 0, n_train);
  fill(out.dev, Split::dev, n_train, n_train + n_dev);
  fill(out.test, Split::test, n_train + n_dev, n);
  return out;
}

}  // namespace ratex
