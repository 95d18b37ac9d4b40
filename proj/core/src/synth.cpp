#include "ratex/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

namespace ratex {

SynthSpec SynthSpec::sentiment() {
  SynthSpec s;
  s.name = "sentiment";
  return s;
}

SynthSpec SynthSpec::fce_like() {
  SynthSpec s;
  s.name = "fce";
  s.mean_length = 441.0;
  s.min_length = 48;
  s.max_length = 725;
  s.evidence_fraction = 0.13;
  s.span_min = 1;
  s.span_max = 1;
  return s;
}

SynthSpec SynthSpec::bea_like() {
  SynthSpec s;
  s.name = "bea";
  s.mean_length = 213.0;
  s.min_length = 40;
  s.max_length = 655;
  s.evidence_fraction = 0.09;
  s.span_min = 1;
  s.span_max = 1;
  return s;
}

SynthSpec SynthSpec::preset(const std::string& name) {
  if (name == "sentiment") return sentiment();
  if (name == "fce") return fce_like();
  if (name == "bea") return bea_like();
  throw SynthSpecError("unknown synthetic preset '" + name + "' (expected sentiment, fce or bea)");
}

void SynthSpec::validate() const {
  if (n_docs == 0) throw SynthSpecError("n_docs must be positive");
  if (!(evidence_fraction > 0.0 && evidence_fraction < 1.0)) {
    throw SynthSpecError("evidence_fraction must lie in (0, 1)");
  }
  if (min_length == 0 || min_length > max_length) throw SynthSpecError("need 0 < min_length <= max_length");
  if (!(mean_length >= static_cast<double>(min_length) && mean_length <= static_cast<double>(max_length))) {
    throw SynthSpecError("mean_length must lie within [min_length, max_length]");
  }
  if (sentence_min < 2 || sentence_min > sentence_max) throw SynthSpecError("need 2 <= sentence_min <= sentence_max");
  if (sentence_max > max_sentence_len) throw SynthSpecError("sentence_max exceeds max_sentence_len");
  if (vocab_size == 0 || lexicon_size == 0) throw SynthSpecError("vocab_size and lexicon_size must be positive");
  if (span_min == 0 || span_min > span_max) throw SynthSpecError("need 0 < span_min <= span_max");
  if (label_threshold == 0) throw SynthSpecError("label_threshold must be positive");
  if (evidence_fraction * mean_length < static_cast<double>(label_threshold)) {
    throw SynthSpecError("infeasible spec: evidence_fraction x mean_length = " +
                         std::to_string(evidence_fraction * mean_length) + " is below label_threshold " +
                         std::to_string(label_threshold));
  }
  const double sum = train_fraction + dev_fraction + test_fraction;
  if (std::abs(sum - 1.0) > 1e-9) throw SynthSpecError("split fractions must sum to 1");
}

void to_json(nlohmann::json& j, const SynthSpec& s) {
  j = nlohmann::json{{"name", s.name},
                     {"n_docs", s.n_docs},
                     {"mean_length", s.mean_length},
                     {"min_length", s.min_length},
                     {"max_length", s.max_length},
                     {"sentence_min", s.sentence_min},
                     {"sentence_max", s.sentence_max},
                     {"max_sentence_len", s.max_sentence_len},
                     {"vocab_size", s.vocab_size},
                     {"zipf_exponent", s.zipf_exponent},
                     {"evidence_fraction", s.evidence_fraction},
                     {"lexicon_size", s.lexicon_size},
                     {"label_threshold", s.label_threshold},
                     {"span_min", s.span_min},
                     {"span_max", s.span_max},
                     {"negative_evidence", s.negative_evidence},
                     {"train_fraction", s.train_fraction},
                     {"dev_fraction", s.dev_fraction},
                     {"test_fraction", s.test_fraction},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SynthSpec& s) {
  if (!j.is_object()) throw SynthSpecError("synthetic spec must be a JSON object");
  if (j.contains("preset")) s = SynthSpec::preset(j.at("preset").get<std::string>());
  nlohmann::json known;
  to_json(known, s);
  for (const auto& [key, value] : j.items()) {
    if (key != "preset" && !known.contains(key)) throw SynthSpecError("unknown synthetic spec field '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    get("name", s.name);
    get("n_docs", s.n_docs);
    get("mean_length", s.mean_length);
    get("min_length", s.min_length);
    get("max_length", s.max_length);
    get("sentence_min", s.sentence_min);
    get("sentence_max", s.sentence_max);
    get("max_sentence_len", s.max_sentence_len);
    get("vocab_size", s.vocab_size);
    get("zipf_exponent", s.zipf_exponent);
    get("evidence_fraction", s.evidence_fraction);
    get("lexicon_size", s.lexicon_size);
    get("label_threshold", s.label_threshold);
    get("span_min", s.span_min);
    get("span_max", s.span_max);
    get("negative_evidence", s.negative_evidence);
    get("train_fraction", s.train_fraction);
    get("dev_fraction", s.dev_fraction);
    get("test_fraction", s.test_fraction);
    get("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw SynthSpecError(std::string("bad synthetic spec field: ") + e.what());
  }
}

namespace {

struct PlantedDoc {
  std::vector<std::string> tokens;
  std::vector<int> labels;
};

std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

PlantedDoc generate_one(const SynthSpec& spec, int label, std::mt19937_64& rng,
                        std::discrete_distribution<std::size_t>& background) {
  std::gamma_distribution<double> length_dist(6.0, spec.mean_length / 6.0);
  const auto length = static_cast<std::size_t>(std::clamp(
      std::llround(length_dist(rng)), static_cast<long long>(spec.min_length), static_cast<long long>(spec.max_length)));

  PlantedDoc doc;
  doc.tokens.resize(length);
  doc.labels.assign(length, 0);
  std::vector<std::uint8_t> taken(length, 0);

  for (std::size_t pos = 0; pos < length;) {
    const std::size_t end = std::min(length, pos + uniform_index(rng, spec.sentence_min, spec.sentence_max));
    for (std::size_t i = pos; i + 1 < end; ++i) doc.tokens[i] = "w" + std::to_string(background(rng));
    doc.tokens[end - 1] = ".";
    taken[end - 1] = 1;
    pos = end;
  }

  const std::size_t content = static_cast<std::size_t>(std::count(taken.begin(), taken.end(), 0));
  const auto target = static_cast<std::size_t>(std::llround(spec.evidence_fraction * static_cast<double>(length)));
  const std::size_t n_plant = std::min(content, std::max(spec.label_threshold, target));
  const char* prefix = label == 1 ? "pos" : "neg";
  const bool marked = (label == 1) != spec.negative_evidence;

  auto plant = [&](std::size_t i) {
    doc.tokens[i] = prefix + std::to_string(uniform_index(rng, 0, spec.lexicon_size - 1));
    doc.labels[i] = marked ? 1 : 0;
    taken[i] = 1;
  };

  std::size_t placed = 0;
  for (std::size_t attempts = 0; placed < n_plant && attempts < 100000; ++attempts) {
    const std::size_t len = std::min(uniform_index(rng, spec.span_min, spec.span_max), n_plant - placed);
    const std::size_t start = uniform_index(rng, 0, length - len);
    if (std::any_of(taken.begin() + static_cast<std::ptrdiff_t>(start),
                    taken.begin() + static_cast<std::ptrdiff_t>(start + len), [](std::uint8_t t) { return t; })) {
      continue;
    }
    for (std::size_t i = start; i < start + len; ++i) plant(i);
    placed += len;
  }
  for (std::size_t i = 0; i < length && placed < n_plant; ++i) {
    if (!taken[i]) {
      plant(i);
      ++placed;
    }
  }
  return doc;
}

}  // namespace

Dataset synth_generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  std::vector<double> weights(spec.vocab_size);
  for (std::size_t r = 0; r < spec.vocab_size; ++r) weights[r] = 1.0 / std::pow(static_cast<double>(r + 1), spec.zipf_exponent);
  std::discrete_distribution<std::size_t> background(weights.begin(), weights.end());

  std::vector<int> labels(spec.n_docs, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(spec.n_docs / 2), 1);
  std::shuffle(labels.begin(), labels.end(), rng);

  const std::size_t width = std::to_string(spec.n_docs).size();
  Dataset ds;
  ds.name = spec.name;
  ds.documents.reserve(spec.n_docs);
  for (std::size_t d = 0; d < spec.n_docs; ++d) {
    PlantedDoc planted = generate_one(spec, labels[d], rng, background);
    Document doc;
    std::string index = std::to_string(d);
    doc.doc_id = spec.name + "-" + std::string(width - index.size(), '0') + index;
    doc.doc_label = labels[d];
    doc.sentences = segment_sentences(planted.tokens, spec.max_sentence_len);
    std::vector<std::vector<int>> token_labels;
    std::size_t offset = 0;
    for (const auto& s : doc.sentences) {
      token_labels.emplace_back(planted.labels.begin() + static_cast<std::ptrdiff_t>(offset),
                                planted.labels.begin() + static_cast<std::ptrdiff_t>(offset + s.size()));
      offset += s.size();
    }
    doc.token_labels = std::move(token_labels);
    ds.documents.push_back(std::move(doc));
  }
  return ds;
}

}  // namespace ratex
