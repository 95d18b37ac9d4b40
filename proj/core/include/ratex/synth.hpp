#pragma once

// Synthetic long-document corpora with planted, exactly known rationales.
//
// Background tokens follow a Zipfian unigram law over "w<i>" words. Positive
// documents (label 1) receive tokens from a disjoint positive lexicon at
// roughly `evidence_fraction` of their positions; negative documents receive
// the same amount of negative-lexicon tokens. Gold token labels mark the
// positive-lexicon plants, or the negative-lexicon plants when
// `negative_evidence` is set.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "ratex/data.hpp"

namespace ratex {

class SynthSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SynthSpec {
  std::string name = "synthetic";
  std::size_t n_docs = 1000;
  double mean_length = 686.0;
  std::size_t min_length = 64;
  std::size_t max_length = 1935;
  std::size_t sentence_min = 8;  // sentence lengths include the terminator
  std::size_t sentence_max = 40;
  std::size_t max_sentence_len = 64;
  std::size_t vocab_size = 2000;
  double zipf_exponent = 1.0;
  double evidence_fraction = 0.08;
  std::size_t lexicon_size = 40;
  std::size_t label_threshold = 3;
  std::size_t span_min = 3;  // planted run lengths; 1/1 plants isolated tokens
  std::size_t span_max = 8;
  bool negative_evidence = false;
  double train_fraction = 0.8;
  double dev_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 1;

  /// Long reviews, 8% evidence in multi-token spans.
  static SynthSpec sentiment();
  /// Short learner essays, 13% evidence as isolated tokens.
  static SynthSpec fce_like();
  /// Shorter essays, 9% evidence as isolated tokens.
  static SynthSpec bea_like();
  static SynthSpec preset(const std::string& name);

  /// Throws SynthSpecError when the spec is inconsistent or infeasible.
  void validate() const;
};

void to_json(nlohmann::json& j, const SynthSpec& spec);
/// Fields absent from `j` keep their defaults, or the preset named by "preset".
void from_json(const nlohmann::json& j, SynthSpec& spec);

Dataset synth_generate(const SynthSpec& spec);

}  // namespace ratex
