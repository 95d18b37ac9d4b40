#include <gtest/gtest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "ratex/synth.hpp"

using namespace ratex;

namespace {

SynthSpec small_sentiment(std::size_t n = 200) {
  SynthSpec s = SynthSpec::sentiment();
  s.n_docs = n;
  return s;
}

std::size_t count_prefix(const Document& d, const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& t : d.flat_tokens()) n += t.rfind(prefix, 0) == 0;
  return n;
}

}  // namespace

TEST(Synth, SameSeedIsByteIdentical) {
  std::ostringstream a, b;
  write_jsonl(synth_generate(small_sentiment(50)), a);
  write_jsonl(synth_generate(small_sentiment(50)), b);
  EXPECT_EQ(a.str(), b.str());
  SynthSpec other = small_sentiment(50);
  other.seed = 2;
  std::ostringstream c;
  write_jsonl(synth_generate(other), c);
  EXPECT_NE(a.str(), c.str());
}

TEST(Synth, EvidenceFractionNearTarget) {
  const Dataset ds = synth_generate(small_sentiment(1000));
  EXPECT_NEAR(ds.evidence_fraction(), 0.08, 0.01);
}

TEST(Synth, LabelRuleAndBalance) {
  const SynthSpec spec = small_sentiment(400);
  const Dataset ds = synth_generate(spec);
  std::size_t positives = 0;
  for (const auto& d : ds.documents) {
    ds.validate();
    const std::size_t planted = count_prefix(d, "pos");
    EXPECT_EQ(d.doc_label == 1, planted >= spec.label_threshold) << d.doc_id;
    positives += d.doc_label;
    const auto labels = d.flat_token_labels();
    const auto toks = d.flat_tokens();
    for (std::size_t i = 0; i < toks.size(); ++i) EXPECT_EQ(labels[i] == 1, toks[i].rfind("pos", 0) == 0);
    EXPECT_GE(d.token_count(), spec.min_length);
    EXPECT_LE(d.token_count(), spec.max_length);
    for (const auto& s : d.sentences) EXPECT_LE(s.size(), spec.max_sentence_len);
  }
  EXPECT_EQ(positives, 200u);
}

TEST(Synth, NegativeEvidenceFlagMarksNegativeDocuments) {
  SynthSpec spec = small_sentiment(100);
  spec.negative_evidence = true;
  for (const auto& d : synth_generate(spec).documents) {
    const auto labels = d.flat_token_labels();
    const bool any = std::find(labels.begin(), labels.end(), 1) != labels.end();
    EXPECT_EQ(any, d.doc_label == 0);
  }
}

TEST(Synth, GedPresetsPlantIsolatedTokens) {
  SynthSpec spec = SynthSpec::fce_like();
  spec.n_docs = 300;
  const Dataset ds = synth_generate(spec);
  EXPECT_NEAR(ds.evidence_fraction(), 0.13, 0.015);
  EXPECT_EQ(SynthSpec::preset("bea").mean_length, 213.0);
  EXPECT_THROW(SynthSpec::preset("imdb"), SynthSpecError);
}

TEST(Synth, InfeasibleSpecRejected) {
  SynthSpec spec = small_sentiment();
  spec.evidence_fraction = 0.001;
  EXPECT_THROW(spec.validate(), SynthSpecError);
  EXPECT_THROW(synth_generate(spec), SynthSpecError);
}

TEST(Synth, JsonRoundTripAndUnknownField) {
  SynthSpec spec = SynthSpec::bea_like();
  spec.seed = 99;
  EXPECT_EQ(nlohmann::json(spec).get<SynthSpec>().seed, 99u);
  const auto from_preset = nlohmann::json::parse(R"({"preset":"fce","n_docs":12})").get<SynthSpec>();
  EXPECT_EQ(from_preset.mean_length, 441.0);
  EXPECT_EQ(from_preset.n_docs, 12u);
  EXPECT_THROW(nlohmann::json::parse(R"({"n_dcos":12})").get<SynthSpec>(), SynthSpecError);
}
