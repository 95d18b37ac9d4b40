#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "ratex/data.hpp"

using namespace ratex;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return read_jsonl(in, "mem");
}

std::vector<std::string> tokens(std::initializer_list<const char*> t) { return {t.begin(), t.end()}; }

}  // namespace

TEST(Jsonl, ParsesDocumentWithLabels) {
  const auto ds = parse(R"({"doc_id":"d1","sentences":[["good","movie"]],"doc_label":1,"token_labels":[[1,0]]})");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.documents[0].doc_id, "d1");
  EXPECT_DOUBLE_EQ(ds.evidence_fraction(), 0.5);
}

TEST(Jsonl, TokenLabelsOptional) {
  const auto ds = parse(R"({"doc_id":"d1","sentences":[["good","movie"]],"doc_label":1})");
  EXPECT_FALSE(ds.documents[0].token_labels.has_value());
  EXPECT_FALSE(ds.has_token_labels());
}

TEST(Jsonl, ShapeMismatchNamesDocument) {
  try {
    parse(R"({"doc_id":"d7","sentences":[["good","movie"]],"doc_label":1,"token_labels":[[1]]})");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("d7"), std::string::npos);
  }
}

TEST(Jsonl, MalformedLineReportsLineNumber) {
  try {
    parse("{\"doc_id\":\"a\",\"sentences\":[[\"x\"]],\"doc_label\":0}\n{not json\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST(Jsonl, RejectsEmptySentenceBadLabelAndDuplicates) {
  EXPECT_THROW(parse(R"({"doc_id":"a","sentences":[[]],"doc_label":0})"), DataError);
  EXPECT_THROW(parse(R"({"doc_id":"a","sentences":[["x"]],"doc_label":2})"), DataError);
  EXPECT_THROW(parse("{\"doc_id\":\"a\",\"sentences\":[[\"x\"]],\"doc_label\":0}\n"
                     "{\"doc_id\":\"a\",\"sentences\":[[\"y\"]],\"doc_label\":1}\n"),
               DataError);
}

TEST(Jsonl, RoundTrip) {
  const std::string text =
      "{\"doc_id\":\"a\",\"sentences\":[[\"x\",\".\"],[\"y\"]],\"doc_label\":1,\"token_labels\":[[1,0],[0]]}\n"
      "{\"doc_id\":\"b\",\"sentences\":[[\"z\"]],\"doc_label\":0}\n";
  const auto ds = parse(text);
  std::ostringstream out;
  write_jsonl(ds, out);
  EXPECT_EQ(out.str(), text);
  EXPECT_EQ(parse(out.str()), ds);
}

TEST(Segment, SplitsAfterTerminators) {
  const auto s = segment_sentences(tokens({"a", ".", "b"}), 64);
  EXPECT_EQ(s, (std::vector<std::vector<std::string>>{{"a", "."}, {"b"}}));
  EXPECT_EQ(segment_sentences(tokens({"a", "b"}), 64), (std::vector<std::vector<std::string>>{{"a", "b"}}));
}

TEST(Segment, ChunksLongRuns) {
  std::vector<std::string> t(130, "w");
  const auto s = segment_sentences(t, 64);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].size(), 64u);
  EXPECT_EQ(s[1].size(), 64u);
  EXPECT_EQ(s[2].size(), 2u);
}

TEST(Segment, NeverLongerThanLimitAndConcatenatesBack) {
  std::vector<std::string> t;
  for (int i = 0; i < 500; ++i) t.push_back(i % 37 == 36 ? "!" : (i % 11 == 0 ? "?" : "w"));
  for (std::size_t limit : {1u, 5u, 16u}) {
    const auto s = segment_sentences(t, limit);
    std::vector<std::string> joined;
    for (const auto& sent : s) {
      EXPECT_FALSE(sent.empty());
      EXPECT_LE(sent.size(), limit);
      joined.insert(joined.end(), sent.begin(), sent.end());
    }
    EXPECT_EQ(joined, t);
  }
}

TEST(Vocab, FrequencyThenLexicographicOrder) {
  Dataset ds;
  ds.documents.push_back({"d", {{"b", "a", "a", "c"}}, 1, std::nullopt});
  const Vocab v = build_vocab(ds, 10);
  ASSERT_EQ(v.size(), 6u);
  EXPECT_EQ(v.token(3), "a");
  EXPECT_EQ(v.token(4), "b");
  EXPECT_EQ(v.token(5), "c");
  const Vocab small = build_vocab(ds, 2);
  EXPECT_EQ(small.size(), 5u);
  EXPECT_FALSE(small.contains("c"));
  EXPECT_EQ(build_vocab(ds, 10), v);
}

TEST(Vocab, UnknownMapsToUnkAtEncodeTime) {
  Dataset ds;
  ds.documents.push_back({"d", {{"a"}}, 1, std::nullopt});
  const Vocab v = build_vocab(ds, 10);
  const Document other{"e", {{"a", "zzz"}}, 0, std::nullopt};
  EXPECT_EQ(encode_document(other, v), (std::vector<std::vector<std::size_t>>{{3, Vocab::kUnk}}));
}

TEST(Split, SizesDeterminismAndPartition) {
  Dataset ds;
  for (int i = 0; i < 100; ++i) ds.documents.push_back({"d" + std::to_string(i), {{"x"}}, i % 2, std::nullopt});
  const auto a = split_dataset(ds, {0.8, 0.1, 0.1}, 42);
  EXPECT_EQ(a.train.size(), 80u);
  EXPECT_EQ(a.dev.size(), 10u);
  EXPECT_EQ(a.test.size(), 10u);
  const auto b = split_dataset(ds, {0.8, 0.1, 0.1}, 42);
  EXPECT_EQ(a.train, b.train);
  std::set<std::string> ids;
  for (const auto* part : {&a.train, &a.dev, &a.test})
    for (const auto& d : part->documents) EXPECT_TRUE(ids.insert(d.doc_id).second);
  EXPECT_EQ(ids.size(), 100u);
  EXPECT_THROW(split_dataset(ds, {0.8, 0.1, 0.2}, 1), std::invalid_argument);
}
