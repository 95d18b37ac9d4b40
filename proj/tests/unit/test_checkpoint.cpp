#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ratex/checkpoint.hpp"

using namespace ratex;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ratex_ckpt_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<NamedTensor> sample_tensors() {
  Tensor a({2, 3});
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = 0.1 * static_cast<double>(i) - 1e-300;
  Tensor b({4});
  b.data()[3] = -0.0;
  b.data()[1] = 1.0 / 3.0;
  return {{"enc.embedding", a}, {"head.b_y", b}, {"scalar", Tensor::scalar(2.5)}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Tensors, BinaryRoundTripIsExact) {
  const auto t = sample_tensors();
  std::stringstream io;
  write_tensors(io, t);
  EXPECT_EQ(read_tensors(io), t);
}

TEST(Tensors, RejectsBadMagicVersionAndTruncation) {
  std::stringstream io;
  write_tensors(io, sample_tensors());
  const std::string bytes = io.str();

  std::string bad = bytes;
  bad[0] = 'X';
  std::istringstream m(bad);
  EXPECT_THROW(read_tensors(m), FormatError);

  bad = bytes;
  bad[8] = 99;
  std::istringstream v(bad);
  EXPECT_THROW(read_tensors(v), FormatError);

  std::istringstream t(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(read_tensors(t), FormatError);
}

TEST(Hash, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Checkpoint, SaveLoadRoundTrip) {
  const fs::path dir = temp_dir("roundtrip");
  Checkpoint c;
  c.epoch = 4;
  c.tensors = sample_tensors();
  c.dev_report.doc_f1 = 0.875;
  c.dev_report.map = 0.25;
  c.seconds = 1.5;
  save_checkpoint(dir / "repeat-0", c, {{"config_hash", "abc"}, {"seed", 3}});
  EXPECT_TRUE(fs::exists(dir / "repeat-0.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "repeat-0.json"));

  for (const char* name : {"repeat-0", "repeat-0.ckpt", "repeat-0.json"}) {
    const LoadedCheckpoint l = load_checkpoint(checkpoint_stem(dir / name));
    EXPECT_EQ(l.checkpoint.epoch, 4u);
    EXPECT_EQ(l.checkpoint.tensors, c.tensors);
    EXPECT_EQ(l.checkpoint.dev_report, c.dev_report);
    EXPECT_EQ(l.checkpoint.seconds, 1.5);
    EXPECT_EQ(l.sidecar.at("config_hash"), "abc");
    EXPECT_EQ(l.sidecar.at("seed"), 3);
  }
}

TEST(Checkpoint, SavingTwiceIsByteIdentical) {
  const fs::path dir = temp_dir("bytes");
  Checkpoint c;
  c.tensors = sample_tensors();
  save_checkpoint(dir / "a", c, {{"config_hash", "x"}});
  save_checkpoint(dir / "b", c, {{"config_hash", "x"}});
  EXPECT_EQ(slurp(dir / "a.ckpt"), slurp(dir / "b.ckpt"));
  EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
  EXPECT_EQ(file_hash(dir / "a.ckpt"), hex64(fnv1a(slurp(dir / "a.ckpt"))));
}

TEST(Checkpoint, MissingFileFails) {
  const fs::path dir = temp_dir("missing");
  EXPECT_ANY_THROW(load_checkpoint(dir / "absent"));
}

TEST(Predictions, JsonlRoundTripDropsWeights) {
  Prediction p{"doc-1", 0.75, {0.1, 0.9}, {0.2, 0.8}, {0, 1}};
  Prediction q{"doc-2", 0.25, {0.5}, {1.0}, {0}};
  const std::vector<Prediction> preds{p, q};
  std::stringstream io;
  write_predictions(io, preds);
  const std::string text = io.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  const auto back = read_predictions(io);
  ASSERT_EQ(back.size(), 2u);
  p.weights.clear();
  q.weights.clear();
  EXPECT_EQ(back[0], p);
  EXPECT_EQ(back[1], q);
}

TEST(AtomicWrite, ReplacesContentsWithoutLeftovers) {
  const fs::path dir = temp_dir("atomic");
  write_file_atomic(dir / "f.txt", "one");
  write_file_atomic(dir / "f.txt", "two");
  EXPECT_EQ(slurp(dir / "f.txt"), "two");
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}), 1);
}
