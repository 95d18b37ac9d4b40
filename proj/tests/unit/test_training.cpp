#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ratex/checkpoint.hpp"
#include "ratex/synth.hpp"
#include "ratex/training.hpp"

using namespace ratex;

namespace {

SynthSpec tiny_spec(std::uint64_t seed = 3) {
  SynthSpec s = SynthSpec::sentiment();
  s.n_docs = 24;
  s.mean_length = 40;
  s.min_length = 16;
  s.max_length = 80;
  s.vocab_size = 200;
  s.lexicon_size = 10;
  s.seed = seed;
  return s;
}

ModelConfig tiny_config(ModelVariant variant = ModelVariant::compositional_ranked) {
  ModelConfig cfg;
  cfg.encoder.h = 8;
  cfg.encoder.n_layers = 1;
  cfg.encoder.n_heads = 2;
  cfg.encoder.window = 9;
  cfg.head.h_prime = 8;
  cfg.head.s = 8;
  cfg.variant = variant;
  return cfg;
}

struct Fixture {
  Dataset data = synth_generate(tiny_spec());
  Vocab vocab = build_vocab(data, 500);
  std::vector<EncodedDocument> encoded = encode_dataset(data, vocab);
};

double dataset_loss(const ModelConfig& cfg, const ModelParams& p, const Fixture& f) {
  NoGradGuard guard;
  double total = 0.0;
  for (std::size_t d = 0; d < f.data.size(); ++d) {
    const Forward fwd = model_forward(f.encoded[d], cfg, p);
    total += document_loss(fwd, f.data.documents[d].doc_label, cfg).total.item();
  }
  return total / static_cast<double>(f.data.size());
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig t;
  EXPECT_NO_THROW(t.validate());
  t.batch_size = 0;
  EXPECT_THROW(t.validate(), std::invalid_argument);
  t = TrainConfig{};
  t.learning_rate = -1;
  EXPECT_THROW(t.validate(), std::invalid_argument);
  EXPECT_EQ(parse_optimizer(to_string(OptimizerKind::sgd)), OptimizerKind::sgd);
  EXPECT_THROW(parse_optimizer("rmsprop"), std::invalid_argument);
}

TEST(InitParams, DeterministicBiasesZeroGainsOne) {
  const ModelConfig cfg = tiny_config();
  const ModelParams a = init_params(cfg, 50, 7);
  const ModelParams b = init_params(cfg, 50, 7);
  const ModelParams c = init_params(cfg, 50, 8);
  EXPECT_EQ(snapshot(a), snapshot(b));
  EXPECT_NE(snapshot(a), snapshot(c));
  a.visit([&](const std::string& name, const Var& v) {
    const auto data = v.value().data();
    const std::string last = name.substr(name.rfind('.') + 1);
    if (last.ends_with("gain")) {
      for (double x : data) EXPECT_EQ(x, 1.0) << name;
    } else if (last.starts_with("b") || last.ends_with("bias")) {
      for (double x : data) EXPECT_EQ(x, 0.0) << name;
    }
  });
}

TEST(InitParams, XavierBound) {
  const ModelConfig cfg = tiny_config();
  const ModelParams p = init_params(cfg, 50, 1);
  const auto& w = p.head.w_e.value();
  const double bound = std::sqrt(6.0 / static_cast<double>(w.shape()[0] + w.shape()[1]));
  for (double x : w.data()) EXPECT_LE(std::abs(x), bound);
}

TEST(Optimizer, ZeroLearningRateLeavesParamsUnchanged) {
  Fixture f;
  const ModelConfig cfg = tiny_config();
  const ModelParams p = init_params(cfg, f.vocab.size(), 1);
  const auto before = snapshot(p);
  for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
    Optimizer opt(kind, 0.0, p.list());
    TrainConfig t;
    t.learning_rate = 0.0;
    t.optimizer = kind;
    train_epoch(cfg, p, opt, f.data, f.encoded, t, 1);
    EXPECT_EQ(snapshot(p), before);
  }
}

TEST(Optimizer, SgdStepDecreasesLoss) {
  Fixture f;
  const ModelConfig cfg = tiny_config();
  const ModelParams p = init_params(cfg, f.vocab.size(), 1);
  const double before = dataset_loss(cfg, p, f);
  Optimizer opt(OptimizerKind::sgd, 1e-2, p.list());
  opt.zero_grad();
  for (std::size_t d = 0; d < f.data.size(); ++d) {
    const Forward fwd = model_forward(f.encoded[d], cfg, p);
    Var loss = document_loss(fwd, f.data.documents[d].doc_label, cfg).total;
    backward(scale(loss, 1.0 / static_cast<double>(f.data.size())));
  }
  opt.step();
  EXPECT_LT(dataset_loss(cfg, p, f), before);
}

TEST(TrainEpoch, DeterministicTrajectory) {
  Fixture f;
  const ModelConfig cfg = tiny_config(ModelVariant::weighted_monolithic);
  TrainConfig t;
  t.learning_rate = 1e-2;
  std::vector<double> runs[2];
  std::vector<NamedTensor> finals[2];
  for (int r = 0; r < 2; ++r) {
    const ModelParams p = init_params(cfg, f.vocab.size(), 4);
    Optimizer opt(t.optimizer, t.learning_rate, p.list());
    for (std::size_t e = 1; e <= 3; ++e) runs[r].push_back(train_epoch(cfg, p, opt, f.data, f.encoded, t, e).mean_loss);
    finals[r] = snapshot(p);
  }
  EXPECT_EQ(runs[0], runs[1]);
  EXPECT_EQ(finals[0], finals[1]);
  EXPECT_LT(runs[0].back(), runs[0].front());
}

TEST(SelectCheckpoint, HighestDocF1EarliestOnTies) {
  auto make = [](std::vector<double> f1s) {
    std::vector<Checkpoint> out;
    for (std::size_t i = 0; i < f1s.size(); ++i) {
      Checkpoint c;
      c.epoch = i + 1;
      c.dev_report.doc_f1 = f1s[i];
      out.push_back(c);
    }
    return out;
  };
  EXPECT_EQ(select_checkpoint(make({0.5, 0.9, 0.7})).epoch, 2u);
  EXPECT_EQ(select_checkpoint(make({0.8, 0.8, 0.8})).epoch, 1u);
  EXPECT_EQ(select_checkpoint(make({0.1, 0.6, 0.6})).epoch, 2u);
  EXPECT_THROW(select_checkpoint({}), std::invalid_argument);
}

TEST(Snapshot, RestoreRejectsMismatch) {
  const ModelConfig cfg = tiny_config();
  const ModelParams p = init_params(cfg, 30, 1);
  auto snap = snapshot(p);
  snap.pop_back();
  EXPECT_THROW(restore(p, snap), std::invalid_argument);
  snap = snapshot(p);
  snap.front().name = "nope";
  EXPECT_THROW(restore(p, snap), std::invalid_argument);
}

TEST(Predict, ZeroParamsGiveHalfAndEmptyRationale) {
  Fixture f;
  const ModelConfig cfg = tiny_config();
  const ModelParams p = ModelParams::zeros(cfg, f.vocab.size());
  const auto preds = predict_dataset(cfg, p, f.data, f.encoded);
  ASSERT_EQ(preds.size(), f.data.size());
  for (std::size_t d = 0; d < preds.size(); ++d) {
    EXPECT_EQ(preds[d].doc_id, f.data.documents[d].doc_id);
    EXPECT_DOUBLE_EQ(preds[d].y_hat, 0.5);
    EXPECT_EQ(preds[d].token_scores.size(), f.data.documents[d].token_count());
    for (int b : preds[d].binary_rationale) EXPECT_EQ(b, 0);
  }
}

TEST(TrainRun, ReportBoundsRestoreAndSerialisedRecompute) {
  Fixture f;
  const auto splits = split_dataset(f.data, {0.5, 0.5, 0.0}, 2);
  const ModelConfig cfg = tiny_config();
  TrainConfig t;
  t.epochs = 3;
  t.learning_rate = 1e-2;
  ModelParams p;
  std::size_t calls = 0;
  const RunResult res = train_run(cfg, p, splits.train, splits.dev, f.vocab, t, 1,
                                  [&](std::size_t, const EpochStats&, const EvalReport&) { ++calls; });
  EXPECT_EQ(calls, 3u);
  ASSERT_EQ(res.history.size(), 3u);
  const Checkpoint& best = res.history[res.best];
  EXPECT_EQ(&best, &select_checkpoint(res.history));
  EXPECT_EQ(snapshot(p), best.tensors);

  const auto encoded = encode_dataset(splits.dev, f.vocab);
  const auto preds = predict_dataset(cfg, p, splits.dev, encoded);
  const EvalReport rep = evaluate_predictions(splits.dev, preds, loss_variant(cfg.variant), cfg.head.k);
  EXPECT_EQ(rep, best.dev_report);
  for (const auto& v : {rep.doc_f1, rep.token_p, rep.token_r, rep.token_f1, rep.token_f05, rep.map}) {
    ASSERT_TRUE(v.has_value());
    EXPECT_GE(*v, 0.0);
    EXPECT_LE(*v, 1.0);
  }
  EXPECT_DOUBLE_EQ(rep.coverage, 1.0);

  std::stringstream io;
  write_predictions(io, preds);
  auto reread = read_predictions(io);
  EXPECT_EQ(evaluate_predictions(splits.dev, reread, loss_variant(cfg.variant), cfg.head.k), rep);

  ModelParams fresh = init_params(cfg, f.vocab.size(), 99);
  restore(fresh, best.tensors);
  EXPECT_EQ(predict_dataset(cfg, fresh, splits.dev, encoded), preds);
}

TEST(EvaluateTokenScores, BaselineHasNoDocF1) {
  Fixture f;
  std::vector<std::size_t> lengths;
  for (const auto& d : f.data.documents) lengths.push_back(d.token_count());
  const auto scores = random_baseline_scores(lengths, 1);
  const EvalReport r = evaluate_token_scores(f.data, scores, 8.0);
  EXPECT_FALSE(r.doc_f1.has_value());
  EXPECT_TRUE(r.map.has_value());
  EXPECT_EQ(r.coverage, 0.0);
}
