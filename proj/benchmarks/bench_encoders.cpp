#include <benchmark/benchmark.h>

#include <random>

#include "ratex/metrics.hpp"
#include "ratex/model.hpp"
#include "ratex/training.hpp"

using namespace ratex;

namespace {

ModelConfig config(ModelVariant variant, std::size_t window) {
  ModelConfig cfg;
  cfg.encoder.h = 16;
  cfg.encoder.n_layers = 1;
  cfg.encoder.n_heads = 2;
  cfg.encoder.window = window;
  cfg.head.h_prime = 16;
  cfg.head.s = 16;
  cfg.variant = variant;
  cfg.head.loss = loss_variant(variant);
  return cfg;
}

EncodedDocument document(std::size_t tokens, std::size_t sentence_len) {
  std::mt19937_64 rng(1);
  EncodedDocument doc;
  for (std::size_t done = 0; done < tokens; done += sentence_len) {
    std::vector<std::size_t> s(std::min(sentence_len, tokens - done));
    for (auto& id : s) id = 3 + rng() % 500;
    doc.push_back(std::move(s));
  }
  return doc;
}

void run(benchmark::State& state, ModelVariant variant, std::size_t window) {
  const auto cfg = config(variant, window);
  const ModelParams params = init_params(cfg, 503, 1);
  const auto doc = document(static_cast<std::size_t>(state.range(0)), 24);
  for (auto _ : state) {
    const Forward fwd = model_forward(doc, cfg, params);
    backward(document_loss(fwd, 1, cfg).total);
    benchmark::DoNotOptimize(fwd.y_hat.item());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Compositional(benchmark::State& state) { run(state, ModelVariant::compositional_ranked, 17); }
void BM_MonolithicW17(benchmark::State& state) { run(state, ModelVariant::ranked_monolithic, 17); }
void BM_MonolithicW129(benchmark::State& state) { run(state, ModelVariant::ranked_monolithic, 129); }

void BM_MeanAveragePrecision(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> scores(100, std::vector<double>(static_cast<std::size_t>(state.range(0))));
  std::vector<std::vector<int>> gold(100, std::vector<int>(static_cast<std::size_t>(state.range(0))));
  for (std::size_t d = 0; d < 100; ++d) {
    for (auto& x : scores[d]) x = u(rng);
    for (auto& g : gold[d]) g = u(rng) < 0.08;
    gold[d][0] = 1;
  }
  for (auto _ : state) benchmark::DoNotOptimize(mean_average_precision(scores, gold));
}

}  // namespace

BENCHMARK(BM_Compositional)->Arg(128)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonolithicW17)->Arg(128)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonolithicW129)->Arg(128)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MeanAveragePrecision)->Arg(700)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
