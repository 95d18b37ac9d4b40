#include "ratex/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace ratex {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be finite and >= 0");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
}

ModelParams init_params(const ModelConfig& cfg, std::size_t vocab_size, std::uint64_t seed) {
  ModelParams params = ModelParams::zeros(cfg, vocab_size);
  std::mt19937_64 rng(seed);
  params.visit([&](const std::string& name, const Var& v) {
    Tensor& value = const_cast<Var&>(v).mutable_value();
    if (value.rank() == 1) {
      value.fill(name.ends_with("gain") ? 1.0 : 0.0);
      return;
    }
    const double fan_in = name == "enc.embedding" ? 1.0 : static_cast<double>(value.rows());
    const double bound = std::sqrt(6.0 / (fan_in + static_cast<double>(value.cols())));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& x : value.data()) x = dist(rng);
  });
  return params;
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, std::vector<Var> params)
    : kind_(kind), lr_(learning_rate), params_(std::move(params)) {
  if (kind_ == OptimizerKind::adam) {
    for (const auto& p : params_) {
      m_.emplace_back(p.shape());
      v_.emplace_back(p.shape());
    }
  }
}

void Optimizer::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Optimizer::step() {
  ++t_;
  if (kind_ == OptimizerKind::sgd) {
    for (auto& p : params_) {
      auto w = p.mutable_value().data();
      const auto g = p.grad().data();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr_ * g[i];
    }
    return;
  }
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto w = params_[k].mutable_value().data();
    const auto g = params_[k].grad().data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      w[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
}

EpochStats train_epoch(const ModelConfig& cfg, const ModelParams& params, Optimizer& optimizer,
                       const Dataset& train, const std::vector<EncodedDocument>& encoded, const TrainConfig& tcfg,
                       std::size_t epoch) {
  if (train.documents.empty()) throw std::invalid_argument("train_epoch: empty training split");
  if (encoded.size() != train.size()) throw std::invalid_argument("train_epoch: encoded documents do not match");

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(tcfg.seed), static_cast<std::uint32_t>(tcfg.seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);

  using clock = std::chrono::steady_clock;
  clock::duration busy{};
  double loss_sum = 0.0;
  for (std::size_t begin = 0; begin < order.size(); begin += tcfg.batch_size) {
    const std::size_t end = std::min(order.size(), begin + tcfg.batch_size);
    const double inv = 1.0 / static_cast<double>(end - begin);
    const auto start = clock::now();
    optimizer.zero_grad();
    for (std::size_t b = begin; b < end; ++b) {
      const Document& doc = train.documents[order[b]];
      const Forward fwd = model_forward(encoded[order[b]], cfg, params);
      const LossTerms terms = document_loss(fwd, doc.doc_label, cfg);
      const double loss = terms.total.item();
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", document '" << doc.doc_id << "': total=" << loss
            << " doc=" << terms.doc << " min_sq=" << terms.min_sq << " max_sq=" << terms.max_sq
            << " ranked=" << terms.ranked;
        throw TrainingDiverged(msg.str());
      }
      loss_sum += loss;
      backward(scale(terms.total, inv));
    }
    optimizer.step();
    busy += clock::now() - start;
  }
  return {loss_sum / static_cast<double>(order.size()), std::chrono::duration<double>(busy).count()};
}

std::vector<NamedTensor> snapshot(const ModelParams& params) {
  std::vector<NamedTensor> out;
  params.visit([&](const std::string& name, const Var& v) { out.push_back({name, v.value()}); });
  return out;
}

void restore(const ModelParams& params, const std::vector<NamedTensor>& tensors) {
  std::size_t i = 0;
  params.visit([&](const std::string& name, const Var& v) {
    if (i >= tensors.size() || tensors[i].name != name) {
      throw std::invalid_argument("restore: expected parameter '" + name + "' at position " + std::to_string(i));
    }
    if (tensors[i].value.shape() != v.shape()) {
      throw ShapeError("restore: parameter '" + name + "' has shape " + to_string(tensors[i].value.shape()) +
                       ", model expects " + to_string(v.shape()));
    }
    const_cast<Var&>(v).mutable_value() = tensors[i].value;
    ++i;
  });
  if (i != tensors.size()) throw std::invalid_argument("restore: snapshot has extra parameters");
}

const Checkpoint& select_checkpoint(const std::vector<Checkpoint>& checkpoints) {
  if (checkpoints.empty()) throw std::invalid_argument("select_checkpoint: no checkpoints");
  const Checkpoint* best = &checkpoints.front();
  for (const auto& c : checkpoints) {
    const double f = c.dev_report.doc_f1.value_or(0.0);
    const double b = best->dev_report.doc_f1.value_or(0.0);
    if (f > b || (f == b && c.epoch < best->epoch)) best = &c;
  }
  return *best;
}

std::vector<EncodedDocument> encode_dataset(const Dataset& dataset, const Vocab& vocab) {
  std::vector<EncodedDocument> out;
  out.reserve(dataset.size());
  for (const auto& d : dataset.documents) out.push_back(encode_document(d, vocab));
  return out;
}

std::vector<Prediction> predict_dataset(const ModelConfig& cfg, const ModelParams& params, const Dataset& dataset,
                                        const std::vector<EncodedDocument>& encoded) {
  if (encoded.size() != dataset.size()) throw std::invalid_argument("predict_dataset: encoded documents do not match");
  NoGradGuard no_grad;
  std::vector<Prediction> out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out.push_back(to_prediction(model_forward(encoded[i], cfg, params), dataset.documents[i].doc_id));
  }
  return out;
}

namespace {

void fill_token_metrics(EvalReport& r, const Dataset& dataset, std::span<const std::vector<double>> scores,
                        std::span<const std::vector<int>> binary) {
  if (!dataset.has_token_labels()) return;
  Confusion confusion;
  std::vector<std::vector<int>> gold;
  gold.reserve(dataset.size());
  bool any_positive = false;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    gold.push_back(dataset.documents[i].flat_token_labels());
    confusion.add(binary[i], gold.back());
    any_positive |= std::find(gold.back().begin(), gold.back().end(), 1) != gold.back().end();
  }
  const PRF f1 = confusion.prf(1.0);
  r.token_p = f1.precision;
  r.token_r = f1.recall;
  r.token_f1 = f1.f;
  r.token_f05 = confusion.prf(0.5).f;
  if (any_positive) r.map = mean_average_precision(scores, gold);
}

void require_aligned(const Dataset& dataset, std::size_t n, const char* what) {
  if (n != dataset.size()) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(n) + " entries for " +
                                std::to_string(dataset.size()) + " documents");
  }
}

}  // namespace

EvalReport evaluate_predictions(const Dataset& dataset, const std::vector<Prediction>& predictions,
                                LossVariant variant, double k_percent) {
  require_aligned(dataset, predictions.size(), "evaluate_predictions");
  EvalReport r;
  std::vector<int> doc_pred, doc_gold;
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<int>> binary;
  double coverage = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& p = predictions[i];
    const auto& d = dataset.documents[i];
    if (p.doc_id != d.doc_id || p.token_scores.size() != d.token_count()) {
      throw std::invalid_argument("evaluate_predictions: prediction for '" + p.doc_id + "' does not match document '" +
                                  d.doc_id + "'");
    }
    doc_pred.push_back(p.y_hat > HeadConfig::threshold ? 1 : 0);
    doc_gold.push_back(d.doc_label);
    scores.push_back(p.token_scores);
    binary.push_back(p.binary_rationale);
    coverage += supervision_coverage(variant, p.token_scores.size(), k_percent);
  }
  r.doc_f1 = doc_f1(doc_pred, doc_gold);
  r.coverage = dataset.size() ? coverage / static_cast<double>(dataset.size()) : 0.0;
  fill_token_metrics(r, dataset, scores, binary);
  return r;
}

EvalReport evaluate_token_scores(const Dataset& dataset, const std::vector<std::vector<double>>& scores,
                                 double k_percent) {
  require_aligned(dataset, scores.size(), "evaluate_token_scores");
  std::vector<std::vector<int>> binary;
  binary.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].size() != dataset.documents[i].token_count()) {
      throw std::invalid_argument("evaluate_token_scores: score count mismatch for '" +
                                  dataset.documents[i].doc_id + "'");
    }
    binary.push_back(topk_threshold(scores[i], k_percent));
  }
  EvalReport r;
  fill_token_metrics(r, dataset, scores, binary);
  return r;
}

RunResult train_run(const ModelConfig& cfg, ModelParams& params, const Dataset& train, const Dataset& dev,
                    const Vocab& vocab, const TrainConfig& tcfg, std::uint64_t seed, const EpochCallback& on_epoch) {
  cfg.validate();
  tcfg.validate();
  params = init_params(cfg, vocab.size(), seed);
  TrainConfig run_cfg = tcfg;
  run_cfg.seed = seed;
  Optimizer optimizer(tcfg.optimizer, tcfg.learning_rate, params.list());
  const auto train_ids = encode_dataset(train, vocab);
  const auto dev_ids = encode_dataset(dev, vocab);

  RunResult result;
  double seconds = 0.0;
  for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    const EpochStats stats = train_epoch(cfg, params, optimizer, train, train_ids, run_cfg, epoch);
    seconds += stats.seconds;
    Checkpoint c;
    c.epoch = epoch;
    c.seconds = stats.seconds;
    c.dev_report = evaluate_predictions(dev, predict_dataset(cfg, params, dev, dev_ids), loss_variant(cfg.variant),
                                        cfg.head.k);
    c.tensors = snapshot(params);
    if (on_epoch) on_epoch(epoch, stats, c.dev_report);
    result.history.push_back(std::move(c));
  }
  const Checkpoint& best = select_checkpoint(result.history);
  result.best = static_cast<std::size_t>(&best - result.history.data());
  result.mean_seconds_per_epoch = seconds / static_cast<double>(tcfg.epochs);
  restore(params, best.tensors);
  return result;
}

}  // namespace ratex
