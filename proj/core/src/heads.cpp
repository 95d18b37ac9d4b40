#include "ratex/heads.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ratex {

void HeadConfig::validate() const {
  if (h_prime == 0 || s == 0) throw std::invalid_argument("head widths must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (!(gamma >= 0.0) || !(gamma_ranked >= 0.0)) throw std::invalid_argument("gamma weights must be >= 0");
  if (!(k > 0.0 && k <= 100.0)) throw std::invalid_argument("k must lie in (0, 100]");
}

SoftAttentionParams SoftAttentionParams::zeros(std::size_t h, const HeadConfig& cfg) {
  cfg.validate();
  return SoftAttentionParams{leaf(Tensor(Shape{h, cfg.h_prime})), leaf(Tensor(Shape{cfg.h_prime})),
                             leaf(Tensor(Shape{cfg.h_prime, 1})), leaf(Tensor(Shape{1})),
                             leaf(Tensor(Shape{h, cfg.s})),       leaf(Tensor(Shape{cfg.s})),
                             leaf(Tensor(Shape{cfg.s, 1})),       leaf(Tensor(Shape{1}))};
}

TokenScores token_scores(const Var& t, const SoftAttentionParams& params) {
  if (t.value().rank() != 2 || t.value().rows() == 0) {
    throw std::invalid_argument("token_scores: need at least one token, got embeddings " + to_string(t.shape()));
  }
  const std::size_t n = t.value().rows();
  Var e = tanh(add_bias(matmul(t, params.w_e), params.b_e));
  Var logits = reshape(add_bias(matmul(e, params.w_score), params.b_score), Shape{n});
  return {sigmoid(logits), logits};
}

Pooled attention_pool(const Var& t, const Var& scores, double beta, PoolMode mode) {
  const std::size_t n = scores.value().size();
  if (t.value().rank() != 2 || t.value().rows() != n) {
    throw ShapeError("attention_pool: embeddings " + to_string(t.shape()) + " vs scores " +
                     to_string(scores.shape()));
  }
  if (mode == PoolMode::strict) {
    const auto v = scores.value().data();
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
      throw DomainError("attention_pool: all token scores are zero, attention distribution is undefined");
    }
  }
  Var sharpened = power(scores, beta);
  Var norm = reduce(sharpened, ReduceKind::sum, 0);
  if (mode == PoolMode::guarded) norm = shift(norm, 1e-12);
  Var weights = divide(sharpened, norm);
  Var context = reshape(matmul(reshape(weights, Shape{1, n}), t), Shape{t.value().cols()});
  return {weights, context};
}

Var document_predict(const Var& context, const SoftAttentionParams& params) {
  const std::size_t h = context.value().size();
  Var d = tanh(add_bias(matmul(reshape(context, Shape{1, h}), params.w_d), params.b_d));
  return reshape(sigmoid(add_bias(matmul(d, params.w_y), params.b_y)), Shape{});
}

LossTerms loss_weighted(const Var& y_hat, const Var& scores, double target, double gamma) {
  if (scores.value().size() == 0) throw std::invalid_argument("loss_weighted: empty score vector");
  Var doc = square(shift(reshape(y_hat, Shape{}), -target));
  Var lo = square(reduce(scores, ReduceKind::min, 0));
  Var hi = square(shift(reduce(scores, ReduceKind::max, 0), -target));
  LossTerms out;
  out.total = add(doc, scale(add(lo, hi), gamma));
  out.doc = doc.item();
  out.min_sq = lo.item();
  out.max_sq = hi.item();
  return out;
}

LossTerms loss_ranked(const Var& y_hat, const Var& scores, double target, double gamma, double gamma_ranked,
                      double k_percent) {
  LossTerms out = loss_weighted(y_hat, scores, target, gamma);
  const auto part = ranked_partition(scores.value().data(), k_percent);
  Var top = reduce(square(shift(gather(scores, part.top), -target)), ReduceKind::mean, 0);
  Var ranked = part.rest.empty() ? top : add(top, reduce(square(gather(scores, part.rest)), ReduceKind::mean, 0));
  out.ranked = ranked.item();
  out.total = add(out.total, scale(ranked, gamma_ranked));
  return out;
}

std::size_t top_k_count(std::size_t n, double k_percent) {
  if (n == 0) return 0;
  const double exact = k_percent * static_cast<double>(n) / 100.0;
  // Tolerance absorbs representation error in products such as 0.07 * 100.
  const auto count = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::clamp<std::size_t>(count, 1, n);
}

RankedPartition ranked_partition(std::span<const double> scores, double k_percent) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const std::size_t m = top_k_count(n, k_percent);
  RankedPartition part;
  part.top.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  part.rest.assign(order.begin() + static_cast<std::ptrdiff_t>(m), order.end());
  std::sort(part.rest.begin(), part.rest.end());
  return part;
}

double supervision_coverage(LossVariant variant, std::size_t n, double k_percent) {
  if (n == 0) throw std::invalid_argument("supervision_coverage: empty document");
  (void)k_percent;  // the ranked loss targets every token whatever k is
  if (variant == LossVariant::ranked) return 1.0;
  return n == 1 ? 1.0 : 2.0 / static_cast<double>(n);
}

std::vector<int> threshold_rationale(std::span<const double> scores) {
  std::vector<int> out(scores.size());
  std::transform(scores.begin(), scores.end(), out.begin(),
                 [](double s) { return s > HeadConfig::threshold ? 1 : 0; });
  return out;
}

}  // namespace ratex
