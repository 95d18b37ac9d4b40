#pragma once

// Soft attention head: token scoring, sharpened attention pooling, document
// prediction and the two supervision schemes (min/max weighted and ranked).
//
//   e_i  = tanh(t_i W_e + b_e)         score_i  = sigmoid(e_i w_s + b_s)
//   a_i  = score_i^beta / sum_j score_j^beta,   c = sum_i a_i t_i
//   y    = sigmoid(tanh(c W_d + b_d) w_y + b_y)
//
// Weights are stored input-major ([in x out]) because embeddings are rows.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ratex/autograd.hpp"

namespace ratex {

enum class LossVariant { weighted, ranked };

struct HeadConfig {
  std::size_t h_prime = 32;  // scoring hidden width
  std::size_t s = 32;        // document hidden width
  double beta = 1.0;         // attention sharpness
  double gamma = 1.0;        // weight of the min/max terms
  double gamma_ranked = 1.0;
  double k = 8.0;            // supervised-top percentage, (0, 100]
  LossVariant loss = LossVariant::ranked;

  static constexpr double threshold = 0.5;

  void validate() const;
};

struct SoftAttentionParams {
  Var w_e;      // [h x h']
  Var b_e;      // [h']
  Var w_score;  // [h' x 1]
  Var b_score;  // [1]
  Var w_d;      // [h x s]
  Var b_d;      // [s]
  Var w_y;      // [s x 1]
  Var b_y;      // [1]

  static SoftAttentionParams zeros(std::size_t h, const HeadConfig& cfg);

  template <class F>
  void visit(F&& f) const {
    f(std::string("head.w_e"), w_e), f(std::string("head.b_e"), b_e);
    f(std::string("head.w_score"), w_score), f(std::string("head.b_score"), b_score);
    f(std::string("head.w_d"), w_d), f(std::string("head.b_d"), b_d);
    f(std::string("head.w_y"), w_y), f(std::string("head.b_y"), b_y);
  }
};

struct TokenScores {
  Var scores;  // [N] in (0, 1)
  Var logits;  // [N]
};

/// Per-token attention scores from contextual embeddings t [N x h]. N must be >= 1.
TokenScores token_scores(const Var& t, const SoftAttentionParams& params);

enum class PoolMode {
  strict,   // all-zero scores raise DomainError
  guarded,  // 1e-12 added to the normaliser
};

struct Pooled {
  Var weights;  // [N], sums to one
  Var context;  // [h]
};

Pooled attention_pool(const Var& t, const Var& scores, double beta, PoolMode mode = PoolMode::strict);

/// Scalar document probability from the pooled representation.
Var document_predict(const Var& context, const SoftAttentionParams& params);

struct LossTerms {
  Var total;
  double doc = 0.0;     // (y - target)^2
  double min_sq = 0.0;  // min(score)^2
  double max_sq = 0.0;  // (max(score) - target)^2
  double ranked = 0.0;  // ranked term before gamma_ranked
};

/// (y - t)^2 + gamma * (min(score)^2 + (max(score) - t)^2)
LossTerms loss_weighted(const Var& y_hat, const Var& scores, double target, double gamma);

/// Weighted loss plus gamma_ranked * (mean over top-k% of (score - t)^2 + mean over the rest of score^2).
LossTerms loss_ranked(const Var& y_hat, const Var& scores, double target, double gamma, double gamma_ranked,
                      double k_percent);

/// ceil(k * n / 100), never less than one.
std::size_t top_k_count(std::size_t n, double k_percent);

struct RankedPartition {
  std::vector<std::size_t> top;   // highest scores, ties to the lower index
  std::vector<std::size_t> rest;  // ascending index order
};

RankedPartition ranked_partition(std::span<const double> scores, double k_percent);

/// Fraction of a document's N token scores that receive a direct target.
double supervision_coverage(LossVariant variant, std::size_t n, double k_percent);

/// Strict threshold: score > 0.5 marks a rationale token.
std::vector<int> threshold_rationale(std::span<const double> scores);

}  // namespace ratex
