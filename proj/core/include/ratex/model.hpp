#pragma once

// Full rationale models: an encoder feeding one soft attention head.
//
// Compositional variants encode every sentence on its own and pool over the
// concatenation. Monolithic variants run the sliding-window encoder over the
// whole document with a CLS token prepended and drop the CLS row before the
// head.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ratex/encoder.hpp"
#include "ratex/heads.hpp"

namespace ratex {

enum class ModelVariant {
  weighted_monolithic,
  ranked_monolithic,
  compositional_ranked,
  compositional_weighted,
};

std::string to_string(ModelVariant variant);
/// Accepts the dashed names printed by to_string, e.g. "compositional-ranked".
ModelVariant parse_variant(std::string_view name);
bool is_compositional(ModelVariant variant) noexcept;
LossVariant loss_variant(ModelVariant variant) noexcept;

struct ModelConfig {
  EncoderConfig encoder;
  HeadConfig head;
  ModelVariant variant = ModelVariant::compositional_ranked;

  void validate() const;
};

struct ModelParams {
  EncoderParams encoder;
  SoftAttentionParams head;

  static ModelParams zeros(const ModelConfig& cfg, std::size_t vocab_size);

  template <class F>
  void visit(F&& f) const {
    encoder.visit(f);
    head.visit(f);
  }
  std::vector<Var> list() const;
};

/// Token ids of one document, one vector per sentence.
using EncodedDocument = std::vector<std::vector<std::size_t>>;

struct Forward {
  Var y_hat;  // scalar
  TokenScores scores;
  Pooled pooled;
  std::vector<AttentionMap> attention;  // windowed encoder only
};

Forward compositional_forward(const EncodedDocument& doc, const ModelConfig& cfg, const ModelParams& params,
                              PoolMode mode = PoolMode::guarded);
Forward monolithic_forward(const EncodedDocument& doc, const ModelConfig& cfg, const ModelParams& params,
                           PoolMode mode = PoolMode::guarded);
/// Dispatches on cfg.variant.
Forward model_forward(const EncodedDocument& doc, const ModelConfig& cfg, const ModelParams& params,
                      PoolMode mode = PoolMode::guarded);

/// Loss of the variant's supervision scheme for one document.
LossTerms document_loss(const Forward& fwd, int doc_label, const ModelConfig& cfg);

struct Prediction {
  std::string doc_id;
  double y_hat = 0.0;
  std::vector<double> token_scores;
  std::vector<double> weights;
  std::vector<int> binary_rationale;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

Prediction to_prediction(const Forward& fwd, std::string doc_id = {});

}  // namespace ratex
