#include "ratex/model.hpp"

#include <array>
#include <stdexcept>
#include <utility>

#include "ratex/vocab.hpp"

namespace ratex {

namespace {

constexpr std::array<std::pair<ModelVariant, std::string_view>, 4> kVariantNames{{
    {ModelVariant::weighted_monolithic, "weighted-monolithic"},
    {ModelVariant::ranked_monolithic, "ranked-monolithic"},
    {ModelVariant::compositional_ranked, "compositional-ranked"},
    {ModelVariant::compositional_weighted, "compositional-weighted"},
}};

Forward run_head(Var t, const ModelConfig& cfg, const ModelParams& params, PoolMode mode) {
  Forward out;
  out.scores = token_scores(t, params.head);
  out.pooled = attention_pool(t, out.scores.scores, cfg.head.beta, mode);
  out.y_hat = document_predict(out.pooled.context, params.head);
  return out;
}

}  // namespace

std::string to_string(ModelVariant variant) {
  for (const auto& [v, name] : kVariantNames)
    if (v == variant) return std::string(name);
  return "unknown";
}

ModelVariant parse_variant(std::string_view name) {
  for (const auto& [v, n] : kVariantNames)
    if (n == name) return v;
  throw std::invalid_argument("unknown model variant '" + std::string(name) +
                              "' (expected weighted-monolithic, ranked-monolithic, compositional-ranked or "
                              "compositional-weighted)");
}

bool is_compositional(ModelVariant variant) noexcept {
  return variant == ModelVariant::compositional_ranked || variant == ModelVariant::compositional_weighted;
}

LossVariant loss_variant(ModelVariant variant) noexcept {
  return variant == ModelVariant::weighted_monolithic || variant == ModelVariant::compositional_weighted
             ? LossVariant::weighted
             : LossVariant::ranked;
}

void ModelConfig::validate() const {
  encoder.validate();
  head.validate();
}

ModelParams ModelParams::zeros(const ModelConfig& cfg, std::size_t vocab_size) {
  cfg.validate();
  return {EncoderParams::zeros(cfg.encoder, vocab_size), SoftAttentionParams::zeros(cfg.encoder.h, cfg.head)};
}

std::vector<Var> ModelParams::list() const {
  std::vector<Var> out;
  visit([&](const std::string&, const Var& v) { out.push_back(v); });
  return out;
}

Forward compositional_forward(const EncodedDocument& doc, const ModelConfig& cfg, const ModelParams& params,
                              PoolMode mode) {
  return run_head(encode_sentences(doc, cfg.encoder, params.encoder), cfg, params, mode);
}

Forward monolithic_forward(const EncodedDocument& doc, const ModelConfig& cfg, const ModelParams& params,
                           PoolMode mode) {
  std::vector<std::size_t> ids{Vocab::kCls};
  for (const auto& s : doc) ids.insert(ids.end(), s.begin(), s.end());
  if (ids.size() < 2) throw std::invalid_argument("monolithic_forward: empty document");
  WindowedEncoding enc = encode_document_windowed(ids, cfg.encoder, params.encoder);
  Forward out = run_head(slice_rows(enc.embeddings, 1, ids.size()), cfg, params, mode);
  out.attention = std::move(enc.attention);
  return out;
}

Forward model_forward(const EncodedDocument& doc, const ModelConfig& cfg, const ModelParams& params, PoolMode mode) {
  return is_compositional(cfg.variant) ? compositional_forward(doc, cfg, params, mode)
                                       : monolithic_forward(doc, cfg, params, mode);
}

LossTerms document_loss(const Forward& fwd, int doc_label, const ModelConfig& cfg) {
  const double target = static_cast<double>(doc_label);
  if (loss_variant(cfg.variant) == LossVariant::weighted) {
    return loss_weighted(fwd.y_hat, fwd.scores.scores, target, cfg.head.gamma);
  }
  return loss_ranked(fwd.y_hat, fwd.scores.scores, target, cfg.head.gamma, cfg.head.gamma_ranked, cfg.head.k);
}

Prediction to_prediction(const Forward& fwd, std::string doc_id) {
  Prediction p;
  p.doc_id = std::move(doc_id);
  p.y_hat = fwd.y_hat.item();
  p.token_scores = fwd.scores.scores.value().values();
  p.weights = fwd.pooled.weights.value().values();
  p.binary_rationale = threshold_rationale(p.token_scores);
  return p;
}

}  // namespace ratex
