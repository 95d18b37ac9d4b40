#pragma once

// Small post-LN transformer encoders producing contextual token embeddings.
//
// Two routes share one parameter layout:
//   * sentence-wise full attention (each sentence encoded on its own), and
//   * whole-document sliding-window attention with a global CLS token.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ratex/attention.hpp"
#include "ratex/autograd.hpp"

namespace ratex {

struct EncoderConfig {
  std::size_t h = 32;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t max_sentence_len = 64;
  std::size_t window = 17;
  std::size_t ffn_width = 0;  // 0 selects 2h
  bool use_positional = true;

  std::size_t feed_forward_width() const noexcept { return ffn_width ? ffn_width : 2 * h; }
  /// Throws std::invalid_argument on inconsistent dimensions.
  void validate() const;
};

/// Raised for sentences longer than the encoder's maximum; callers should
/// re-segment the document.
class SentenceTooLong : public std::length_error {
 public:
  using std::length_error::length_error;
};

struct EncoderLayerParams {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
  Var ln1_gain, ln1_bias;
  Var w1, b1, w2, b2;
  Var ln2_gain, ln2_bias;
};

struct EncoderParams {
  Var embedding;  // [vocab x h]
  std::vector<EncoderLayerParams> layers;

  /// All weights zero, layer-norm gains one.
  static EncoderParams zeros(const EncoderConfig& cfg, std::size_t vocab_size);

  std::size_t vocab_size() const { return embedding.value().rows(); }

  /// Calls f(name, var) for every parameter in a fixed order.
  template <class F>
  void visit(F&& f) const {
    f(std::string("enc.embedding"), embedding);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& L = layers[i];
      const std::string p = "enc.layer" + std::to_string(i) + ".";
      f(p + "wq", L.wq), f(p + "bq", L.bq), f(p + "wk", L.wk), f(p + "bk", L.bk);
      f(p + "wv", L.wv), f(p + "bv", L.bv), f(p + "wo", L.wo), f(p + "bo", L.bo);
      f(p + "ln1_gain", L.ln1_gain), f(p + "ln1_bias", L.ln1_bias);
      f(p + "w1", L.w1), f(p + "b1", L.b1), f(p + "w2", L.w2), f(p + "b2", L.b2);
      f(p + "ln2_gain", L.ln2_gain), f(p + "ln2_bias", L.ln2_bias);
    }
  }
};

/// Fixed sinusoidal encoding, one row per position.
Tensor sinusoidal_positions(std::span<const std::size_t> positions, std::size_t h);

/// Embedding lookup plus positional encoding (positions 0..N-1 unless given).
Var embed_tokens(std::span<const std::size_t> ids, const EncoderConfig& cfg, const EncoderParams& params,
                 std::span<const std::size_t> positions = {});

/// Runs the encoder stack under an arbitrary attention pattern. When `maps`
/// is non-null it receives one AttentionMap per layer.
Var encode_with_pattern(std::span<const std::size_t> ids, std::span<const std::size_t> positions,
                        std::shared_ptr<const AttentionPattern> pattern, const EncoderConfig& cfg,
                        const EncoderParams& params, std::vector<AttentionMap>* maps = nullptr);

/// Full self-attention over one sentence. Output is [N_k x h].
Var encode_sentence(std::span<const std::size_t> ids, const EncoderConfig& cfg, const EncoderParams& params);

/// Every sentence encoded independently (positions restart, attention stays
/// inside the sentence), rows concatenated in sentence order. Equivalent to
/// concatenating encode_sentence() outputs, computed in one pass.
Var encode_sentences(std::span<const std::vector<std::size_t>> sentences, const EncoderConfig& cfg,
                     const EncoderParams& params);

struct WindowedEncoding {
  Var embeddings;                       // [(N + 1) x h], row 0 is CLS
  std::vector<AttentionMap> attention;  // one per layer
};

/// Sliding-window encoder over a whole document. `ids_with_cls[0]` must be the CLS id.
WindowedEncoding encode_document_windowed(std::span<const std::size_t> ids_with_cls, const EncoderConfig& cfg,
                                          const EncoderParams& params);

enum class HeadReduction { mean, max };

/// CLS row of a layer's attention with CLS itself removed, reduced over heads
/// and renormalised to sum to one. One score per non-CLS token.
std::vector<double> cls_global_attention_scores(const AttentionMap& layer,
                                                HeadReduction reduction = HeadReduction::mean);

}  // namespace ratex
