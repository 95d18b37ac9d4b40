#include "ratex/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ratex {

void EncoderConfig::validate() const {
  if (h == 0 || n_layers == 0 || n_heads == 0 || max_sentence_len == 0) {
    throw std::invalid_argument("encoder dimensions must be positive");
  }
  if (h % n_heads != 0) {
    throw std::invalid_argument("encoder width h=" + std::to_string(h) + " is not divisible by n_heads=" +
                                std::to_string(n_heads));
  }
  if (window == 0 || window % 2 == 0) {
    throw std::invalid_argument("window must be a positive odd integer, got " + std::to_string(window));
  }
}

EncoderParams EncoderParams::zeros(const EncoderConfig& cfg, std::size_t vocab_size) {
  cfg.validate();
  const std::size_t h = cfg.h, f = cfg.feed_forward_width();
  auto mat = [](std::size_t r, std::size_t c) { return leaf(Tensor(Shape{r, c})); };
  auto vec = [](std::size_t n, double v = 0.0) { return leaf(Tensor::filled(Shape{n}, v)); };
  EncoderParams p;
  p.embedding = mat(vocab_size, h);
  for (std::size_t i = 0; i < cfg.n_layers; ++i) {
    p.layers.push_back(EncoderLayerParams{mat(h, h), vec(h), mat(h, h), vec(h), mat(h, h), vec(h),
                                          mat(h, h), vec(h), vec(h, 1.0), vec(h), mat(h, f), vec(f),
                                          mat(f, h), vec(h), vec(h, 1.0), vec(h)});
  }
  return p;
}

Tensor sinusoidal_positions(std::span<const std::size_t> positions, std::size_t h) {
  Tensor pe(Shape{positions.size(), h});
  for (std::size_t r = 0; r < positions.size(); ++r) {
    const double pos = static_cast<double>(positions[r]);
    for (std::size_t i = 0; i < h; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(h));
      pe.at(r, i) = std::sin(pos * freq);
      if (i + 1 < h) pe.at(r, i + 1) = std::cos(pos * freq);
    }
  }
  return pe;
}

Var embed_tokens(std::span<const std::size_t> ids, const EncoderConfig& cfg, const EncoderParams& params,
                 std::span<const std::size_t> positions) {
  const std::size_t vocab = params.vocab_size();
  for (auto id : ids) {
    if (id >= vocab) {
      throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(vocab));
    }
  }
  Var x = gather_rows(params.embedding, ids);
  if (!cfg.use_positional) return x;
  std::vector<std::size_t> seq;
  if (positions.empty()) {
    seq.resize(ids.size());
    std::iota(seq.begin(), seq.end(), std::size_t{0});
    positions = seq;
  }
  return add(x, constant(sinusoidal_positions(positions, cfg.h)));
}

namespace {

Var encoder_layer(const Var& x, const EncoderLayerParams& L, std::size_t heads,
                  const std::shared_ptr<const AttentionPattern>& pattern, AttentionMap* map) {
  Var q = add_bias(matmul(x, L.wq), L.bq);
  Var k = add_bias(matmul(x, L.wk), L.bk);
  Var v = add_bias(matmul(x, L.wv), L.bv);
  Var attended = sparse_attention(q, k, v, heads, pattern, map);
  Var mixed = add_bias(matmul(attended, L.wo), L.bo);
  Var x1 = layer_norm(add(x, mixed), L.ln1_gain, L.ln1_bias);
  Var ff = add_bias(matmul(gelu(add_bias(matmul(x1, L.w1), L.b1)), L.w2), L.b2);
  return layer_norm(add(x1, ff), L.ln2_gain, L.ln2_bias);
}

}  // namespace

Var encode_with_pattern(std::span<const std::size_t> ids, std::span<const std::size_t> positions,
                        std::shared_ptr<const AttentionPattern> pattern, const EncoderConfig& cfg,
                        const EncoderParams& params, std::vector<AttentionMap>* maps) {
  if (pattern->size() != ids.size()) {
    throw ShapeError("attention pattern covers " + std::to_string(pattern->size()) + " positions, got " +
                     std::to_string(ids.size()) + " tokens");
  }
  Var x = embed_tokens(ids, cfg, params, positions);
  if (maps) maps->assign(params.layers.size(), AttentionMap{});
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    x = encoder_layer(x, params.layers[l], cfg.n_heads, pattern, maps ? &(*maps)[l] : nullptr);
  }
  return x;
}

Var encode_sentence(std::span<const std::size_t> ids, const EncoderConfig& cfg, const EncoderParams& params) {
  if (ids.size() > cfg.max_sentence_len) {
    throw SentenceTooLong("sentence of " + std::to_string(ids.size()) + " tokens exceeds max_sentence_len=" +
                          std::to_string(cfg.max_sentence_len) + "; re-segment the document");
  }
  auto pattern = std::make_shared<const AttentionPattern>(AttentionPattern::full(ids.size()));
  return encode_with_pattern(ids, {}, pattern, cfg, params);
}

Var encode_sentences(std::span<const std::vector<std::size_t>> sentences, const EncoderConfig& cfg,
                     const EncoderParams& params) {
  std::vector<std::size_t> ids, positions, lengths;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& sent = sentences[s];
    if (sent.size() > cfg.max_sentence_len) {
      throw SentenceTooLong("sentence " + std::to_string(s) + " has " + std::to_string(sent.size()) +
                            " tokens, exceeding max_sentence_len=" + std::to_string(cfg.max_sentence_len) +
                            "; re-segment the document");
    }
    lengths.push_back(sent.size());
    for (std::size_t i = 0; i < sent.size(); ++i) {
      ids.push_back(sent[i]);
      positions.push_back(i);
    }
  }
  auto pattern = std::make_shared<const AttentionPattern>(AttentionPattern::block_diagonal(lengths));
  return encode_with_pattern(ids, positions, pattern, cfg, params);
}

WindowedEncoding encode_document_windowed(std::span<const std::size_t> ids_with_cls, const EncoderConfig& cfg,
                                          const EncoderParams& params) {
  auto pattern = std::make_shared<const AttentionPattern>(
      AttentionPattern::sliding_window_with_global(ids_with_cls.size(), cfg.window));
  WindowedEncoding out;
  out.embeddings = encode_with_pattern(ids_with_cls, {}, pattern, cfg, params, &out.attention);
  return out;
}

std::vector<double> cls_global_attention_scores(const AttentionMap& layer, HeadReduction reduction) {
  const std::size_t n = layer.size();
  if (n < 2 || layer.heads() == 0) throw std::invalid_argument("attention map has no non-CLS tokens");
  std::vector<double> scores(n - 1, 0.0);
  for (std::size_t hd = 0; hd < layer.heads(); ++hd) {
    const auto row = layer.dense_row(hd, 0);
    for (std::size_t j = 1; j < n; ++j) {
      if (reduction == HeadReduction::mean) {
        scores[j - 1] += row[j] / static_cast<double>(layer.heads());
      } else {
        scores[j - 1] = hd == 0 ? row[j] : std::max(scores[j - 1], row[j]);
      }
    }
  }
  const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
  if (total > 0.0) {
    for (auto& s : scores) s /= total;
  } else {
    std::fill(scores.begin(), scores.end(), 1.0 / static_cast<double>(scores.size()));
  }
  return scores;
}

}  // namespace ratex
