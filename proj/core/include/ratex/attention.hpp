#pragma once

// Multi-head scaled dot-product attention over an explicit sparsity pattern.
//
// Full attention, sentence-blocked attention and sliding-window attention with
// a global token are all expressed as patterns, so the same fused kernel (and
// the same backward rule) serves both encoders. Work is proportional to the
// number of allowed (query, key) pairs.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ratex/autograd.hpp"

namespace ratex {

struct KeySpan {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;  // exclusive
};

/// Which keys each query row may attend to. Rows and keys index the same sequence.
class AttentionPattern {
 public:
  static AttentionPattern full(std::size_t n);
  /// Tokens attend only within their own block; blocks tile the sequence in order.
  static AttentionPattern block_diagonal(std::span<const std::size_t> block_lengths);
  /// Position 0 is global: it attends to every position and every position
  /// attends to it. Other positions see the (window - 1) / 2 neighbours on each
  /// side. `window` must be odd.
  static AttentionPattern sliding_window_with_global(std::size_t n, std::size_t window);

  std::size_t size() const noexcept { return n_; }
  std::span<const KeySpan> row(std::size_t i) const;
  std::size_t key_count(std::size_t i) const { return key_offsets_[i + 1] - key_offsets_[i]; }
  std::size_t key_offset(std::size_t i) const { return key_offsets_[i]; }
  std::size_t nnz() const noexcept { return key_offsets_.back(); }
  bool allows(std::size_t i, std::size_t j) const;

 private:
  void push_row(std::initializer_list<KeySpan> spans);

  std::size_t n_ = 0;
  std::vector<std::size_t> span_offsets_{0};
  std::vector<KeySpan> spans_;
  std::vector<std::size_t> key_offsets_{0};
};

/// Attention probabilities of one layer, stored sparsely in pattern order.
class AttentionMap {
 public:
  AttentionMap() = default;
  AttentionMap(std::shared_ptr<const AttentionPattern> pattern, std::size_t heads,
               std::shared_ptr<const std::vector<double>> probs);

  std::size_t heads() const noexcept { return heads_; }
  std::size_t size() const noexcept { return pattern_ ? pattern_->size() : 0; }
  const AttentionPattern& pattern() const { return *pattern_; }

  /// Probability that query i places on key j in `head`; zero outside the pattern.
  double weight(std::size_t head, std::size_t i, std::size_t j) const;
  /// Full row of length size(), zeros at masked positions.
  std::vector<double> dense_row(std::size_t head, std::size_t i) const;

 private:
  std::shared_ptr<const AttentionPattern> pattern_;
  std::size_t heads_ = 0;
  std::shared_ptr<const std::vector<double>> probs_;
};

/// softmax(q k^T / sqrt(d_head)) v per head over the allowed pairs only.
/// q, k, v are [n x h] with h divisible by `heads`; result is [n x h].
Var sparse_attention(const Var& q, const Var& k, const Var& v, std::size_t heads,
                     std::shared_ptr<const AttentionPattern> pattern, AttentionMap* map_out = nullptr);

}  // namespace ratex
