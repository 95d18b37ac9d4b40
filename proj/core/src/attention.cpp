#include "ratex/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ratex {

namespace {

KeySpan span_of(std::size_t begin, std::size_t end) {
  return {static_cast<std::uint32_t>(begin), static_cast<std::uint32_t>(end)};
}

}  // namespace

void AttentionPattern::push_row(std::initializer_list<KeySpan> spans) {
  std::size_t keys = 0;
  for (const auto& s : spans) {
    if (s.end <= s.begin) continue;
    spans_.push_back(s);
    keys += s.end - s.begin;
  }
  span_offsets_.push_back(spans_.size());
  key_offsets_.push_back(key_offsets_.back() + keys);
  ++n_;
}

AttentionPattern AttentionPattern::full(std::size_t n) {
  AttentionPattern p;
  for (std::size_t i = 0; i < n; ++i) p.push_row({span_of(0, n)});
  return p;
}

AttentionPattern AttentionPattern::block_diagonal(std::span<const std::size_t> block_lengths) {
  AttentionPattern p;
  std::size_t start = 0;
  for (auto len : block_lengths) {
    for (std::size_t i = 0; i < len; ++i) p.push_row({span_of(start, start + len)});
    start += len;
  }
  return p;
}

AttentionPattern AttentionPattern::sliding_window_with_global(std::size_t n, std::size_t window) {
  if (window == 0 || window % 2 == 0) {
    throw DomainError("sliding window width must be a positive odd integer, got " + std::to_string(window));
  }
  const std::size_t radius = (window - 1) / 2;
  AttentionPattern p;
  if (n == 0) return p;
  p.push_row({span_of(0, n)});
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t lo = i > radius ? std::max<std::size_t>(1, i - radius) : 1;
    const std::size_t hi = std::min(n, i + radius + 1);
    p.push_row({span_of(0, 1), span_of(lo, hi)});
  }
  return p;
}

std::span<const KeySpan> AttentionPattern::row(std::size_t i) const {
  return std::span<const KeySpan>(spans_).subspan(span_offsets_[i], span_offsets_[i + 1] - span_offsets_[i]);
}

bool AttentionPattern::allows(std::size_t i, std::size_t j) const {
  for (const auto& s : row(i))
    if (j >= s.begin && j < s.end) return true;
  return false;
}

AttentionMap::AttentionMap(std::shared_ptr<const AttentionPattern> pattern, std::size_t heads,
                           std::shared_ptr<const std::vector<double>> probs)
    : pattern_(std::move(pattern)), heads_(heads), probs_(std::move(probs)) {}

double AttentionMap::weight(std::size_t head, std::size_t i, std::size_t j) const {
  std::size_t slot = head * pattern_->nnz() + pattern_->key_offset(i);
  for (const auto& s : pattern_->row(i)) {
    if (j >= s.begin && j < s.end) return (*probs_)[slot + (j - s.begin)];
    slot += s.end - s.begin;
  }
  return 0.0;
}

std::vector<double> AttentionMap::dense_row(std::size_t head, std::size_t i) const {
  std::vector<double> out(size(), 0.0);
  std::size_t slot = head * pattern_->nnz() + pattern_->key_offset(i);
  for (const auto& s : pattern_->row(i))
    for (std::size_t j = s.begin; j < s.end; ++j) out[j] = (*probs_)[slot++];
  return out;
}

Var sparse_attention(const Var& q, const Var& k, const Var& v, std::size_t heads,
                     std::shared_ptr<const AttentionPattern> pattern, AttentionMap* map_out) {
  const Shape& shape = q.shape();
  if (shape.size() != 2 || k.shape() != shape || v.shape() != shape) {
    throw ShapeError("sparse_attention: q/k/v shapes " + to_string(q.shape()) + ", " +
                     to_string(k.shape()) + ", " + to_string(v.shape()) + " must be equal matrices");
  }
  const std::size_t n = shape[0], h = shape[1];
  if (heads == 0 || h % heads != 0) {
    throw ShapeError("sparse_attention: width " + std::to_string(h) + " not divisible by " +
                     std::to_string(heads) + " heads");
  }
  if (pattern->size() != n) {
    throw ShapeError("sparse_attention: pattern covers " + std::to_string(pattern->size()) +
                     " positions, sequence has " + std::to_string(n));
  }
  const std::size_t dh = h / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t nnz = pattern->nnz();

  auto probs = std::make_shared<std::vector<double>>(heads * nnz);
  Tensor out(Shape{n, h});
  const double* Q = q.value().data().data();
  const double* K = k.value().data().data();
  const double* V = v.value().data().data();
  double* O = out.data().data();

  for (std::size_t hd = 0; hd < heads; ++hd) {
    const std::size_t col = hd * dh;
    double* P = probs->data() + hd * nnz;
    for (std::size_t i = 0; i < n; ++i) {
      double* p = P + pattern->key_offset(i);
      const double* qi = Q + i * h + col;
      double mx = -std::numeric_limits<double>::infinity();
      std::size_t slot = 0;
      for (const auto& s : pattern->row(i)) {
        for (std::size_t j = s.begin; j < s.end; ++j) {
          const double* kj = K + j * h + col;
          double dot = 0.0;
          for (std::size_t d = 0; d < dh; ++d) dot += qi[d] * kj[d];
          p[slot] = dot * scale;
          mx = std::max(mx, p[slot]);
          ++slot;
        }
      }
      double z = 0.0;
      for (std::size_t t = 0; t < slot; ++t) {
        p[t] = std::exp(p[t] - mx);
        z += p[t];
      }
      double* oi = O + i * h + col;
      slot = 0;
      for (const auto& s : pattern->row(i)) {
        for (std::size_t j = s.begin; j < s.end; ++j) {
          p[slot] /= z;
          const double* vj = V + j * h + col;
          for (std::size_t d = 0; d < dh; ++d) oi[d] += p[slot] * vj[d];
          ++slot;
        }
      }
    }
  }
  flops::add(2 * static_cast<std::uint64_t>(nnz) * h);

  if (map_out) *map_out = AttentionMap(pattern, heads, probs);

  return make_result(
      std::move(out), {q, k, v},
      [pattern = std::move(pattern), probs = std::move(probs), n, h, heads, dh, scale, nnz](detail::Node& self) {
        const double* Q = self.parents[0]->value.data().data();
        const double* K = self.parents[1]->value.data().data();
        const double* V = self.parents[2]->value.data().data();
        const double* dO = self.grad.data().data();
        double* dQ = self.parents[0]->grad_buffer().data().data();
        double* dK = self.parents[1]->grad_buffer().data().data();
        double* dV = self.parents[2]->grad_buffer().data().data();
        std::vector<double> ds;
        for (std::size_t hd = 0; hd < heads; ++hd) {
          const std::size_t col = hd * dh;
          const double* P = probs->data() + hd * nnz;
          for (std::size_t i = 0; i < n; ++i) {
            const double* p = P + pattern->key_offset(i);
            const std::size_t count = pattern->key_count(i);
            ds.assign(count, 0.0);
            const double* doi = dO + i * h + col;
            double total = 0.0;
            std::size_t slot = 0;
            for (const auto& s : pattern->row(i)) {
              for (std::size_t j = s.begin; j < s.end; ++j) {
                const double* vj = V + j * h + col;
                double* dvj = dV + j * h + col;
                double dp = 0.0;
                for (std::size_t d = 0; d < dh; ++d) {
                  dp += doi[d] * vj[d];
                  dvj[d] += p[slot] * doi[d];
                }
                ds[slot] = dp;
                total += p[slot] * dp;
                ++slot;
              }
            }
            const double* qi = Q + i * h + col;
            double* dqi = dQ + i * h + col;
            slot = 0;
            for (const auto& s : pattern->row(i)) {
              for (std::size_t j = s.begin; j < s.end; ++j) {
                const double g = p[slot] * (ds[slot] - total) * scale;
                const double* kj = K + j * h + col;
                double* dkj = dK + j * h + col;
                for (std::size_t d = 0; d < dh; ++d) {
                  dqi[d] += g * kj[d];
                  dkj[d] += g * qi[d];
                }
                ++slot;
              }
            }
          }
        }
        flops::add(4 * static_cast<std::uint64_t>(nnz) * h);
      });
}

}  // namespace ratex
