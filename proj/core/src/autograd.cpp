#include "ratex/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <unordered_set>
#include <utility>

namespace ratex {

namespace detail {

Tensor& Node::grad_buffer() {
  if (grad.shape() != value.shape() || grad.size() != value.size()) grad = Tensor(value.shape());
  return grad;
}

}  // namespace detail

namespace {

thread_local bool t_grad_enabled = true;
thread_local std::uint64_t t_flops = 0;

using detail::Node;

void require_rank(const Var& x, std::size_t rank, const char* op) {
  if (x.value().rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     to_string(x.shape()));
  }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

Tensor& pgrad(Node& self, std::size_t i) { return self.parents[i]->grad_buffer(); }
const Tensor& pvalue(const Node& self, std::size_t i) { return self.parents[i]->value; }
bool pneeds(const Node& self, std::size_t i) { return self.parents[i]->requires_grad; }

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

void Var::zero_grad() {
  if (node_) node_->grad_buffer().fill(0.0);
}

Var leaf(Tensor value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var::from_node(std::move(node));
}

Var constant(Tensor value) { return leaf(std::move(value), false); }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool grad_enabled() noexcept { return t_grad_enabled; }

Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (t_grad_enabled) {
    const bool any = std::any_of(parents.begin(), parents.end(),
                                 [](const Var& p) { return p.requires_grad(); });
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(parents.size());
      for (auto& p : parents) node->parents.push_back(p.shared_node());
      node->backward = std::move(backward);
    }
  }
  return Var::from_node(std::move(node));
}

void backward(const Var& loss) {
  if (!loss.defined() || loss.value().size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " +
                     (loss.defined() ? to_string(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  visited.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    node->grad_buffer();
    if (node->backward) node->backward(*node);
  }
}

// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.value().rows(), k = a.value().cols(), n = b.value().cols();
  if (b.value().rows() != k) {
    throw ShapeError("matmul: inner dimensions disagree, " + to_string(a.shape()) + " x " +
                     to_string(b.shape()));
  }
  Tensor out(Shape{m, n});
  const double* pa = a.value().data().data();
  const double* pb = b.value().data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = po + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  flops::add(static_cast<std::uint64_t>(m) * k * n);

  return make_result(std::move(out), {a, b}, [m, k, n](Node& self) {
    const double* g = self.grad.data().data();
    const double* pa = pvalue(self, 0).data().data();
    const double* pb = pvalue(self, 1).data().data();
    if (pneeds(self, 0)) {
      double* ga = pgrad(self, 0).data().data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = pb + p * n;
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (pneeds(self, 1)) {
      double* gb = pgrad(self, 1).data().data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double av = pa[i * k + p];
          double* gbrow = gb + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
    flops::add(2 * static_cast<std::uint64_t>(m) * k * n);
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (!pneeds(self, p)) continue;
      auto& g = pgrad(self, p);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    if (pneeds(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pneeds(self, 1)) {
      auto& g = pgrad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    const auto& av = pvalue(self, 0);
    const auto& bv = pvalue(self, 1);
    if (pneeds(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (pneeds(self, 1)) {
      auto& g = pgrad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

Var add_bias(const Var& x, const Var& bias) {
  require_rank(bias, 1, "add_bias");
  const std::size_t width = bias.value().size();
  const auto& xs = x.shape();
  if (xs.empty() || xs.back() != width || xs.size() > 2) {
    throw ShapeError("add_bias: cannot add bias " + to_string(bias.shape()) + " to " +
                     to_string(xs));
  }
  Tensor out = x.value();
  const auto bv = bias.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % width];
  return make_result(std::move(out), {x, bias}, [width](Node& self) {
    if (pneeds(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pneeds(self, 1)) {
      auto& g = pgrad(self, 1);
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % width] += self.grad[i];
    }
  });
}

Var scale(const Var& x, double factor) {
  Tensor out = x.value();
  for (auto& v : out.data()) v *= factor;
  return make_result(std::move(out), {x}, [factor](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Var shift(const Var& x, double offset) {
  Tensor out = x.value();
  for (auto& v : out.data()) v += offset;
  return make_result(std::move(out), {x}, [](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var square(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.data()) v *= v;
  return make_result(std::move(out), {x}, [](Node& self) {
    const auto& xv = pvalue(self, 0);
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * xv[i] * self.grad[i];
  });
}

Var divide(const Var& x, const Var& denominator) {
  if (denominator.value().size() != 1) {
    throw ShapeError("divide: denominator must hold one element, got " +
                     to_string(denominator.shape()));
  }
  const double d = denominator.value()[0];
  Tensor out = x.value();
  for (auto& v : out.data()) v /= d;
  return make_result(std::move(out), {x, denominator}, [d](Node& self) {
    if (pneeds(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] / d;
    }
    if (pneeds(self, 1)) {
      // d(x/d)/dd = -x/d^2 = -out/d
      double acc = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * self.value[i];
      pgrad(self, 1)[0] -= acc / d;
    }
  });
}

Var map_activation(const Var& x, Activation kind) {
  Tensor out = x.value();
  switch (kind.kind) {
    case Activation::Kind::tanh:
      for (auto& v : out.data()) v = std::tanh(v);
      return make_result(std::move(out), {x}, [](Node& self) {
        auto& g = pgrad(self, 0);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double y = self.value[i];
          g[i] += (1.0 - y * y) * self.grad[i];
        }
      });
    case Activation::Kind::sigmoid:
      for (auto& v : out.data()) v = sigmoid_scalar(v);
      return make_result(std::move(out), {x}, [](Node& self) {
        auto& g = pgrad(self, 0);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double y = self.value[i];
          g[i] += y * (1.0 - y) * self.grad[i];
        }
      });
    case Activation::Kind::power: {
      const double beta = kind.beta;
      if (!(beta > 0.0)) throw DomainError("power: exponent must be > 0, got " + std::to_string(beta));
      for (auto& v : out.data()) {
        if (v < 0.0) throw DomainError("power: negative input " + std::to_string(v));
        v = std::pow(v, beta);
      }
      return make_result(std::move(out), {x}, [beta](Node& self) {
        const auto& xv = pvalue(self, 0);
        auto& g = pgrad(self, 0);
        for (std::size_t i = 0; i < g.size(); ++i) {
          // At x = 0 with beta < 1 the derivative is unbounded; take 0.
          const double d = xv[i] > 0.0 ? beta * std::pow(xv[i], beta - 1.0) : (beta == 1.0 ? 1.0 : 0.0);
          g[i] += d * self.grad[i];
        }
      });
    }
    case Activation::Kind::gelu:
      for (auto& v : out.data()) {
        const double u = kGeluC * (v + kGeluA * v * v * v);
        v = 0.5 * v * (1.0 + std::tanh(u));
      }
      return make_result(std::move(out), {x}, [](Node& self) {
        const auto& xv = pvalue(self, 0);
        auto& g = pgrad(self, 0);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double v = xv[i];
          const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
          const double du = kGeluC * (1.0 + 3.0 * kGeluA * v * v);
          g[i] += (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du) * self.grad[i];
        }
      });
  }
  throw DomainError("map_activation: unknown kind");
}

Var reduce(const Var& x, ReduceKind kind, std::size_t axis) {
  const Shape& in = x.shape();
  if (axis >= in.size()) {
    throw ShapeError("reduce: axis " + std::to_string(axis) + " invalid for " + to_string(in));
  }
  const std::size_t len = in[axis];
  if (len == 0) throw ShapeError("reduce: empty axis in " + to_string(in));
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= in[d];
  for (std::size_t d = axis + 1; d < in.size(); ++d) inner *= in[d];

  Shape out_shape;
  for (std::size_t d = 0; d < in.size(); ++d)
    if (d != axis) out_shape.push_back(in[d]);
  Tensor out(out_shape);
  std::vector<std::size_t> pick;  // flat input index chosen by min/max
  const bool extremal = kind == ReduceKind::min || kind == ReduceKind::max;
  if (extremal) pick.resize(outer * inner);

  const auto xv = x.value().data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      double acc = xv[base];
      std::size_t best = base;
      if (!extremal) {
        for (std::size_t r = 1; r < len; ++r) acc += xv[base + r * inner];
        if (kind == ReduceKind::mean) acc /= static_cast<double>(len);
      } else {
        for (std::size_t r = 1; r < len; ++r) {
          const double v = xv[base + r * inner];
          if ((kind == ReduceKind::min && v < acc) || (kind == ReduceKind::max && v > acc)) {
            acc = v;
            best = base + r * inner;
          }
        }
        pick[o * inner + i] = best;
      }
      out[o * inner + i] = acc;
    }
  }

  return make_result(std::move(out), {x},
                     [kind, outer, inner, len, pick = std::move(pick)](Node& self) {
                       auto& g = pgrad(self, 0);
                       if (!pick.empty()) {
                         for (std::size_t j = 0; j < pick.size(); ++j) g[pick[j]] += self.grad[j];
                         return;
                       }
                       const double f = kind == ReduceKind::mean ? 1.0 / static_cast<double>(len) : 1.0;
                       for (std::size_t o = 0; o < outer; ++o)
                         for (std::size_t i = 0; i < inner; ++i) {
                           const double gi = f * self.grad[o * inner + i];
                           const std::size_t base = o * len * inner + i;
                           for (std::size_t r = 0; r < len; ++r) g[base + r * inner] += gi;
                         }
                     });
}

Var reduce_all(const Var& x, ReduceKind kind) {
  return reduce(reshape(x, Shape{x.value().size()}), kind, 0);
}

Var reshape(const Var& x, Shape shape) {
  if (element_count(shape) != x.value().size()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  Tensor out(std::move(shape), x.value().values());
  return make_result(std::move(out), {x}, [](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var transpose(const Var& x) {
  require_rank(x, 2, "transpose");
  const std::size_t r = x.value().rows(), c = x.value().cols();
  Tensor out(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = x.value().at(i, j);
  return make_result(std::move(out), {x}, [r, c](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g.at(i, j) += self.grad.at(j, i);
  });
}

Var slice_rows(const Var& x, std::size_t begin, std::size_t end) {
  require_rank(x, 2, "slice_rows");
  const std::size_t r = x.value().rows(), c = x.value().cols();
  if (begin > end || end > r) {
    throw ShapeError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for " + to_string(x.shape()));
  }
  const auto src = x.value().data();
  Tensor out(Shape{end - begin, c},
             std::vector<double>(src.begin() + begin * c, src.begin() + end * c));
  return make_result(std::move(out), {x}, [begin, c](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * c + i] += self.grad[i];
  });
}

Var slice_cols(const Var& x, std::size_t begin, std::size_t end) {
  require_rank(x, 2, "slice_cols");
  const std::size_t r = x.value().rows(), c = x.value().cols();
  if (begin > end || end > c) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for " + to_string(x.shape()));
  }
  const std::size_t w = end - begin;
  Tensor out(Shape{r, w});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out.at(i, j) = x.value().at(i, begin + j);
  return make_result(std::move(out), {x}, [r, w, begin](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) g.at(i, begin + j) += self.grad.at(i, j);
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t c = parts.front().value().cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_rows");
    if (p.value().cols() != c) {
      throw ShapeError("concat_rows: column mismatch " + to_string(parts.front().shape()) + " vs " +
                       to_string(p.shape()));
    }
    total += p.value().rows();
  }
  std::vector<double> data;
  data.reserve(total * c);
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(data.size());
    data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  }
  Tensor out(Shape{total, c}, std::move(data));
  return make_result(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                     [offsets = std::move(offsets)](Node& self) {
                       for (std::size_t p = 0; p < self.parents.size(); ++p) {
                         if (!pneeds(self, p)) continue;
                         auto& g = pgrad(self, p);
                         for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offsets[p] + i];
                       }
                     });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t r = parts.front().value().rows();
  std::size_t total = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.value().rows() != r) {
      throw ShapeError("concat_cols: row mismatch " + to_string(parts.front().shape()) + " vs " +
                       to_string(p.shape()));
    }
    offsets.push_back(total);
    total += p.value().cols();
  }
  Tensor out(Shape{r, total});
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& v = parts[p].value();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) out.at(i, offsets[p] + j) = v.at(i, j);
  }
  return make_result(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                     [offsets = std::move(offsets), r](Node& self) {
                       for (std::size_t p = 0; p < self.parents.size(); ++p) {
                         if (!pneeds(self, p)) continue;
                         auto& g = pgrad(self, p);
                         const std::size_t w = g.cols();
                         for (std::size_t i = 0; i < r; ++i)
                           for (std::size_t j = 0; j < w; ++j) g.at(i, j) += self.grad.at(i, offsets[p] + j);
                       }
                     });
}

Var gather(const Var& x, std::span<const std::size_t> indices) {
  require_rank(x, 1, "gather");
  const std::size_t n = x.value().size();
  std::vector<double> data;
  data.reserve(indices.size());
  for (auto i : indices) {
    if (i >= n) throw ShapeError("gather: index " + std::to_string(i) + " out of range for " + to_string(x.shape()));
    data.push_back(x.value()[i]);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return make_result(Tensor::vector(std::move(data)), {x}, [idx = std::move(idx)](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t j = 0; j < idx.size(); ++j) g[idx[j]] += self.grad[j];
  });
}

Var gather_rows(const Var& table, std::span<const std::size_t> ids) {
  require_rank(table, 2, "gather_rows");
  const std::size_t rows = table.value().rows(), c = table.value().cols();
  Tensor out(Shape{ids.size(), c});
  const auto src = table.value().data();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= rows) {
      throw ShapeError("gather_rows: id " + std::to_string(ids[r]) + " out of range for table " +
                       to_string(table.shape()));
    }
    std::copy_n(src.begin() + ids[r] * c, c, out.data().begin() + r * c);
  }
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return make_result(std::move(out), {table}, [idx = std::move(idx), c](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < c; ++j) g[idx[r] * c + j] += self.grad[r * c + j];
  });
}

Var softmax_rows(const Var& x, std::span<const std::uint8_t> allowed) {
  require_rank(x, 2, "softmax_rows");
  const std::size_t r = x.value().rows(), c = x.value().cols();
  if (!allowed.empty() && allowed.size() != r * c) {
    throw ShapeError("softmax_rows: mask size " + std::to_string(allowed.size()) + " vs " +
                     to_string(x.shape()));
  }
  auto ok = [&](std::size_t i, std::size_t j) { return allowed.empty() || allowed[i * c + j] != 0; };
  Tensor out(Shape{r, c});
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j)
      if (ok(i, j)) mx = std::max(mx, x.value().at(i, j));
    if (!std::isfinite(mx)) throw DomainError("softmax_rows: row " + std::to_string(i) + " fully masked");
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double e = ok(i, j) ? std::exp(x.value().at(i, j) - mx) : 0.0;
      out.at(i, j) = e;
      z += e;
    }
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) /= z;
  }
  return make_result(std::move(out), {x}, [r, c](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += self.value.at(i, j) * self.grad.at(i, j);
      for (std::size_t j = 0; j < c; ++j)
        g.at(i, j) += self.value.at(i, j) * (self.grad.at(i, j) - dot);
    }
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  require_rank(x, 2, "layer_norm");
  const std::size_t r = x.value().rows(), c = x.value().cols();
  if (gain.shape() != Shape{c} || bias.shape() != Shape{c}) {
    throw ShapeError("layer_norm: gain/bias " + to_string(gain.shape()) + "/" +
                     to_string(bias.shape()) + " do not match " + to_string(x.shape()));
  }
  Tensor out(Shape{r, c});
  std::vector<double> normed(r * c), inv_std(r);
  const auto xv = x.value().data();
  const auto gv = gain.value().data();
  const auto bv = bias.value().data();
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = xv.data() + i * c;
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += row[j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(c);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      const double n = (row[j] - mean) * inv_std[i];
      normed[i * c + j] = n;
      out[i * c + j] = gv[j] * n + bv[j];
    }
  }
  return make_result(std::move(out), {x, gain, bias},
                     [r, c, normed = std::move(normed), inv_std = std::move(inv_std)](Node& self) {
                       const auto gv = pvalue(self, 1).data();
                       const double* dy = self.grad.data().data();
                       if (pneeds(self, 0)) {
                         auto& gx = pgrad(self, 0);
                         std::vector<double> dn(c);
                         for (std::size_t i = 0; i < r; ++i) {
                           double mean_dn = 0.0, mean_dn_n = 0.0;
                           for (std::size_t j = 0; j < c; ++j) {
                             dn[j] = dy[i * c + j] * gv[j];
                             mean_dn += dn[j];
                             mean_dn_n += dn[j] * normed[i * c + j];
                           }
                           mean_dn /= static_cast<double>(c);
                           mean_dn_n /= static_cast<double>(c);
                           for (std::size_t j = 0; j < c; ++j)
                             gx[i * c + j] += inv_std[i] * (dn[j] - mean_dn - normed[i * c + j] * mean_dn_n);
                         }
                       }
                       if (pneeds(self, 1)) {
                         auto& gg = pgrad(self, 1);
                         for (std::size_t i = 0; i < r; ++i)
                           for (std::size_t j = 0; j < c; ++j) gg[j] += dy[i * c + j] * normed[i * c + j];
                       }
                       if (pneeds(self, 2)) {
                         auto& gb = pgrad(self, 2);
                         for (std::size_t i = 0; i < r; ++i)
                           for (std::size_t j = 0; j < c; ++j) gb[j] += dy[i * c + j];
                       }
                     });
}

namespace flops {
std::uint64_t count() noexcept { return t_flops; }
void reset() noexcept { t_flops = 0; }
void add(std::uint64_t n) noexcept { t_flops += n; }
}  // namespace flops

}  // namespace ratex
