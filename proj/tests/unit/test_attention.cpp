#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "ratex/attention.hpp"
#include "reference.hpp"

using namespace ratex;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Tensor t(Shape{r, c});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (auto& v : t.data()) v = d(rng);
  return t;
}

}  // namespace

TEST(AttentionPattern, FullCoversEverything) {
  const auto p = AttentionPattern::full(4);
  EXPECT_EQ(p.nnz(), 16u);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_TRUE(p.allows(i, j));
}

TEST(AttentionPattern, BlockDiagonalStaysInsideBlocks) {
  const std::vector<std::size_t> lengths{2, 3};
  const auto p = AttentionPattern::block_diagonal(lengths);
  EXPECT_EQ(p.size(), 5u);
  EXPECT_EQ(p.nnz(), 4u + 9u);
  EXPECT_TRUE(p.allows(1, 0));
  EXPECT_FALSE(p.allows(1, 2));
  EXPECT_TRUE(p.allows(4, 2));
}

TEST(AttentionPattern, WindowWithGlobalToken) {
  const auto p = AttentionPattern::sliding_window_with_global(10, 3);
  for (std::size_t j = 0; j < 10; ++j) EXPECT_TRUE(p.allows(0, j));
  for (std::size_t i = 1; i < 10; ++i) {
    for (std::size_t j = 0; j < 10; ++j) {
      const bool expected = j == 0 || (j + 1 >= i && j <= i + 1);
      EXPECT_EQ(p.allows(i, j), expected) << i << "," << j;
    }
  }
}

TEST(AttentionPattern, EvenWindowRejected) {
  EXPECT_THROW(AttentionPattern::sliding_window_with_global(5, 4), DomainError);
}

TEST(SparseAttention, MatchesDenseMaskedSoftmax) {
  const std::size_t n = 7, h = 6, heads = 2;
  auto pattern = std::make_shared<const AttentionPattern>(AttentionPattern::sliding_window_with_global(n, 3));
  const Tensor q = random_matrix(n, h, 1), k = random_matrix(n, h, 2), v = random_matrix(n, h, 3);
  AttentionMap map;
  const Tensor out = sparse_attention(constant(q), constant(k), constant(v), heads, pattern, &map).value();
  const std::size_t dh = h / heads;
  for (std::size_t hd = 0; hd < heads; ++hd) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> w(n, 0.0);
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!pattern->allows(i, j)) continue;
        double dot = 0.0;
        for (std::size_t d = 0; d < dh; ++d) dot += q.at(i, hd * dh + d) * k.at(j, hd * dh + d);
        w[j] = std::exp(dot / std::sqrt(double(dh)));
        z += w[j];
      }
      for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(map.weight(hd, i, j), w[j] / z, 1e-14);
      for (std::size_t d = 0; d < dh; ++d) {
        double expect = 0.0;
        for (std::size_t j = 0; j < n; ++j) expect += w[j] / z * v.at(j, hd * dh + d);
        EXPECT_NEAR(out.at(i, hd * dh + d), expect, 1e-13);
      }
    }
  }
}

TEST(SparseAttention, GradientsMatchFiniteDifferences) {
  const std::size_t n = 6, h = 4;
  for (auto pattern : {std::make_shared<const AttentionPattern>(AttentionPattern::sliding_window_with_global(n, 3)),
                       std::make_shared<const AttentionPattern>(AttentionPattern::full(n))}) {
    Var q = leaf(random_matrix(n, h, 4)), k = leaf(random_matrix(n, h, 5)), v = leaf(random_matrix(n, h, 6));
    Var w = constant(random_matrix(n, h, 7));
    const auto r = ratex::testing::check_gradients(
        [&] { return reduce_all(mul(sparse_attention(q, k, v, 2, pattern), w), ReduceKind::sum); },
        {{"q", q}, {"k", k}, {"v", v}});
    EXPECT_LT(r.max_relative_error, 1e-6) << r.worst;
  }
}

TEST(SparseAttention, RowsOfMapSumToOne) {
  const std::size_t n = 9;
  auto pattern = std::make_shared<const AttentionPattern>(AttentionPattern::sliding_window_with_global(n, 5));
  AttentionMap map;
  sparse_attention(constant(random_matrix(n, 4, 8)), constant(random_matrix(n, 4, 9)),
                   constant(random_matrix(n, 4, 10)), 2, pattern, &map);
  for (std::size_t hd = 0; hd < 2; ++hd)
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = map.dense_row(hd, i);
      EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
    }
}

TEST(SparseAttention, FlopsLinearInLengthAtFixedWindow) {
  auto cost = [](std::size_t n) {
    auto pattern = std::make_shared<const AttentionPattern>(AttentionPattern::sliding_window_with_global(n, 17));
    flops::reset();
    NoGradGuard guard;
    sparse_attention(constant(Tensor(Shape{n, 8})), constant(Tensor(Shape{n, 8})), constant(Tensor(Shape{n, 8})), 2,
                     pattern);
    return static_cast<double>(flops::count());
  };
  const double ratio = cost(1024) / cost(512);
  EXPECT_GE(ratio, 1.8);
  EXPECT_LE(ratio, 2.2);
}
