#include <gtest/gtest.h>

#include "ratex/tensor.hpp"

using namespace ratex;

TEST(Tensor, ShapeAndSize) {
  Tensor t(Shape{2, 3});
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  for (double v : t.data()) EXPECT_EQ(v, 0.0);
}

TEST(Tensor, ScalarHoldsOneValue) {
  Tensor s = Tensor::scalar(4.5);
  EXPECT_EQ(s.rank(), 0u);
  EXPECT_EQ(s.size(), 1u);
  EXPECT_EQ(s.item(), 4.5);
}

TEST(Tensor, MatrixInitializerList) {
  Tensor m = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}});
  EXPECT_EQ(m.shape(), (Shape{3, 2}));
  EXPECT_EQ(m.at(2, 1), 6.0);
}

TEST(Tensor, RejectsMismatchedData) {
  EXPECT_THROW(Tensor(Shape{2, 2}, {1.0, 2.0, 3.0}), ShapeError);
  EXPECT_THROW(Tensor::matrix({{1, 2}, {3}}), ShapeError);
}

TEST(Tensor, ItemRequiresOneElement) { EXPECT_THROW(Tensor(Shape{2}).item(), ShapeError); }

TEST(Tensor, FiniteCheck) {
  Tensor t = Tensor::vector({1.0, 2.0});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(t.all_finite());
}

TEST(Tensor, ShapeToString) { EXPECT_EQ(to_string(Shape{3, 4}), "[3x4]"); }
