#include "polyinr/tape.hpp"

#include <gtest/gtest.h>

#include <random>

#include "../test_util.hpp"

using namespace polyinr;
using polyinr::testing::random_tensor;

TEST(TapeForward, MatmulHandProduct) {
  Tape<double> t;
  auto a = t.constant(Tensor<double>::matrix({{1, 2}, {3, 4}}));
  auto b = t.constant(Tensor<double>::matrix({{1}, {1}}));
  auto c = t.matmul(a, b);
  EXPECT_EQ(t.value(c), Tensor<double>::matrix({{3}, {7}}));
}

TEST(TapeForward, LeakyRectifierNegativeSlope) {
  Tape<float> t;
  auto x = t.constant(Tensor<float>::scalar(-1.0f));
  EXPECT_FLOAT_EQ(t.scalar(t.leaky_relu(x, 0.2f)), -0.2f);
}

TEST(TapeForward, MultiplyByOnesIsIdentity) {
  std::mt19937_64 rng(1);
  Tape<float> t;
  auto a = random_tensor<float>({3, 4}, rng);
  auto va = t.constant(a);
  auto out = t.mul(va, t.constant(Tensor<float>::ones({3, 4})));
  EXPECT_TRUE(bitwise_equal(t.value(out), a));
}

TEST(TapeForward, ShapeMismatchNamesNode) {
  Tape<double> t;
  auto a = t.constant(Tensor<double>({2, 3}), "lhs");
  auto b = t.constant(Tensor<double>({2, 3}), "rhs");
  try {
    t.matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("node 2 (matmul)"), std::string::npos) << e.what();
  }
  EXPECT_THROW(t.add(a, t.constant(Tensor<double>({3, 2}))), DimensionError);
}

TEST(TapeBackward, SquareAtThree) {
  Tape<double> t;
  auto x = t.input(Tensor<double>::scalar(3.0), true);
  auto y = t.mul(x, x);
  t.backward(y);
  EXPECT_DOUBLE_EQ(t.grad(x)[0], 6.0);
}

TEST(TapeBackward, BilinearSum) {
  Tape<double> t;
  auto av = Tensor<double>::matrix({{1, -2}, {0.5, 4}});
  auto bv = Tensor<double>::matrix({{3, 1}, {-1, 2}});
  auto a = t.leaf(av, true);
  auto b = t.leaf(bv, true);
  t.backward(t.sum(t.mul(a, b)));
  EXPECT_EQ(t.grad(a), bv);
  EXPECT_EQ(t.grad(b), av);
}

TEST(TapeBackward, StackedLinearJacobianChain) {
  // y = x W1 W2, L = sum(y * g)  =>  dL/dx = g W2^T W1^T.
  // g W2^T = [2, -1], then [2, -1] W1^T = [0, 2] (worked by hand).
  Tape<double> t;
  auto x = t.input(Tensor<double>::matrix({{0.3, -0.7}}), true);
  auto w1 = t.constant(Tensor<double>::matrix({{1, 2}, {3, 4}}));
  auto w2 = t.constant(Tensor<double>::matrix({{0, 1}, {1, -1}}));
  auto g = t.constant(Tensor<double>::matrix({{1, 2}}));
  auto y = t.matmul(t.matmul(x, w1), w2);
  t.backward(t.sum(t.mul(y, g)));
  EXPECT_EQ(t.grad(x), Tensor<double>::matrix({{0, 2}}));
}

TEST(TapeBackward, SecondBackwardIsStateError) {
  Tape<double> t;
  auto x = t.input(Tensor<double>::scalar(1.0), true);
  auto y = t.mul(x, x);
  t.backward(y);
  EXPECT_THROW(t.backward(y), StateError);
}

TEST(TapeBackward, GradBeforeBackwardIsStateError) {
  Tape<double> t;
  auto x = t.input(Tensor<double>::scalar(1.0), true);
  EXPECT_THROW(t.grad(x), StateError);
}

TEST(TapeBackward, NonScalarOutputRejected) {
  Tape<double> t;
  auto x = t.input(Tensor<double>({2, 2}), true);
  EXPECT_THROW(t.backward(x), DimensionError);
}

TEST(TapeBackward, NonParticipatingLeafGetsZeros) {
  Tape<double> t;
  auto x = t.leaf(Tensor<double>::scalar(2.0), true);
  auto unused = t.leaf(Tensor<double>({2, 3}, 5.0), true);
  t.backward(t.mul(x, x));
  EXPECT_EQ(t.grad(unused), Tensor<double>({2, 3}, 0.0));
}

TEST(TapeBackward, LeakyGradientAtZeroUsesNegativeSlope) {
  Tape<double> t;
  auto x = t.input(Tensor<double>::matrix({{0.0, 1.0, -1.0}}), true);
  t.backward(t.sum(t.leaky_relu(x, 0.2)));
  EXPECT_EQ(t.grad(x), Tensor<double>::matrix({{0.2, 1.0, 0.2}}));
}

TEST(TapeBackward, GatherRowsScattersIntoRepeatedRows) {
  Tape<double> t;
  auto a = t.leaf(Tensor<double>::matrix({{1, 2}, {3, 4}, {5, 6}}), true);
  auto g = t.gather_rows(a, {2, 0, 2});
  EXPECT_EQ(t.value(g), Tensor<double>::matrix({{5, 6}, {1, 2}, {5, 6}}));
  t.backward(t.sum(g));
  EXPECT_EQ(t.grad(a), Tensor<double>::matrix({{1, 1}, {0, 0}, {2, 2}}));
}

TEST(TapeBackward, SoftplusAndMse) {
  Tape<double> t;
  auto x = t.input(Tensor<double>::matrix({{0.0}}), true);
  auto sp = t.softplus(x);
  EXPECT_NEAR(t.scalar(sp), std::log(2.0), 1e-15);
  t.backward(sp);
  EXPECT_DOUBLE_EQ(t.grad(x)[0], 0.5);

  Tape<double> m;
  auto a = m.input(Tensor<double>::matrix({{1, 2}}), true);
  auto b = m.constant(Tensor<double>::matrix({{0, 0}}));
  auto loss = m.mse(a, b);
  EXPECT_DOUBLE_EQ(m.scalar(loss), 2.5);
  m.backward(loss);
  EXPECT_EQ(m.grad(a), Tensor<double>::matrix({{1, 2}}));
}

TEST(TapeBackward, SoftplusLargeArgumentsStayFinite) {
  Tape<double> t;
  auto x = t.input(Tensor<double>::matrix({{800.0, -800.0}}), true);
  auto y = t.softplus(x);
  EXPECT_DOUBLE_EQ(t.value(y)[0], 800.0);
  EXPECT_GE(t.value(y)[1], 0.0);
  t.backward(t.sum(y));
  EXPECT_TRUE(t.grad(x).all_finite());
}

TEST(TapeReplay, ReproducesRecordedOutputBitwise) {
  std::mt19937_64 rng(7);
  const auto xv = random_tensor<float>({5, 4}, rng);
  Tape<float> t;
  auto x = t.input(xv, false, "x");
  auto w = t.constant(random_tensor<float>({4, 3}, rng));
  auto bias = t.constant(random_tensor<float>({1, 3}, rng));
  auto y = t.leaky_relu(t.add_row(t.matmul(x, w), bias), 0.2f);
  const Tensor<float> recorded = t.value(y);
  std::vector<Tensor<float>> in{xv};
  EXPECT_TRUE(bitwise_equal(t.replay(in, y), recorded));

  std::vector<Tensor<float>> bad{Tensor<float>({4, 4})};
  EXPECT_THROW(t.replay(bad, y), DimensionError);
  EXPECT_THROW(t.replay({}, y), DimensionError);
}

TEST(TapeReplay, NewInputsChangeOutputAndRearmBackward) {
  Tape<double> t;
  auto x = t.input(Tensor<double>::scalar(2.0), true);
  auto y = t.mul(x, x);
  t.backward(y);
  std::vector<Tensor<double>> in{Tensor<double>::scalar(5.0)};
  EXPECT_DOUBLE_EQ(t.replay(in, y)[0], 25.0);
  t.backward(y);
  EXPECT_DOUBLE_EQ(t.grad(x)[0], 10.0);
}

namespace {

// f and g share the leaf w; h = f + g.
struct LinearityCase {
  Tensor<double> w, a, b;
};

Tensor<double> grad_of(const LinearityCase& c, int which) {
  Tape<double> t;
  auto w = t.leaf(c.w, true);
  auto a = t.constant(c.a);
  auto b = t.constant(c.b);
  auto f = t.sum(t.softplus(t.matmul(a, w)));
  auto g = t.mse(t.leaky_relu(t.matmul(b, w), 0.2), t.constant(Tensor<double>({3, 2}, 0.5)));
  Var out = which == 0 ? f : which == 1 ? g : t.add(f, g);
  t.backward(out);
  return t.grad(w);
}

}  // namespace

TEST(TapeProperties, BackwardIsLinear) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    LinearityCase c{random_tensor<double>({4, 2}, rng), random_tensor<double>({3, 4}, rng),
                    random_tensor<double>({3, 4}, rng)};
    const auto gf = grad_of(c, 0);
    const auto gg = grad_of(c, 1);
    const auto gh = grad_of(c, 2);
    for (std::size_t i = 0; i < gh.size(); ++i) EXPECT_NEAR(gh[i], gf[i] + gg[i], 1e-10);
  }
}

TEST(TapeProperties, DeterministicForwardAndBackward) {
  auto run = [] {
    std::mt19937_64 rng(3);
    Tape<float> t;
    auto x = t.input(random_tensor<float>({16, 8}, rng), true);
    auto w = t.leaf(random_tensor<float>({8, 8}, rng), true);
    auto y = t.mean(t.mul(t.leaky_relu(t.matmul(x, w), 0.2f), x));
    t.backward(y);
    return std::pair{t.grad(x), t.grad(w)};
  };
  const auto first = run();
  const auto second = run();
  EXPECT_TRUE(bitwise_equal(first.first, second.first));
  EXPECT_TRUE(bitwise_equal(first.second, second.second));
}

TEST(TapeProperties, MatmulRowsIndependentOfBatch) {
  std::mt19937_64 rng(5);
  const auto a = random_tensor<float>({37, 19}, rng);
  const auto b = random_tensor<float>({19, 23}, rng);
  Tape<float> full;
  const auto& whole = full.value(full.matmul_nt(full.constant(a), full.constant(b.reshaped({23, 19}))));
  for (std::size_t r : {0u, 5u, 36u}) {
    Tape<float> one;
    auto row = one.gather_rows(one.constant(a), {r});
    const auto& part = one.value(one.matmul_nt(row, one.constant(b.reshaped({23, 19}))));
    for (std::size_t c = 0; c < 23; ++c) EXPECT_EQ(part[c], whole(r, c));
  }
}
