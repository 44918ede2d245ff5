#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "clref/error.hpp"
#include "clref/nn.hpp"
#include "test_support.hpp"

using namespace clref;
using namespace clref::nn;
using clref::testing::random_batch;

namespace {

std::size_t expected_param_count(const std::vector<std::size_t>& sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l] * sizes[l + 1] + sizes[l + 1];
  return n;
}

}  // namespace

TEST(NetworkSpec, ParamCountMatchesLayerFormula) {
  for (const auto& sizes : std::vector<std::vector<std::size_t>>{{1, 1}, {784, 100, 10}, {3, 5, 4, 2}, {7, 1, 1, 9}}) {
    const NetworkSpec spec{sizes, Activation::relu};
    EXPECT_EQ(spec.param_count(), expected_param_count(sizes));
  }
}

TEST(NetworkSpec, RejectsDegenerateShapes) {
  EXPECT_THROW((NetworkSpec{{4}, Activation::relu}.validate()), ContractError);
  EXPECT_THROW((NetworkSpec{{4, 0, 2}, Activation::relu}.validate()), ContractError);
}

TEST(Forward, ZeroParamsGiveZeroLogits) {
  const NetworkSpec spec{{3, 4, 2}, Activation::relu};
  std::mt19937_64 rng(1);
  const Batch b = random_batch(spec, 5, rng);
  const Matrix logits = forward(spec, ParamVector(spec.param_count(), 0.0), b.inputs);
  ASSERT_EQ(logits.rows, 5u);
  ASSERT_EQ(logits.cols, 2u);
  for (double v : logits.data) EXPECT_EQ(v, 0.0);
}

TEST(Forward, SingleAffineMap) {
  const NetworkSpec spec{{1, 1}, Activation::relu};
  const Matrix logits = forward(spec, ParamVector{1.0, 0.0}, Matrix(1, 1, std::vector<double>{2.0}));
  EXPECT_EQ(logits(0, 0), 2.0);
}

TEST(Forward, TwoLayerReluMatchesHandEvaluation) {
  // Weights are fan_in x fan_out row-major, then the layer's biases.
  const NetworkSpec spec{{2, 2, 2}, Activation::relu};
  const ParamVector p{0.5, -1.0,  // from input 0
                      0.25, 2.0,  // from input 1
                      0.1, -0.2,  // hidden biases
                      1.0, -1.0,  // from hidden 0
                      0.5, 3.0,   // from hidden 1
                      0.0, 0.3};  // output biases
  const double x0 = 1.5, x1 = -0.5;
  const double h0 = std::max(0.0, 0.5 * x0 + 0.25 * x1 + 0.1);
  const double h1 = std::max(0.0, -1.0 * x0 + 2.0 * x1 - 0.2);
  const double y0 = 1.0 * h0 + 0.5 * h1 + 0.0;
  const double y1 = -1.0 * h0 + 3.0 * h1 + 0.3;
  const Matrix logits = forward(spec, p, Matrix(1, 2, std::vector<double>{x0, x1}));
  EXPECT_NEAR(logits(0, 0), y0, 1e-15);
  EXPECT_NEAR(logits(0, 1), y1, 1e-15);
}

TEST(Forward, TanhHiddenLayer) {
  const NetworkSpec spec{{1, 1, 1}, Activation::tanh};
  const ParamVector p{2.0, -0.5, 3.0, 1.0};
  const Matrix logits = forward(spec, p, Matrix(1, 1, std::vector<double>{0.7}));
  EXPECT_NEAR(logits(0, 0), 3.0 * std::tanh(2.0 * 0.7 - 0.5) + 1.0, 1e-15);
}

TEST(Forward, IsBitwiseDeterministic) {
  const NetworkSpec spec{{6, 8, 3}, Activation::relu};
  std::mt19937_64 rng(9);
  const Batch b = random_batch(spec, 7, rng);
  const ParamVector p = init_params(spec, 3);
  EXPECT_EQ(forward(spec, p, b.inputs), forward(spec, p, b.inputs));
}

TEST(Forward, DimensionMismatchIsAContractError) {
  const NetworkSpec spec{{3, 2}, Activation::relu};
  EXPECT_THROW(forward(spec, ParamVector(spec.param_count()), Matrix(1, 4)), ContractError);
  EXPECT_THROW(forward(spec, ParamVector(spec.param_count() + 1), Matrix(1, 3)), ContractError);
}

TEST(Forward, NonFiniteActivationReportsLayer) {
  const NetworkSpec spec{{1, 1, 1}, Activation::relu};
  ParamVector p{1.0, 0.0, std::numeric_limits<double>::infinity(), 0.0};
  try {
    forward(spec, p, Matrix(1, 1, std::vector<double>{1.0}));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(InitParams, SeededUniformWithinGlorotBoundsAndZeroBiases) {
  const NetworkSpec spec{{20, 10, 4}, Activation::relu};
  const ParamVector p = init_params(spec, 5);
  EXPECT_EQ(p, init_params(spec, 5));
  EXPECT_NE(p, init_params(spec, 6));
  const double b1 = std::sqrt(6.0 / 30.0), b2 = std::sqrt(6.0 / 14.0);
  for (std::size_t i = 0; i < 200; ++i) EXPECT_LE(std::abs(p[i]), b1);
  for (std::size_t i = 200; i < 210; ++i) EXPECT_EQ(p[i], 0.0);
  for (std::size_t i = 210; i < 250; ++i) EXPECT_LE(std::abs(p[i]), b2);
  for (std::size_t i = 250; i < 254; ++i) EXPECT_EQ(p[i], 0.0);
}

TEST(Loss, ZeroLogitsTwoClassesIsLn2) {
  const NetworkSpec spec{{3, 2}, Activation::relu};
  std::mt19937_64 rng(2);
  const Batch b = random_batch(spec, 4, rng);
  EXPECT_NEAR(loss_and_grad(spec, ParamVector(spec.param_count()), b).loss, std::log(2.0), 1e-15);
}

TEST(Loss, StableForHugeLogits) {
  const Matrix logits(1, 3, std::vector<double>{1000.0, 0.0, -1000.0});
  const std::vector<int> labels{1};
  EXPECT_NEAR(softmax_cross_entropy(logits, labels, nullptr), 1000.0, 1e-9);
}

TEST(Loss, GradientMatchesFiniteDifferencesOnFiftyInstances) {
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 50; ++k) {
    std::mt19937_64 rng(1000 + k);
    const NetworkSpec spec = k % 3 == 0   ? NetworkSpec{{4, 3}, Activation::relu}
                             : k % 3 == 1 ? NetworkSpec{{5, 6, 3}, Activation::tanh}
                                          : NetworkSpec{{3, 4, 4, 2}, Activation::tanh};
    const Batch b = random_batch(spec, 6, rng);
    const ParamVector p = init_params(spec, k);
    const auto f = [&](const ParamVector& q) { return loss_and_grad(spec, q, b).loss; };
    worst = std::max(worst, clref::testing::rel_error(loss_and_grad(spec, p, b).grad,
                                                      clref::testing::central_differences(f, p)));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Loss, DuplicatingTheBatchChangesNothing) {
  const NetworkSpec spec{{4, 5, 3}, Activation::relu};
  std::mt19937_64 rng(4);
  const Batch b = random_batch(spec, 5, rng);
  Batch doubled{Matrix(10, 4), {}};
  for (std::size_t r = 0; r < 10; ++r) {
    for (std::size_t c = 0; c < 4; ++c) doubled.inputs(r, c) = b.inputs(r % 5, c);
    doubled.labels.push_back(b.labels[r % 5]);
  }
  const ParamVector p = init_params(spec, 1);
  const auto one = loss_and_grad(spec, p, b);
  const auto two = loss_and_grad(spec, p, doubled);
  EXPECT_NEAR(one.loss, two.loss, 1e-14);
  EXPECT_LT(clref::testing::max_abs_diff(one.grad, two.grad), 1e-14);
}

TEST(Sgd, StepDefinition) {
  EXPECT_EQ(sgd_step(ParamVector{1, 1}, ParamVector{2, -2}, 0.5), (ParamVector{0, 2}));
  EXPECT_EQ(sgd_step(ParamVector{1, 1}, ParamVector{2, -2}, 0.0), (ParamVector{1, 1}));
}

TEST(Sgd, ConvergesOnOneDimensionalQuadratic) {
  // f(t) = 1/2 * 3 * (t - 2)^2, minimum at 2.
  ParamVector t{-5.0};
  for (int i = 0; i < 200; ++i) t = sgd_step(t, ParamVector{3.0 * (t[0] - 2.0)}, 0.2);
  EXPECT_NEAR(t[0], 2.0, 1e-6);
}

TEST(Accuracy, ZeroLogitsTieBreakToClassZero) {
  const NetworkSpec spec{{2, 3}, Activation::relu};
  Batch b{Matrix(4, 2, 1.0), {0, 0, 0, 0}};
  EXPECT_EQ(accuracy(spec, ParamVector(spec.param_count()), b), 1.0);
  EXPECT_EQ(argmax(std::vector<double>{1.0, 3.0, 3.0}), 1u);
}

TEST(Accuracy, SeparableHandBuiltNet) {
  // logit_c = x_c: the label is the index of the largest input.
  const NetworkSpec spec{{3, 3}, Activation::relu};
  ParamVector p(spec.param_count());
  for (std::size_t c = 0; c < 3; ++c) p[c * 3 + c] = 1.0;
  Batch b{Matrix(3, 3, std::vector<double>{5, 1, 0, 0, 2, 1, 0, 0, 9}), {0, 1, 2}};
  EXPECT_EQ(accuracy(spec, p, b), 1.0);
}

TEST(Accuracy, MatchesRecount) {
  const NetworkSpec spec{{8, 12, 10}, Activation::relu};
  std::mt19937_64 rng(77);
  const Batch b = random_batch(spec, 300, rng);
  const ParamVector p = init_params(spec, 8);
  const Matrix logits = forward(spec, p, b.inputs);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < b.size(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < 10; ++c)
      if (logits(r, c) > logits(r, best)) best = c;
    hits += static_cast<int>(best) == b.labels[r];
  }
  EXPECT_DOUBLE_EQ(accuracy(spec, p, b), static_cast<double>(hits) / 300.0);
}

TEST(Accuracy, EmptyBatchIsAContractError) {
  const NetworkSpec spec{{2, 2}, Activation::relu};
  EXPECT_THROW(accuracy(spec, ParamVector(spec.param_count()), Batch{Matrix(0, 2), {}}), ContractError);
}

TEST(Batch, RejectsOutOfRangeLabels) {
  const NetworkSpec spec{{2, 2}, Activation::relu};
  EXPECT_THROW((Batch{Matrix(1, 2), {2}}.validate(spec)), ContractError);
  EXPECT_THROW((Batch{Matrix(1, 2), {-1}}.validate(spec)), ContractError);
}
