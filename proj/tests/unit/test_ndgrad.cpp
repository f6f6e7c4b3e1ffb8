#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support/gradcheck.hpp"
#include "thermocast/adam.hpp"
#include "thermocast/errors.hpp"
#include "thermocast/ndgrad.hpp"

namespace nd = thermocast::ndgrad;
using nd::Tensor;
using thermocast::testing::check_element;

namespace {

Tensor random_tensor(nd::Shape shape, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v), true);
}

// Every element of every input against central differences.
void expect_gradients(std::vector<Tensor> inputs, const std::function<Tensor()>& loss, double tol = 1e-4) {
  for (auto& in : inputs) {
    for (std::size_t i = 0; i < in.size(); ++i) {
      const auto r = check_element(in, i, loss);
      EXPECT_LT(r.relative_error(), tol) << "element " << i << ": analytic " << r.analytic << ", numeric "
                                         << r.numeric;
    }
  }
}

}  // namespace

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Tensor a({3, 3}, {1, -2, 3, 4, 5, -6, 7, 8, 9});
  const Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const Tensor r = nd::matmul(a, eye);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(r.at(i), a.at(i));
}

TEST(Matmul, HandComputedProduct) {
  const Tensor r = nd::matmul(Tensor({2, 2}, {1, 2, 3, 4}), Tensor({2, 1}, {1, 1}));
  ASSERT_EQ(r.shape(), (nd::Shape{2, 1}));
  EXPECT_EQ(r.at(0), 3.0);
  EXPECT_EQ(r.at(1), 7.0);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    nd::matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL() << "expected DimensionError";
  } catch (const thermocast::DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2 x 3]"), std::string::npos) << msg;
  }
}

TEST(Matmul, GradientOfSumIsRowSumsOfB) {
  std::mt19937_64 rng(1);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);
  nd::backward(nd::sum(nd::matmul(a, b)));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(a.grad()[i * 4 + k], b.at(k, 0) + b.at(k, 1), 1e-12);
  expect_gradients({a, b}, [&] { return nd::sum(nd::matmul(a, b)); });
}

TEST(Activations, ValuesAtZero) {
  EXPECT_EQ(nd::sigmoid(Tensor::scalar(0.0)).item(), 0.5);
  EXPECT_EQ(nd::tanh(Tensor::scalar(0.0)).item(), 0.0);
}

TEST(Activations, SigmoidSlopeAtZero) {
  Tensor x = Tensor::scalar(0.0, true);
  const auto r = check_element(x, 0, [&] { return nd::sigmoid(x); });
  EXPECT_NEAR(r.analytic, 0.25, 1e-15);
  EXPECT_NEAR(r.numeric, 0.25, 1e-6);
}

TEST(Gradients, ElementwiseOpsMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({3, 4}, rng);
  Tensor bias = random_tensor({4}, rng);
  Tensor col = random_tensor({3, 1}, rng);
  // Weighted sums keep each op's gradient distinct from a plain all-ones seed.
  Tensor w = random_tensor({3, 4}, rng);
  auto weighted = [&](const Tensor& t) { return nd::sum(nd::mul(t, w)); };
  expect_gradients({a, b}, [&] { return weighted(nd::add(a, b)); });
  expect_gradients({a, b}, [&] { return weighted(nd::sub(a, b)); });
  expect_gradients({a, b}, [&] { return weighted(nd::mul(a, b)); });
  expect_gradients({a}, [&] { return weighted(nd::scale(a, -1.7)); });
  expect_gradients({a}, [&] { return weighted(nd::shift(a, 0.3)); });
  expect_gradients({a}, [&] { return weighted(nd::sigmoid(a)); });
  expect_gradients({a}, [&] { return weighted(nd::tanh(a)); });
  expect_gradients({a, bias}, [&] { return weighted(nd::add_bias(a, bias)); });
  expect_gradients({a, col}, [&] { return weighted(nd::add_col(a, col)); });
  expect_gradients({a, col}, [&] { return weighted(nd::mul_col(a, col)); });
  expect_gradients({a}, [&] { return weighted(nd::cumsum_cols(a)); });
  expect_gradients({a}, [&] { return nd::mean(nd::mul(a, a)); });
  expect_gradients({a}, [&] {
    return nd::sum(nd::mul(nd::slice_cols(a, 1, 3), nd::slice_cols(w, 0, 2)));
  });
  expect_gradients({a, b}, [&] {
    const Tensor stacked = nd::concat_rows({nd::slice_rows(a, 0, 2), b});
    return nd::sum(nd::mul(stacked, stacked));
  });
}

TEST(Gradients, SigmoidOfLinearMapMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  Tensor w = random_tensor({4, 3}, rng);
  const Tensor x({2, 4}, {0.5, -1.0, 1.5, 0.2, -0.3, 0.8, -1.2, 0.4});
  expect_gradients({w}, [&] { return nd::sum(nd::sigmoid(nd::matmul(x, w))); });
}

TEST(Huber, QuadraticAndLinearBranches) {
  EXPECT_DOUBLE_EQ(nd::huber_loss(Tensor::scalar(0.5), Tensor::scalar(0.0), 1.0).item(), 0.125);
  EXPECT_DOUBLE_EQ(nd::huber_loss(Tensor::scalar(2.0), Tensor::scalar(0.0), 1.0).item(), 1.5);
}

TEST(Huber, PerfectPredictionHasZeroLossAndGradient) {
  Tensor p({1, 3}, {1.0, 2.0, 3.0}, true);
  const Tensor loss = nd::huber_loss(p, Tensor({1, 3}, {1.0, 2.0, 3.0}));
  EXPECT_EQ(loss.item(), 0.0);
  nd::backward(loss);
  for (double g : p.grad()) EXPECT_EQ(g, 0.0);
}

TEST(Huber, GradientClampedBeyondKnee) {
  Tensor p({1, 2}, {5.0, -0.25}, true);
  nd::backward(nd::huber_loss(p, Tensor::zeros({1, 2}), 1.0));
  EXPECT_DOUBLE_EQ(p.grad()[0], 1.0 / 2.0);
  EXPECT_DOUBLE_EQ(p.grad()[1], -0.25 / 2.0);
}

TEST(Huber, NonPositiveDeltaIsConfigError) {
  EXPECT_THROW(nd::huber_loss(Tensor::scalar(1.0), Tensor::scalar(0.0), 0.0), thermocast::ConfigError);
}

TEST(Huber, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  Tensor p = random_tensor({2, 5}, rng);
  const Tensor t({2, 5}, {0.1, 2.5, -1.0, 0.0, 0.7, -2.2, 1.1, 0.4, -0.4, 3.0});
  expect_gradients({p}, [&] { return nd::huber_loss(p, t, 1.0); });
}

TEST(Bce, ReferenceValues) {
  EXPECT_NEAR(nd::bce_loss(Tensor::scalar(0.5), Tensor::scalar(1.0)).item(), std::log(2.0), 1e-15);
  EXPECT_NEAR(nd::bce_loss(Tensor::scalar(0.8), Tensor::scalar(0.0)).item(), -std::log(0.2), 1e-12);
  EXPECT_LT(nd::bce_loss(Tensor::scalar(1.0 - 1e-12), Tensor::scalar(1.0)).item(), 1e-6);
  EXPECT_TRUE(std::isfinite(nd::bce_loss(Tensor::scalar(0.0), Tensor::scalar(1.0)).item()));
}

TEST(Bce, GradientMatchesFiniteDifferences) {
  Tensor p({4, 1}, {0.2, 0.6, 0.9, 0.35}, true);
  const Tensor y = Tensor::column({0, 1, 1, 0});
  expect_gradients({p}, [&] { return nd::bce_loss(p, y); });
}

TEST(GradReverse, IdentityForwardScaledNegatedBackward) {
  std::mt19937_64 rng(5);
  for (double lambda : {0.0, 0.005, 0.01, 2.0}) {
    Tensor x = random_tensor({3, 2}, rng);
    const Tensor g = random_tensor({3, 2}, rng);
    const Tensor r = nd::grad_reverse(x, lambda);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(r.at(i), x.at(i));
    nd::backward(nd::sum(nd::mul(r, g)));
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x.grad()[i], -lambda * g.at(i));
  }
  EXPECT_THROW(nd::grad_reverse(Tensor::scalar(1.0, true), -0.1), thermocast::ConfigError);
}

TEST(Backward, SquareAtThree) {
  Tensor x = Tensor::scalar(3.0, true);
  nd::backward(nd::mul(x, x));
  EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(Backward, RepeatedCallsAccumulateLeafGradients) {
  Tensor x = Tensor::scalar(3.0, true);
  const Tensor loss = nd::mul(x, x);
  nd::backward(loss);
  nd::backward(loss);
  EXPECT_EQ(x.grad()[0], 12.0);
  x.zero_grad();
  nd::backward(loss);
  EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(Backward, RejectsNonScalarAndConstantLoss) {
  Tensor x({2}, {1.0, 2.0}, true);
  EXPECT_THROW(nd::backward(nd::scale(x, 2.0)), thermocast::UsageError);
  EXPECT_THROW(nd::backward(Tensor::scalar(1.0)), thermocast::UsageError);
}

TEST(Backward, SharedSubexpressionGetsBothContributions) {
  Tensor x = Tensor::scalar(2.0, true);
  const Tensor y = nd::tanh(x);
  nd::backward(nd::add(nd::mul(y, y), y));
  const double t = std::tanh(2.0);
  EXPECT_NEAR(x.grad()[0], (2.0 * t + 1.0) * (1.0 - t * t), 1e-15);
}

TEST(Tape, InputsPrecedeOutputs) {
  Tensor a = Tensor::scalar(1.0, true);
  Tensor b = Tensor::scalar(2.0, true);
  const Tensor c = nd::mul(nd::add(a, b), nd::tanh(a));
  const nd::Tape tape = nd::Tape::record(c);
  ASSERT_EQ(tape.size(), 5u);
  for (std::size_t i = 0; i < tape.size(); ++i)
    for (std::size_t in : tape.entries()[i].inputs) EXPECT_LT(in, i);
  EXPECT_STREQ(tape.entries().back().op, "mul");
}

TEST(Tape, NoGradGuardSkipsRecording) {
  Tensor a = Tensor::scalar(1.0, true);
  Tensor r;
  {
    nd::NoGradGuard guard;
    EXPECT_FALSE(nd::grad_enabled());
    r = nd::scale(a, 2.0);
  }
  EXPECT_TRUE(nd::grad_enabled());
  EXPECT_FALSE(r.requires_grad());
  EXPECT_TRUE(r.is_leaf());
}

TEST(Tape, ReplayIsDeterministic) {
  auto run = [] {
    std::mt19937_64 rng(99);
    Tensor w = random_tensor({5, 3}, rng);
    const Tensor x = random_tensor({4, 5}, rng);
    const Tensor loss = nd::mean(nd::tanh(nd::matmul(x, w)));
    nd::backward(loss);
    std::vector<double> out{loss.item()};
    out.insert(out.end(), w.grad().begin(), w.grad().end());
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor theta = Tensor::scalar(0.0, true);
  nd::Adam adam({{"theta", theta}}, {.lr = 1e-3});
  theta.mutable_grad()[0] = 1.0;
  adam.step();
  EXPECT_NEAR(theta.item(), -1e-3 / (1.0 + 1e-8), 1e-18);
  EXPECT_EQ(adam.state().t, 1u);
}

TEST(Adam, ZeroGradientLeavesParameterUnchanged) {
  Tensor theta({2}, {0.5, -0.5}, true);
  nd::Adam adam({{"theta", theta}});
  theta.mutable_grad();
  adam.step();
  EXPECT_EQ(theta.at(0), 0.5);
  EXPECT_EQ(theta.at(1), -0.5);
}

TEST(Adam, ConstantGradientDecreasesMonotonically) {
  Tensor theta = Tensor::scalar(1.0, true);
  nd::Adam adam({{"theta", theta}});
  double previous = theta.item();
  for (int step = 0; step < 2; ++step) {
    theta.zero_grad();
    theta.mutable_grad()[0] = 1.0;
    adam.step();
    EXPECT_LT(theta.item(), previous);
    previous = theta.item();
  }
  // With a constant gradient both bias-corrected moments equal 1 at t = 2.
  EXPECT_NEAR(theta.item(), 1.0 - 2.0 * 1e-3 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, MissingGradientNamesTheParameter) {
  Tensor a = Tensor::scalar(1.0, true);
  Tensor b = Tensor::scalar(1.0, true);
  nd::Adam adam({{"layer.a", a}, {"layer.b", b}});
  a.mutable_grad()[0] = 1.0;
  try {
    adam.step();
    FAIL() << "expected UsageError";
  } catch (const thermocast::UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("layer.b"), std::string::npos);
  }
}
