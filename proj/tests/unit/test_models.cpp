#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stabeval/error.hpp"
#include "stabeval/models.hpp"
#include "stabeval/numeric.hpp"

using namespace stabeval;

namespace {

SampleView view(const std::vector<double>& x, int y) { return {std::span<const double>(x), y}; }

MlpModel random_mlp(std::mt19937_64& rng, std::size_t hidden, std::size_t input, Activation act) {
  std::normal_distribution<double> n(0.0, 0.7);
  std::vector<double> w1(hidden * input), b1(hidden), w2(hidden);
  for (double& v : w1) v = n(rng);
  for (double& v : b1) v = n(rng);
  for (double& v : w2) v = n(rng);
  return MlpModel(hidden, input, w1, b1, w2, n(rng), act);
}

// Relative error with an absolute floor so near-zero components compare sanely.
double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-3, std::max(std::abs(a), std::abs(b))); }

void expect_fd_gradient(const LossModel& model, std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> n(0.0, 1.5);
  std::vector<double> x(d);
  for (double& v : x) v = n(rng);
  const int y = (rng() & 1U) ? 1 : -1;
  const auto g = grad_sample(model, view(x, y));
  const auto fd = oracle::central_difference([&](const std::vector<double>& p) { return loss(model, view(p, y)); }, x,
                                            1e-5);
  for (std::size_t j = 0; j < d; ++j) EXPECT_LE(rel_err(g[j], fd[j]), 1e-4) << "component " << j;
}

}  // namespace

TEST(Loss, Examples) {
  const LossModel clf(LinearClassifier({1.0, 0.0}, 0.0));
  EXPECT_EQ(loss(clf, view({2, 0}, 1)), 0.0);
  EXPECT_EQ(loss(clf, view({-1, 0}, 1)), 1.0);
  EXPECT_EQ(loss(clf, view({0, 3}, 1)), 1.0);  // boundary counts as an error
  const LossModel pw(PiecewiseLinearModel({{1.0, 0.0}}, {0.0}));
  EXPECT_EQ(loss(pw, view({2, 0}, 1)), 2.0);
  EXPECT_EQ(loss(pw, view({2, 0}, -1)), -2.0);
  const LossModel lr(LogisticModel({0.0, 0.0}, 0.0));
  EXPECT_DOUBLE_EQ(loss(lr, view({5, -3}, -1)), std::log(2.0));
}

TEST(Loss, PiecewiseIsMaxOfPieces) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const oracle::Instance in = oracle::random_piecewise(rng, 8, 3, 4);
    const auto& m = *in.model.get_if<PiecewiseLinearModel>();
    for (std::size_t i = 0; i < in.data.size(); ++i) {
      const auto z = in.data.sample(i);
      double best = -INFINITY;
      for (std::size_t k = 0; k < m.pieces(); ++k) {
        double v = m.intercepts[k];
        for (std::size_t j = 0; j < 3; ++j) v += z.y * m.slopes[k][j] * z.x[j];
        best = std::max(best, v);
      }
      EXPECT_NEAR(loss(in.model, z), best, 1e-12);
    }
  }
}

TEST(Loss, RejectsWrongDimension) {
  const LossModel clf(LinearClassifier({1.0, 0.0}, 0.0));
  EXPECT_THROW(loss(clf, view({1.0}, 1)), Error);
  EXPECT_THROW(PiecewiseLinearModel({{1.0}, {1.0, 2.0}}, {0.0, 0.0}), Error);
  EXPECT_THROW(PiecewiseLinearModel({{1.0}}, {0.0, 0.0}), Error);
  EXPECT_THROW(MlpModel(2, 2, {1, 2, 3}, {0, 0}, {1, 1}, 0.0, Activation::Tanh), Error);
}

TEST(Gradient, PiecewiseAndZeroOne) {
  const LossModel pw(PiecewiseLinearModel({{1.0, 0.0}}, {0.0}));
  EXPECT_EQ(grad_sample(pw, view({7, -2}, 1)), (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(grad_sample(pw, view({7, -2}, -1)), (std::vector<double>{-1.0, 0.0}));
  try {
    grad_sample(LossModel(LinearClassifier({1.0}, 0.0)), view({1.0}, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unsupported);
  }
}

TEST(Gradient, LogisticMatchesFiniteDifferences) {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> n(0.0, 1.0);
  expect_fd_gradient(LossModel(LogisticModel({0.0, 0.0}, 0.0)), rng, 2);
  for (int draw = 0; draw < 100; ++draw) {
    const LogisticModel m({n(rng), n(rng), n(rng)}, n(rng));
    expect_fd_gradient(LossModel(m), rng, 3);
  }
}

TEST(Gradient, MlpMatchesFiniteDifferences) {
  std::mt19937_64 rng(202);
  for (Activation act : {Activation::Tanh, Activation::ReLU}) {
    for (int draw = 0; draw < 100; ++draw) {
      expect_fd_gradient(LossModel(random_mlp(rng, 16, 4, act)), rng, 4);
    }
  }
}

TEST(MarginDistance, Examples) {
  const LinearClassifier m({1.0, 0.0}, 0.0);
  EXPECT_EQ(margin_distance(m, view({-1, 0}, 1)).value(), 0.0);
  EXPECT_DOUBLE_EQ(margin_distance(m, view({2, 0}, 1)).value(), 4.0);
  const LinearClassifier both({1.0, 1.0}, 0.0);
  const std::vector<std::size_t> second{1};
  EXPECT_DOUBLE_EQ(margin_distance(both, view({2, 0}, 1), FeatureMask(2, second)).value(), 4.0);
  const std::vector<std::size_t> first{0};
  EXPECT_TRUE(margin_distance(m, view({2, 0}, 1), FeatureMask(2, second)).is_infinite());
  EXPECT_DOUBLE_EQ(margin_distance(m, view({2, 0}, 1), FeatureMask(2, first)).value(), 4.0);
}

TEST(MarginDistance, MatchesGridOracle) {
  // Minimize ||x - x_hat||^2 over misclassified x on a 1e-3 grid.
  const LinearClassifier m({1.0, 0.0}, 0.0);
  const std::vector<double> xh{2.0, 0.0};
  double best = INFINITY;
  for (long a = -3000; a <= 3000; ++a) {
    const double x1 = a * 1e-3;
    if (x1 > 0.0) continue;  // x2 does not affect the score, keep it at x_hat
    best = std::min(best, (x1 - xh[0]) * (x1 - xh[0]));
  }
  EXPECT_NEAR(margin_distance(m, view(xh, 1)).value(), best, 1e-4);

  const LinearClassifier both({1.0, 1.0}, 0.0);
  double best2 = INFINITY;
  for (long a = -5000; a <= 5000; ++a) {
    const double x2 = a * 1e-3;
    if (2.0 + x2 <= 0.0) best2 = std::min(best2, x2 * x2);
  }
  const std::vector<std::size_t> second{1};
  EXPECT_NEAR(margin_distance(both, view(xh, 1), FeatureMask(2, second)).value(), best2, 1e-4);
}

TEST(MarginDistance, ScaleInvariantAndProjectionFlips) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> w{n(rng), n(rng), n(rng)};
    const double b = n(rng);
    const std::vector<double> x{n(rng), n(rng), n(rng)};
    const int y = (trial % 2) ? 1 : -1;
    const LinearClassifier m(w, b);
    const double c = 0.1 + 5.0 * std::abs(n(rng));
    const LinearClassifier scaled({c * w[0], c * w[1], c * w[2]}, c * b);
    const double d0 = margin_distance(m, view(x, y)).value();
    EXPECT_NEAR(margin_distance(scaled, view(x, y)).value(), d0, 1e-10 * std::max(1.0, d0));
    const FeatureMask all = FeatureMask::all(3);
    const auto p = boundary_projection(m, view(x, y), all);
    EXPECT_EQ(loss(LossModel(m), view(p, y)), 1.0);
    // A misclassified point has distance 0 but still projects onto the boundary.
    if (d0 > 0.0) {
      EXPECT_NEAR(numeric::squared_distance(p, x), d0, 1e-9 * std::max(1.0, d0));
    }
  }
}

TEST(ResolveLoss, Views) {
  const LossModel lr(LogisticModel({1.0, -1.0}, 0.5));
  const LossModel clf = resolve_loss(lr, LossKind::ZeroOne);
  ASSERT_NE(clf.get_if<LinearClassifier>(), nullptr);
  EXPECT_EQ(clf.get_if<LinearClassifier>()->weights, (std::vector<double>{1.0, -1.0}));
  EXPECT_THROW(resolve_loss(lr, LossKind::PiecewiseLinear), Error);
  EXPECT_EQ(resolve_loss(lr, LossKind::SmoothNonlinear), lr);
}

TEST(BaselineRisk, MeanOfLosses) {
  const Dataset data(Matrix(3, 1, std::vector<double>{1, -1, 2}), {1, 1, -1}, {"a"});
  EXPECT_DOUBLE_EQ(baseline_risk(LossModel(LinearClassifier({1.0}, 0.0)), data), 2.0 / 3.0);
}
