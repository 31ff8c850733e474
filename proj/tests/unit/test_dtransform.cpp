#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stabeval/dtransform.hpp"
#include "stabeval/numeric.hpp"

using namespace stabeval;

namespace {

SampleView view(const std::vector<double>& x, int y) { return {std::span<const double>(x), y}; }

const FeatureMask kAll2 = FeatureMask::all(2);

}  // namespace

TEST(PiecewiseTransform, UnmaskedExampleMatchesGrid) {
  const PiecewiseLinearModel m({{1.0, 0.0}}, {0.0});
  const std::vector<double> xh{0.0, 0.0};
  const auto res = dtransform_piecewise(m, view(xh, 1), 2.0, Price(1.0), kAll2);
  EXPECT_NEAR(res.value, 1.0, 1e-12);
  EXPECT_NEAR(res.maximizer[0], 1.0, 1e-12);
  EXPECT_EQ(res.maximizer[1], 0.0);

  // h*x1 - ||x||^2 over [-5, 5]^2, step 1e-3; x2 = 0 is optimal for every x1.
  const auto g = oracle::grid_max([](double x1) { return 2.0 * x1 - x1 * x1; }, -5.0, 5.0, 1e-3);
  EXPECT_NEAR(res.value, g.value, 1e-3);
  EXPECT_NEAR(res.maximizer[0], g.argmax, 1e-3);
}

TEST(PiecewiseTransform, MaskedExampleMatchesGrid) {
  const PiecewiseLinearModel m({{1.0, 1.0}}, {0.0});
  const std::vector<double> xh{1.0, 1.0};
  const std::vector<std::size_t> first{0};
  const auto res = dtransform_piecewise(m, view(xh, 1), 1.0, Price(1.0), FeatureMask(2, first));
  EXPECT_NEAR(res.value, 2.25, 1e-12);
  EXPECT_NEAR(res.maximizer[0], 1.5, 1e-12);
  EXPECT_EQ(res.maximizer[1], 1.0);
  const auto g = oracle::grid_max([](double x1) { return x1 + 1.0 - (x1 - 1.0) * (x1 - 1.0); }, -5.0, 5.0, 1e-3);
  EXPECT_NEAR(res.value, g.value, 1e-3);
}

TEST(PiecewiseTransform, ZeroStepStays) {
  std::mt19937_64 rng(1);
  const oracle::Instance in = oracle::random_piecewise(rng, 5, 3, 3);
  const auto& m = *in.model.get_if<PiecewiseLinearModel>();
  for (std::size_t i = 0; i < in.data.size(); ++i) {
    const auto res = dtransform_piecewise(m, in.data.sample(i), 0.0, Price(0.7), FeatureMask::all(3));
    EXPECT_EQ(res.value, 0.0);
    EXPECT_FALSE(res.moved);
    EXPECT_TRUE(std::equal(res.maximizer.begin(), res.maximizer.end(), in.data.sample(i).x.begin()));
  }
}

TEST(PiecewiseTransform, MatchesOracleAcrossRandomInstances) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 40; ++trial) {
    const oracle::Instance in = oracle::random_piecewise(rng, 6, 4, 3);
    const auto& m = *in.model.get_if<PiecewiseLinearModel>();
    const std::vector<bool> movable{true, false, true, true};
    const std::vector<std::size_t> idx{0, 2, 3};
    const FeatureMask mask(4, idx);
    const double h = u(rng);
    for (std::size_t i = 0; i < in.data.size(); ++i) {
      const auto z = in.data.sample(i);
      const auto res = dtransform_piecewise(m, z, h, Price(in.theta1), mask);
      EXPECT_NEAR(res.value, oracle::piecewise_value(m, z.x, z.y, h, in.theta1, movable), 1e-10);
      // Reported value equals the objective at the reported maximizer.
      const double obj = h * res.maximizer_loss - in.theta1 * numeric::squared_distance(res.maximizer, z.x);
      EXPECT_NEAR(res.value, obj, 1e-9 * std::max(1.0, std::abs(obj)));
      EXPECT_EQ(res.maximizer[1], z.x[1]);
    }
  }
}

TEST(PiecewiseTransform, MonotoneAndConvexInH) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const oracle::Instance in = oracle::random_piecewise(rng, 4, 2, 4);
    const auto& m = *in.model.get_if<PiecewiseLinearModel>();
    for (std::size_t i = 0; i < in.data.size(); ++i) {
      const auto z = in.data.sample(i);
      auto v = [&](double h) { return dtransform_piecewise(m, z, h, Price(in.theta1), kAll2).value; };
      for (double h = 0.0; h < 5.0; h += 0.25) {
        EXPECT_GE(0.5 * (v(h) + v(h + 0.5)) - v(h + 0.25), -1e-9) << "not convex";
        // d value / dh = loss at the maximizer, which is >= loss at z_hat.
        EXPECT_GE(v(h + 0.25) - v(h), 0.25 * loss(in.model, z) - 1e-9);
      }
    }
  }
}

TEST(PiecewiseTransform, MaskContainment) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const oracle::Instance in = oracle::random_piecewise(rng, 4, 3, 3);
    const auto& m = *in.model.get_if<PiecewiseLinearModel>();
    const std::vector<std::size_t> idx{1};
    for (std::size_t i = 0; i < in.data.size(); ++i) {
      const auto z = in.data.sample(i);
      const auto sub = dtransform_piecewise(m, z, 1.5, Price(in.theta1), FeatureMask(3, idx));
      const auto full = dtransform_piecewise(m, z, 1.5, Price(in.theta1), FeatureMask::all(3));
      EXPECT_LE(sub.value, full.value + 1e-12);
      EXPECT_EQ(sub.maximizer[0], z.x[0]);
      EXPECT_EQ(sub.maximizer[2], z.x[2]);
    }
  }
}

TEST(PiecewiseTransform, InfinitePriceStays) {
  const PiecewiseLinearModel m({{1.0, 0.0}}, {0.5});
  const std::vector<double> xh{2.0, 1.0};
  const auto res = dtransform_piecewise(m, view(xh, 1), 3.0, Price::infinity(), kAll2);
  EXPECT_DOUBLE_EQ(res.value, 7.5);
  EXPECT_FALSE(res.moved);
}

TEST(ZeroOneTransform, Examples) {
  const LinearClassifier m({1.0, 0.0}, 0.0);
  const std::vector<double> xh{2.0, 0.0};
  // d* = 4, h = 2, theta1 = 1
  const auto flat = dtransform_zero_one(m, view(xh, 1), 2.0, Price(1.0), kAll2);
  EXPECT_EQ(flat.value, 0.0);
  EXPECT_EQ(flat.maximizer, xh);
  EXPECT_FALSE(flat.tie.has_value());

  const std::vector<double> wrong{-1.0, 0.0};
  for (double h : {0.0, 0.3, 7.0}) {
    const auto res = dtransform_zero_one(m, view(wrong, 1), h, Price(2.5), kAll2);
    EXPECT_EQ(res.value, h);
    EXPECT_EQ(res.maximizer, wrong);
  }

  const auto jump = dtransform_zero_one(m, view(xh, 1), 10.0, Price(1.0), kAll2);
  EXPECT_NEAR(jump.value, 6.0, 1e-12);
  EXPECT_NEAR(jump.maximizer[0], 0.0, 1e-12);
  EXPECT_EQ(jump.maximizer[1], 0.0);
  EXPECT_EQ(jump.maximizer_loss, 1.0);
}

TEST(ZeroOneTransform, MatchesExhaustiveGrid) {
  // h * 1[x1 <= 0] - ||x - x_hat||^2 over a grid; x2 stays at 0.
  const LinearClassifier m({1.0, 0.0}, 0.0);
  const std::vector<double> xh{2.0, 0.0};
  const auto g = oracle::grid_max(
      [](double x1) { return 10.0 * (x1 <= 0.0 ? 1.0 : 0.0) - (x1 - 2.0) * (x1 - 2.0); }, -5.0, 5.0, 1e-3);
  const auto res = dtransform_zero_one(m, view(xh, 1), 10.0, Price(1.0), kAll2);
  EXPECT_NEAR(res.value, g.value, 1e-3);
  EXPECT_NEAR(res.maximizer[0], g.argmax, 1e-3);
}

TEST(ZeroOneTransform, KnifeEdgeTie) {
  const LinearClassifier m({1.0, 0.0}, 0.0);
  const std::vector<double> xh{2.0, 0.0};
  const auto res = dtransform_zero_one(m, view(xh, 1), 4.0, Price(1.0), kAll2);
  EXPECT_NEAR(res.value, 0.0, 1e-12);
  EXPECT_EQ(res.maximizer, xh);
  ASSERT_TRUE(res.tie.has_value());
  EXPECT_EQ(res.tie->low.loss, 0.0);
  EXPECT_EQ(res.tie->high.loss, 1.0);
  EXPECT_NEAR(res.tie->high.cost, 4.0, 1e-12);
  EXPECT_EQ(res.loss_low(), 0.0);
  EXPECT_EQ(res.loss_high(), 1.0);
}

TEST(ZeroOneTransform, MatchesOracleAndIsMonotone) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  for (int trial = 0; trial < 30; ++trial) {
    const oracle::Instance in = oracle::random_zero_one(rng, 10, 3);
    const auto& m = *in.model.get_if<LinearClassifier>();
    const std::vector<bool> movable(3, true);
    for (std::size_t i = 0; i < in.data.size(); ++i) {
      const auto z = in.data.sample(i);
      const double h = u(rng);
      const auto res = dtransform_zero_one(m, z, h, Price(in.theta1), FeatureMask::all(3));
      EXPECT_NEAR(res.value, oracle::zero_one_value(m, z.x, z.y, h, in.theta1, movable), 1e-9);
      EXPECT_LE(res.value, dtransform_zero_one(m, z, h + 0.1, Price(in.theta1), FeatureMask::all(3)).value);
    }
  }
}

TEST(NonlinearTransform, TrivialCases) {
  const LossModel lr(LogisticModel({1.0, -0.5}, 0.2));
  const std::vector<double> xh{0.3, 0.4};
  const auto inf = dtransform_nonlinear(lr, view(xh, 1), 2.0, Price::infinity(), {}, kAll2);
  EXPECT_DOUBLE_EQ(inf.value, 2.0 * loss(lr, view(xh, 1)));
  EXPECT_EQ(inf.maximizer, xh);
  const auto zero = dtransform_nonlinear(lr, view(xh, 1), 0.0, Price(1.0), {}, kAll2);
  EXPECT_EQ(zero.value, 0.0);
  EXPECT_EQ(zero.maximizer, xh);
}

TEST(NonlinearTransform, OneDimensionalLogisticMatchesGrid) {
  const LossModel lr(LogisticModel({1.3}, -0.4));
  InnerOptions opts;
  opts.steps = 2000;
  opts.learning_rate = 1e-2;
  const FeatureMask mask = FeatureMask::all(1);
  for (double x0 : {-1.0, 0.0, 0.8, 2.5}) {
    for (int y : {1, -1}) {
      const std::vector<double> xh{x0};
      const auto res = dtransform_nonlinear(lr, view(xh, y), 1.0, Price(1.0), opts, mask);
      const auto g = oracle::grid_max(
          [&](double x) {
            const std::vector<double> p{x};
            return loss(lr, view(p, y)) - (x - x0) * (x - x0);
          },
          x0 - 10.0, x0 + 10.0, 1e-4);
      EXPECT_NEAR(res.value, g.value, 1e-3) << "x0=" << x0 << " y=" << y;
    }
  }
}

TEST(NonlinearTransform, NeverWorseThanStartAndRespectsMask) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  const LossModel lr(LogisticModel({0.9, -1.4, 0.3}, 0.1));
  const std::vector<std::size_t> idx{0, 2};
  const FeatureMask mask(3, idx);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> xh{n(rng), n(rng), n(rng)};
    const int y = trial % 2 ? 1 : -1;
    const auto res = dtransform_nonlinear(lr, view(xh, y), 1.5, Price(0.6), {}, mask);
    EXPECT_GE(res.value, 1.5 * loss(lr, view(xh, y)));
    EXPECT_EQ(res.maximizer[1], xh[1]);
  }
}

TEST(Dispatch, RoutesByModel) {
  const SolverOptions opts;
  const std::vector<double> xh{2.0, 0.0};
  const auto pw = dtransform(LossModel(PiecewiseLinearModel({{1.0, 0.0}}, {0.0})), view(xh, 1), 2.0, Price(1.0),
                             kAll2, opts);
  EXPECT_NEAR(pw.value, 5.0, 1e-12);
  const auto zo = dtransform(LossModel(LinearClassifier({1.0, 0.0}, 0.0)), view(xh, 1), 10.0, Price(1.0), kAll2, opts);
  EXPECT_NEAR(zo.value, 6.0, 1e-12);
}
