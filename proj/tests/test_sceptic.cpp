#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "jeffreys/players.hpp"
#include "jeffreys/sceptic.hpp"

using namespace jeffreys;

namespace {

Prediction dist(double p1) { return Prediction::distribution({1.0 - p1, p1}); }

// Composite Simpson integral of f over [a, b].
double simpson(double a, double b, double c) {
  const int n = 20000;
  const double h = (b - a) / n;
  double s = level1_f(a, c) + level1_f(b, c);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * level1_f(a + i * h, c);
  return s * h / 3.0;
}

}  // namespace

TEST(Level2, SquareLossMidpoint) {
  const auto g = Game::square_loss();
  EXPECT_DOUBLE_EQ(level2_step(g, 0.0, 1.0, {0.0, 1e-3}, 1).scalar(), 0.5);
  EXPECT_DOUBLE_EQ(level2_step(g, 0.0, 1.0, {0.5, 1e-3}, 1).scalar(), 0.75);
}

TEST(Level2, LogLossIdenticalInputs) {
  const auto g = Game::log_loss(2);
  for (double alpha : {-0.8, 0.0, 0.8}) {
    const auto s = level2_step(g, dist(0.5), dist(0.5), {alpha, 1e-3}, 3);
    EXPECT_NEAR(s[0], 0.5, 1e-15);
    EXPECT_NEAR(s[1], 0.5, 1e-15);
  }
}

TEST(Level2, LogLossGeometricMean) {
  const auto g = Game::log_loss(2);
  const auto p = Prediction::distribution({0.8, 0.2}), q = Prediction::distribution({0.2, 0.8});
  const auto m = level2_move(g, p, q, {0.0, 1e-3}, 1);
  EXPECT_NEAR(m.prediction[0], 0.5, 1e-15);
  EXPECT_NEAR(m.prediction[1], 0.5, 1e-15);
  // per-step level-2 inequality holds at both outcomes
  for (double w : {0.0, 1.0}) {
    const double lhs = g.loss(w, m.prediction) + 0.25 * m.divergence;
    const double rhs = 0.5 * g.loss(w, p) + 0.5 * g.loss(w, q);
    EXPECT_LE(lhs, rhs + 1e-12);
  }
}

TEST(Level2, NumericGameStaysBelowTarget) {
  const auto g = Game::quartic_loss(65);
  const Level2Config cfg{0.0, 1e-3};
  for (std::size_t n : {1u, 5u, 20u}) {
    const auto m = level2_move(g, -0.6, 0.8, cfg, n);
    const auto mean = detail::alpha_mean(g.canonical_point(-0.6), g.canonical_point(0.8), 0.0);
    const auto own = g.canonical_point(m.prediction);
    for (std::size_t i = 0; i < own.size(); ++i)
      EXPECT_LE(own[i], mean[i] - 0.25 * m.divergence + cfg.epsilon * std::ldexp(1.0, -static_cast<int>(n)));
  }
}

TEST(Level2, ConfigValidation) {
  EXPECT_THROW((Level2Config{1.0, 1e-3}.validate()), ConfigError);
  EXPECT_THROW((Level2Config{0.0, 0.0}.validate()), ConfigError);
}

TEST(Level1, FunctionShape) {
  const double c = 0.4;
  EXPECT_EQ(level1_f(0.0, c), 0.0);
  EXPECT_DOUBLE_EQ(level1_f(-2.0, c), -level1_f(2.0, c));
  EXPECT_LT(level1_f(1e12, c), c);
  EXPECT_NEAR(level1_F(1.0, c), simpson(0.0, 1.0, c), 1e-12);
  EXPECT_NEAR(level1_F(-3.0, c), simpson(0.0, 3.0, c), 1e-12);
}

TEST(Level1, StepExamples) {
  const auto g = Game::bounded_absolute_loss();
  Level1State s;
  EXPECT_DOUBLE_EQ(level1_step(s, g, 0.2, 0.6).scalar(), 0.4);
  s.D = 1e6;
  EXPECT_NEAR(level1_step(s, g, 0.0, 1.0).scalar(), 0.1, 1e-6);
  // swap predictions and negate D
  s.D = 0.7;
  Level1State t;
  t.D = -0.7;
  EXPECT_NEAR(level1_step(s, g, 0.2, 0.9).scalar(), level1_step(t, g, 0.9, 0.2).scalar(), 1e-15);
}

TEST(Level1, TriangleAreasMatchQuadrature) {
  const double c = 0.4;
  for (double a : {-2.0, -0.3, 0.0, 0.5, 3.0})
    for (double d : {-4.0, -0.6, -0.01, 0.01, 0.7, 5.0}) {
      const double oracle = simpson(a, a + d, c) - level1_f(a, c) * d;
      const double area = level1_triangle_area(a, d, c);
      EXPECT_NEAR(area, oracle, 1e-11) << "a=" << a << " d=" << d;
      EXPECT_GE(area, 0.0);
    }
}

TEST(Ledger, IdenticalPredictionsChangeNothing) {
  const auto g = Game::bounded_absolute_loss();
  Level1State s;
  s.D = 0.3;
  s.ledger_integral = level1_F(0.3, s.c);
  const auto a = level1_ledger_update(s, g, 0.9, 0.4, 0.4, 0.4);
  EXPECT_EQ(a.area, 0.0);
  EXPECT_EQ(s.D, 0.3);
  EXPECT_NEAR(a.bound, level1_F(0.3, s.c), 1e-15);
}

TEST(Ledger, FirstStepFavouringPredictor2) {
  const auto g = Game::bounded_absolute_loss();
  Level1State s;
  const auto own = level1_step(s, g, 0.0, 1.0);
  const auto a = level1_ledger_update(s, g, 1.0, 0.0, 1.0, own);
  EXPECT_DOUBLE_EQ(s.D, 1.0);
  EXPECT_NEAR(a.area, 0.4 * (1.0 - std::log(2.0)), 1e-15);
  EXPECT_NEAR(a.excess, 0.0, 1e-15);  // f(0) * 1
  EXPECT_NEAR(a.slack, 0.0, 1e-15);
  EXPECT_TRUE(a.ok);
}

TEST(Ledger, OutcomeInsideGapGivesStrictSlack) {
  const auto g = Game::bounded_absolute_loss();
  Level1State s;
  const auto own = level1_step(s, g, 0.2, 0.8);
  const auto a = level1_ledger_update(s, g, 0.5, 0.2, 0.8, own);
  EXPECT_GT(a.slack, 0.0);
  EXPECT_TRUE(a.ok);
}

TEST(Ledger, RandomRunHoldsEveryStep) {
  const auto g = Game::bounded_absolute_loss();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Level1State s;
  double prev_triangles = 0.0;
  for (int n = 0; n < 20000; ++n) {
    const double g1 = u(rng), g2 = u(rng), w = u(rng) < 0.5 ? 0.0 : 1.0;
    const auto own = level1_step(s, g, g1, g2);
    const auto a = level1_ledger_update(s, g, w, g1, g2, own);
    ASSERT_TRUE(a.ok) << "n=" << n;
    ASSERT_NEAR(a.slack, 0.0, 1e-9);  // binary outcomes never fall inside the gap
    ASSERT_GE(s.triangle_sum.value(), prev_triangles);
    prev_triangles = s.triangle_sum.value();
  }
}

TEST(Level3, PriorsAndThresholds) {
  const auto p = Level3Sceptic::make_priors(20);
  ASSERT_EQ(p.size(), 40u);
  double s = 0.0;
  for (double v : p) s += v;
  EXPECT_NEAR(s, 1.0 - std::ldexp(1.0, -20), 1e-15);
  EXPECT_EQ(p[0], 0.25);
  EXPECT_EQ(p[1], 0.25);
  EXPECT_EQ(p[2], 0.125);
  EXPECT_EQ(Level3Sceptic::threshold(3), 8.0);
  EXPECT_THROW(Level3Sceptic::make_priors(0), ConfigError);
}

TEST(Level3, RefusesNonMixableGames) {
  const auto g = Game::bounded_absolute_loss();
  EXPECT_THROW(Level3Sceptic(g, std::make_unique<Level1Sceptic>(g), {}), MixabilityViolation);
  const auto q = Game::bounded_square_loss();
  Level3Config cfg;
  cfg.mix = MixabilityParams{3.0, 1.0 / 3.0};
  EXPECT_THROW(Level3Sceptic(q, std::make_unique<Level2Sceptic>(q, Level2Config{}), cfg), MixabilityViolation);
}

TEST(Level3, WithoutSwitchesFollowsTheBase) {
  // Predictors agree, so nobody ever leads by 2^k and the pool is 2k_max
  // copies of the base.
  const auto g = Game::bounded_square_loss();
  Level3Sceptic s(g, std::make_unique<Level2Sceptic>(g, Level2Config{}), {});
  s.reset(1);
  for (std::size_t n = 1; n <= 50; ++n) {
    const auto own = s.predict(n, 0.3, 0.3, {});
    EXPECT_NEAR(own.scalar(), 0.3, 1e-7);
    s.observe(n, n % 2 ? 1.0 : 0.0, 0.3, 0.3, own);
  }
  for (auto t : s.switch_steps()) EXPECT_EQ(t, 0u);
}

TEST(Level3, SingleLevelPoolIsTwoExpertAa) {
  const auto g = Game::bounded_square_loss();
  Level3Config cfg;
  cfg.k_max = 1;
  Level3Sceptic s(g, std::make_unique<Level2Sceptic>(g, Level2Config{}), cfg);
  s.reset(1);
  EXPECT_EQ(s.pool().size(), 2u);
  // P1 = 0.1 loses 0.64 - 0.16 per step against the midpoint at w = 0.9
  std::size_t switched = 0;
  for (std::size_t n = 1; n <= 10; ++n) {
    const auto own = s.predict(n, 0.1, 0.9, {});
    s.observe(n, 0.9, 0.1, 0.9, own);
    if (s.switch_steps()[0] != 0 && switched == 0) switched = n;
  }
  EXPECT_EQ(switched, 5u);  // 5 * 0.48 = 2.4 > 2 first
  EXPECT_EQ(s.switch_steps()[1], 0u);
}

TEST(AggregatingSceptic, UsesExperts) {
  const auto g = Game::log_loss(2);
  std::vector<std::unique_ptr<Predictor>> experts;
  experts.push_back(std::make_unique<ConstantPredictor>(g, dist(0.8)));
  experts.push_back(std::make_unique<ConstantPredictor>(g, dist(0.2)));
  AggregatingSceptic s(g, std::move(experts));
  s.reset(0);
  const auto own = s.predict(1, dist(0.5), dist(0.5), {});
  EXPECT_NEAR(own[1], 0.5, 1e-15);
  s.observe(1, 1.0, dist(0.5), dist(0.5), own);
  const auto next = s.predict(2, dist(0.5), dist(0.5), {});
  EXPECT_NEAR(next[1], (0.5 * 0.8 * 0.8 + 0.5 * 0.2 * 0.2) / (0.5 * 0.8 + 0.5 * 0.2), 1e-12);
}
