#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "jeffreys/io.hpp"
#include "jeffreys/players.hpp"
#include "jeffreys/protocol.hpp"
#include "jeffreys/sceptic.hpp"

using namespace jeffreys;

namespace {

Prediction dist(double p1) { return Prediction::distribution({1.0 - p1, p1}); }

class SpySceptic final : public Sceptic {
 public:
  Prediction predict(std::size_t n, const Prediction& g1, const Prediction& g2, History h) override {
    EXPECT_EQ(h.size(), n - 1);
    seen_before_outcome.push_back(n);
    return 0.5 * (g1.scalar() + g2.scalar());
  }
  void observe(std::size_t n, double, const Prediction&, const Prediction&, const Prediction&) override {
    EXPECT_EQ(seen_before_outcome.back(), n);
  }
  std::string describe() const override { return "spy"; }
  std::vector<std::size_t> seen_before_outcome;
};

class SpyNature final : public Nature {
 public:
  std::optional<double> outcome(std::size_t n, const Prediction& g1, const Prediction& g2,
                                const Prediction& s, History h) override {
    EXPECT_EQ(h.size(), n - 1);
    EXPECT_DOUBLE_EQ(s.scalar(), 0.5 * (g1.scalar() + g2.scalar()));
    return 1.0;
  }
  std::string describe() const override { return "spy"; }
};

class BadPredictor final : public Predictor {
 public:
  Prediction predict(std::size_t n, History) override { return n == 3 ? 2.0 : 0.5; }
  std::string describe() const override { return "bad"; }
};

Trace square_level2_run(std::uint64_t seed, double alpha, bool adversarial, std::size_t N) {
  const auto g = Game::square_loss();
  NoisyTargetPredictor p1(g, 0.5, 0.3, 0.0), p2(g, 0.2, 0.3, 0.0);
  Level2Sceptic s(g, {alpha, 1e-3});
  std::unique_ptr<Nature> nat;
  if (adversarial) nat = std::make_unique<AdversarialGreedyNature>(g, linspace(-1.0, 2.0, 11));
  else nat = std::make_unique<UniformNature>(-1.0, 2.0);
  return run_protocol(*nat, p1, p2, s, g, N, seed);
}

}  // namespace

TEST(RunProtocol, SingleStepConstants) {
  const auto g = Game::bounded_square_loss();
  ConstantNature nat(1.0);
  ConstantPredictor p1(g, 0.2), p2(g, 0.6);
  Level2Sceptic s(g, {});
  const auto t = run_protocol(nat, p1, p2, s, g, 1, 7);
  ASSERT_EQ(t.steps.size(), 1u);
  const auto& r = t.steps[0];
  EXPECT_DOUBLE_EQ(r.loss1, 0.64);
  EXPECT_DOUBLE_EQ(r.loss2, 0.16);
  EXPECT_DOUBLE_EQ(r.gamma_sceptic.scalar(), 0.4);
  EXPECT_DOUBLE_EQ(r.loss_sceptic, 0.36);
  EXPECT_DOUBLE_EQ(r.gap, 0.4);
  EXPECT_NEAR(r.divergence_term, 0.16, 1e-15);
}

TEST(RunProtocol, MidpointCumulativeLosses) {
  const auto g = Game::square_loss();
  ConstantNature nat(1.0);
  ConstantPredictor p1(g, 0.0), p2(g, 1.0);
  Level2Sceptic s(g, {});
  const auto t = run_protocol(nat, p1, p2, s, g, 3, 0);
  EXPECT_DOUBLE_EQ(t.steps.back().cum1, 3.0);
  EXPECT_DOUBLE_EQ(t.steps.back().cum2, 0.0);
  EXPECT_DOUBLE_EQ(t.steps.back().cum_sceptic, 0.75);
}

TEST(RunProtocol, Deterministic) {
  const auto a = trace_csv(square_level2_run(42, 0.0, false, 500));
  const auto b = trace_csv(square_level2_run(42, 0.0, false, 500));
  const auto c = trace_csv(square_level2_run(43, 0.0, false, 500));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(RunProtocol, MoveOrderIsolation) {
  const auto g = Game::bounded_square_loss();
  SpyNature nat;
  ConstantPredictor p1(g, 0.0), p2(g, 1.0);
  SpySceptic s;
  const auto t = run_protocol(nat, p1, p2, s, g, 5, 0);
  EXPECT_EQ(s.seen_before_outcome.size(), 5u);
  EXPECT_EQ(t.steps.size(), 5u);
}

TEST(RunProtocol, IllegalMoveReportsStep) {
  const auto g = Game::bounded_square_loss();
  ConstantNature nat(1.0);
  BadPredictor p1;
  ConstantPredictor p2(g, 1.0);
  Level2Sceptic s(g, {});
  try {
    run_protocol(nat, p1, p2, s, g, 10, 0);
    FAIL() << "expected ProtocolError";
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.step(), 3u);
  }
  ConstantNature bad_nature(1.5);
  BadPredictor unused;
  ConstantPredictor q1(g, 0.0);
  EXPECT_THROW(run_protocol(bad_nature, q1, p2, s, g, 2, 0), ProtocolError);
}

TEST(RunProtocol, ReplayExhaustionTruncates) {
  const auto g = Game::bounded_square_loss();
  ReplayNature nat({0.0, 1.0, 1.0});
  ConstantPredictor p1(g, 0.0), p2(g, 1.0);
  Level2Sceptic s(g, {});
  const auto t = run_protocol(nat, p1, p2, s, g, 10, 0);
  EXPECT_EQ(t.steps.size(), 3u);
  EXPECT_TRUE(t.meta.truncated);
  EXPECT_FALSE(t.meta.warnings.empty());
}

TEST(RunProtocol, PrefixSums) {
  const auto t = square_level2_run(5, 0.3, false, 1000);
  CompensatedSum a, b, c;
  for (const auto& r : t.steps) {
    a += r.loss1;
    b += r.loss2;
    c += r.loss_sceptic;
    EXPECT_EQ(r.cum1, a.value());
    EXPECT_EQ(r.cum2, b.value());
    EXPECT_EQ(r.cum_sceptic, c.value());
    EXPECT_GE(r.gap, 0.0);
  }
}

TEST(Nature, Strategies) {
  const auto g = Game::bounded_square_loss();
  BernoulliNature b1(0.5), b2(0.5);
  b1.reset(9);
  b2.reset(9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(b1.outcome(1, 0.0, 0.0, 0.0, {}), b2.outcome(1, 0.0, 0.0, 0.0, {}));
  ConstantNature c(1.0);
  EXPECT_EQ(*c.outcome(4, 0.0, 0.0, 0.0, {}), 1.0);
  AdversarialGreedyNature adv(g, {0.0, 1.0});
  EXPECT_EQ(*adv.outcome(1, 0.0, 1.0, 0.5, {}), 0.0);  // tie
  EXPECT_EQ(*adv.outcome(1, 0.0, 1.0, 0.3, {}), 1.0);  // farther from 0.3
}

TEST(Predictors, Strategies) {
  const auto g = Game::bounded_square_loss();
  ConstantPredictor c(g, 0.3);
  EXPECT_EQ(c.predict(10, {}).scalar(), 0.3);
  RunningMeanPredictor rm(g, 0.7);
  EXPECT_EQ(rm.predict(1, {}).scalar(), 0.7);
  std::vector<StepRecord> h(2);
  h[0].omega = 0.0;
  h[1].omega = 1.0;
  EXPECT_EQ(rm.predict(3, h).scalar(), 0.5);
  DriftPredictor d(g, 0.9, 0.1);
  EXPECT_EQ(d.predict(3, {}).scalar(), 1.0);  // clamped
  const auto ll = Game::log_loss(2);
  ConstantPredictor cl(ll, dist(0.25));
  EXPECT_EQ(cl.predict(1, {})[1], 0.25);
  DriftPredictor dl(ll, 0.5, 1.0);
  EXPECT_GT(dl.predict(5, {})[0], 0.0);  // margin keeps losses finite
}

// Two independent copies with sigma_n = 1/n: E gap^2 = 2/n^2, so the mean
// of sum gap^2 is about pi^2/3; the bound is 10 sum 1/n^2.
TEST(Predictors, NoisyTargetGapIsSquareSummable) {
  const auto g = Game::square_loss();
  double bound = 0.0;
  for (int n = 1; n <= 10000; ++n) bound += 10.0 / (double(n) * n);
  double mean = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    NoisyTargetPredictor a(g, 0.5, 1.0, 1.0), b(g, 0.5, 1.0, 1.0);
    a.reset(derive_seed(seed, 1));
    b.reset(derive_seed(seed, 2));
    double s = 0.0;
    for (std::size_t n = 1; n <= 10000; ++n) {
      const double d = a.predict(n, {}).scalar() - b.predict(n, {}).scalar();
      s += d * d;
    }
    mean += s / 100.0;
  }
  EXPECT_LT(mean, bound);
  EXPECT_NEAR(mean, 2.0 * M_PI * M_PI / 6.0, 1.0);
}

TEST(Classify, Verdicts) {
  const auto g = Game::bounded_square_loss();
  {
    ConstantNature nat(0.4);
    ConstantPredictor p1(g, 0.3), p2(g, 0.3);
    Level2Sceptic s(g, {});
    const auto rep = classify_disjuncts(run_protocol(nat, p1, p2, s, g, 100, 0));
    EXPECT_EQ(rep.verdict("eq2")->verdict, Verdict::GapVanishes);
    EXPECT_EQ(rep.verdict("eq12")->verdict, Verdict::GapVanishes);
  }
  {
    ConstantNature nat(0.9);
    ConstantPredictor p1(g, 0.1), p2(g, 0.9);
    Level2Sceptic s(g, {});
    const auto rep = classify_disjuncts(run_protocol(nat, p1, p2, s, g, 100, 0));
    EXPECT_EQ(rep.verdict("eq3")->verdict, Verdict::BeatsP1);
    EXPECT_EQ(rep.verdict("eq2")->verdict, Verdict::BeatsWorse);
  }
  {
    BernoulliNature nat(0.5);
    ConstantPredictor p1(g, 0.0), p2(g, 1.0);
    Level2Sceptic s(g, {});
    const auto rep = classify_disjuncts(run_protocol(nat, p1, p2, s, g, 5, 0));
    EXPECT_EQ(rep.verdict("eq2")->verdict, Verdict::Inconclusive);
    EXPECT_EQ(rep.verdict("eq12")->verdict, Verdict::Inconclusive);
  }
}

TEST(Classify, InfiniteLossGapCountsAsBeating) {
  Trace t;
  t.game = Game::log_loss(2).descriptor();
  StepRecord r;
  r.gap = 5.0;
  r.cum1 = kInf;
  r.cum2 = 1.0;
  r.cum_sceptic = 1.0;
  t.steps.push_back(r);
  const auto rep = classify_disjuncts(t);
  EXPECT_EQ(rep.verdict("eq12")->verdict, Verdict::BeatsP1);
}

TEST(Verify, MissingMetadataNamesTheCheck) {
  const auto t = square_level2_run(1, 0.0, false, 10);
  for (const char* name : {"eq8", "ledger", "martingale_null"}) {
    try {
      verify_run(t, {name});
      FAIL() << name;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(name), std::string::npos);
    }
  }
  EXPECT_THROW(verify_run(t, {"nonsense"}), ConfigError);
}

TEST(Verify, SquareLossLevel2SlackIsEpsilon) {
  for (double alpha : {-0.8, 0.0, 0.8}) {
    const auto t = square_level2_run(3, alpha, false, 2000);
    const auto series = level2_inequality_slack(t, alpha, 1e-3);
    for (double v : series) ASSERT_NEAR(v, 1e-3, 1e-12);
    EXPECT_TRUE(verify_run(t, {"eq9"}).all_checks_pass());
  }
}

TEST(Verify, Level2SlackOfEmptyTraceIsEpsilon) {
  Trace t;
  t.meta.alpha = 0.0;
  t.meta.epsilon = 0.01;
  EXPECT_EQ(check_eq9(t).worst, 0.01);
}

TEST(Verify, AdversarialFuzzKeepsLevel2Slack) {
  double worst = kInf;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const double alpha = seed % 3 == 0 ? -0.8 : (seed % 3 == 1 ? 0.0 : 0.8);
    worst = std::min(worst, check_eq9(square_level2_run(seed, alpha, true, 50)).worst);
  }
  EXPECT_GE(worst, -1e-9);
}

TEST(Verify, NumericLevel2Slack) {
  const auto g = Game::quartic_loss(65);
  NoisyTargetPredictor p1(g, -0.3, 0.3, 0.0), p2(g, 0.4, 0.3, 0.0);
  Level2Sceptic s(g, {0.3, 1e-3});
  AdversarialGreedyNature nat(g, linspace(-1.0, 1.0, 9));
  const auto rep = verify_run(run_protocol(nat, p1, p2, s, g, 20, 1), {"eq9"});
  EXPECT_TRUE(rep.all_checks_pass()) << rep.checks[0].worst;
}

TEST(Verify, LogLossAggregatingRegret) {
  const auto g = Game::log_loss(2);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::vector<std::unique_ptr<Predictor>> experts;
    for (int k = 0; k < 6; ++k) experts.push_back(std::make_unique<NoisyTargetPredictor>(g, 0.1 + 0.15 * k, 0.05, 0.0));
    AggregatingSceptic s(g, std::move(experts));
    BernoulliNature nat(0.35);
    ConstantPredictor p1(g, dist(0.3)), p2(g, dist(0.6));
    const auto rep = verify_run(run_protocol(nat, p1, p2, s, g, 500, seed), {"eq8"});
    EXPECT_TRUE(rep.all_checks_pass()) << rep.checks[0].worst;
  }
}

TEST(Verify, OppositeConstantsMartingaleIsExactlyZero) {
  const auto g = Game::bounded_absolute_loss();
  BernoulliNature nat(0.5);
  ConstantPredictor p1(g, 0.0), p2(g, 1.0);
  Level1Sceptic s(g);
  const auto rep = verify_run(run_protocol(nat, p1, p2, s, g, 5000, 2), {"martingale_null", "ledger"});
  EXPECT_EQ(rep.check("martingale_null")->worst, 0.0);
  EXPECT_TRUE(rep.check("ledger")->exact);
  EXPECT_TRUE(rep.all_checks_pass());
}

TEST(Verify, LedgerOnMixedOutcomes) {
  const auto g = Game::bounded_absolute_loss();
  UniformNature nat(0.0, 1.0);
  NoisyTargetPredictor p1(g, 0.3, 0.2, 0.0);
  RunningMeanPredictor p2(g, 0.5);
  Level1Sceptic s(g);
  const auto rep = verify_run(run_protocol(nat, p1, p2, s, g, 5000, 4), {"ledger"});
  EXPECT_FALSE(rep.check("ledger")->exact);
  EXPECT_TRUE(rep.all_checks_pass());
}

TEST(Serialize, CsvFormat) {
  const auto g = Game::log_loss(2);
  ConstantNature nat(1.0);
  ConstantPredictor p1(g, dist(0.25)), p2(g, dist(0.75));
  Level2Sceptic s(g, {});
  const auto csv = trace_csv(run_protocol(nat, p1, p2, s, g, 2, 0));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kTraceHeader);
  EXPECT_NE(csv.find("\n1,0.75;0.25,0.25;0.75,0.5;0.5,1,"), std::string::npos);
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Serialize, ReportJson) {
  const auto t = square_level2_run(1, 0.0, false, 10);
  const auto j = to_json(verify_run(t, {"eq9"}));
  EXPECT_EQ(j["horizon"], 10);
  EXPECT_TRUE(j["checks"]["eq9"]["pass"].get<bool>());
  EXPECT_TRUE(j["verdicts"].contains("eq12"));
  EXPECT_EQ(number_json(kInf), "inf");
}
