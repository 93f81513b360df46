#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "jeffreys/aggregating.hpp"
#include "jeffreys/divergence.hpp"
#include "jeffreys/game.hpp"
#include "jeffreys/numeric.hpp"
#include "jeffreys/sceptic.hpp"
#include "jeffreys/strategy.hpp"

namespace jeffreys {

/// A strategy produced an illegal move; the run stops at step().
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::size_t step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct RunOptions {
  /// Record the lower divergence at this alpha when the Sceptic does not
  /// report one itself.
  std::optional<double> alpha;
};

/// |g1 - g2| for scalar games, sqrt of the alpha = 0 divergence for log-loss.
inline double prediction_gap(const Game& game, const Prediction& g1, const Prediction& g2) {
  if (game.is_log_loss()) {
    const double d = alpha_divergence_log_loss(g1.values(), g2.values(), 0.0);
    return std::sqrt(std::max(d, 0.0));
  }
  return std::abs(g1.scalar() - g2.scalar());
}

namespace detail {

template <class F>
void checked_move(std::size_t n, const std::string& who, F&& f) {
  try {
    f();
  } catch (const DomainError& e) {
    throw ProtocolError(n, who + " made an illegal move: " + e.what());
  }
}

}  // namespace detail

/// Runs the protocol for up to N steps. Each step: both Predictors move, then
/// Sceptic (seeing their moves), then Nature (seeing all three).
inline Trace run_protocol(Nature& nature, Predictor& p1, Predictor& p2, Sceptic& sceptic,
                          const Game& game, std::size_t N, std::uint64_t seed,
                          const RunOptions& opts = {}) {
  if (N == 0) throw ConfigError("horizon N must be at least 1");
  Trace trace;
  trace.game = game.descriptor();
  trace.seed = seed;
  trace.steps.reserve(N);

  nature.reset(derive_seed(seed, 1));
  p1.reset(derive_seed(seed, 2));
  p2.reset(derive_seed(seed, 3));
  sceptic.reset(derive_seed(seed, 4));

  CompensatedSum cum1, cum2, cums;
  for (std::size_t n = 1; n <= N; ++n) {
    const History history(trace.steps);
    StepRecord r;
    r.n = n;
    r.gamma1 = p1.predict(n, history);
    detail::checked_move(n, "Predictor 1", [&] { game.validate_prediction(r.gamma1); });
    r.gamma2 = p2.predict(n, history);
    detail::checked_move(n, "Predictor 2", [&] { game.validate_prediction(r.gamma2); });
    r.gamma_sceptic = sceptic.predict(n, r.gamma1, r.gamma2, history);
    detail::checked_move(n, "Sceptic", [&] { game.validate_prediction(r.gamma_sceptic); });

    const auto omega = nature.outcome(n, r.gamma1, r.gamma2, r.gamma_sceptic, history);
    if (!omega) {
      trace.meta.truncated = true;
      trace.meta.warnings.push_back("nature ran out of outcomes after step " + std::to_string(n - 1));
      break;
    }
    r.omega = *omega;
    detail::checked_move(n, "Nature", [&] { game.validate_outcome(r.omega); });

    r.loss1 = game.loss_unchecked(r.omega, r.gamma1);
    r.loss2 = game.loss_unchecked(r.omega, r.gamma2);
    r.loss_sceptic = game.loss_unchecked(r.omega, r.gamma_sceptic);
    cum1 += r.loss1;
    cum2 += r.loss2;
    cums += r.loss_sceptic;
    r.cum1 = cum1.value();
    r.cum2 = cum2.value();
    r.cum_sceptic = cums.value();
    r.gap = prediction_gap(game, r.gamma1, r.gamma2);
    if (auto d = sceptic.divergence_used())
      r.divergence_term = *d;
    else if (opts.alpha)
      r.divergence_term = lower_divergence(game, r.gamma1, r.gamma2, *opts.alpha);

    sceptic.observe(n, r.omega, r.gamma1, r.gamma2, r.gamma_sceptic);
    trace.steps.push_back(std::move(r));
  }

  trace.meta.nature = nature.describe();
  trace.meta.predictor1 = p1.describe();
  trace.meta.predictor2 = p2.describe();
  trace.meta.sceptic = sceptic.describe();
  nature.annotate(trace.meta);
  sceptic.annotate(trace.meta);
  if (!trace.meta.alpha && opts.alpha) trace.meta.alpha = opts.alpha;
  if (trace.meta.truncated && trace.steps.empty())
    throw ConfigError("nature produced no outcomes");
  return trace;
}

// ---------------------------------------------------------------------------
// Verdicts

enum class Verdict { GapVanishes, BeatsP1, BeatsP2, BeatsWorse, Inconclusive };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::GapVanishes: return "gap-vanishes";
    case Verdict::BeatsP1: return "beats-P1";
    case Verdict::BeatsP2: return "beats-P2";
    case Verdict::BeatsWorse: return "beats-worse";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct Thresholds {
  double gap_sum_max = 1.0;
  double loss_gap_min = 10.0;
};

struct DisjunctVerdict {
  std::string statement;  // "eq2", "eq3" or "eq12"
  Verdict verdict = Verdict::Inconclusive;
  std::vector<Verdict> applicable;
};

struct CheckResult {
  std::string name;
  double worst = 0.0;  // smallest slack (largest |deviation| for exact checks)
  double best = 0.0;   // largest slack
  bool pass = false;
  bool exact = false;  // an identity check: pass iff |worst| <= tol
};

struct RunReport {
  std::uint64_t seed = 0;
  std::size_t horizon = 0;
  double cum1 = 0.0;
  double cum2 = 0.0;
  double cum_sceptic = 0.0;
  double gap_sum_sq = 0.0;
  double loss_gap1 = 0.0;  // L^1 - L~
  double loss_gap2 = 0.0;  // L^2 - L~
  Thresholds thresholds;
  std::vector<DisjunctVerdict> verdicts;
  std::vector<CheckResult> checks;
  bool truncated = false;
  std::vector<std::string> warnings;

  bool all_checks_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
  const CheckResult* check(std::string_view name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
  const DisjunctVerdict* verdict(std::string_view statement) const {
    for (const auto& v : verdicts)
      if (v.statement == statement) return &v;
    return nullptr;
  }
};

namespace detail {

// a - b with inf - inf treated as 0 and inf - finite as +inf.
inline double loss_difference(double a, double b) {
  if (a == kInf && b == kInf) return 0.0;
  return a - b;
}

}  // namespace detail

inline RunReport classify_disjuncts(const Trace& trace, const Thresholds& th = {}) {
  RunReport rep;
  rep.seed = trace.seed;
  rep.horizon = trace.steps.size();
  rep.thresholds = th;
  rep.truncated = trace.meta.truncated;
  rep.warnings = trace.meta.warnings;
  CompensatedSum gap2;
  for (const auto& r : trace.steps) gap2 += r.gap * r.gap;
  rep.gap_sum_sq = gap2.value();
  if (!trace.steps.empty()) {
    const auto& last = trace.steps.back();
    rep.cum1 = last.cum1;
    rep.cum2 = last.cum2;
    rep.cum_sceptic = last.cum_sceptic;
  }
  rep.loss_gap1 = detail::loss_difference(rep.cum1, rep.cum_sceptic);
  rep.loss_gap2 = detail::loss_difference(rep.cum2, rep.cum_sceptic);

  const bool vanish = rep.gap_sum_sq <= th.gap_sum_max;
  const bool beat1 = rep.loss_gap1 >= th.loss_gap_min;
  const bool beat2 = rep.loss_gap2 >= th.loss_gap_min;
  const bool beat_worse = std::max(rep.loss_gap1, rep.loss_gap2) >= th.loss_gap_min;

  auto make = [&](std::string name, bool with_worse) {
    DisjunctVerdict v{std::move(name), Verdict::Inconclusive, {}};
    if (vanish) v.applicable.push_back(Verdict::GapVanishes);
    if (with_worse) {
      if (beat_worse) v.applicable.push_back(Verdict::BeatsWorse);
    } else {
      if (beat1) v.applicable.push_back(Verdict::BeatsP1);
      if (beat2) v.applicable.push_back(Verdict::BeatsP2);
    }
    if (!v.applicable.empty()) v.verdict = v.applicable.front();
    return v;
  };
  rep.verdicts.push_back(make("eq2", true));
  rep.verdicts.push_back(make("eq3", false));
  rep.verdicts.push_back(make("eq12", false));
  return rep;
}

// ---------------------------------------------------------------------------
// Checks

inline constexpr double kSlackTol = 1e-9;

/// Regret slack of an aggregating Sceptic recorded in the trace.
inline std::vector<std::vector<double>> aa_regret_slack(const Trace& trace) {
  if (!trace.meta.aggregator) throw ConfigError("check eq8 needs an aggregating Sceptic in the trace");
  const auto& log = *trace.meta.aggregator;
  std::vector<double> agg;
  agg.reserve(trace.steps.size());
  for (const auto& r : trace.steps) agg.push_back(r.loss_sceptic);
  return aa_regret_slack(agg, std::span<const std::vector<double>>(log.expert_losses), log.priors,
                         log.C);
}

/// slack(N) = a L^1 + b L^2 - L~ + eps - ab sum D_n, as a series over N.
inline std::vector<double> level2_inequality_slack(const Trace& trace, double alpha, double epsilon) {
  const double a = (1.0 - alpha) / 2.0;
  const double b = (1.0 + alpha) / 2.0;
  const double ab = (1.0 - alpha * alpha) / 4.0;
  std::vector<double> out;
  out.reserve(trace.steps.size());
  CompensatedSum s(epsilon);
  double stuck = 0.0;  // +-inf once an infinite term appears
  for (const auto& r : trace.steps) {
    if (std::isnan(r.divergence_term))
      throw ConfigError("check eq9 needs divergence_term at step " + std::to_string(r.n));
    if (stuck == 0.0) {
      const double rhs = (a == 0.0 ? 0.0 : a * r.loss1) + (b == 0.0 ? 0.0 : b * r.loss2);
      if (rhs == kInf) {
        stuck = kInf;
      } else if (r.loss_sceptic == kInf || r.divergence_term == kInf) {
        stuck = -kInf;
      } else {
        s += a * r.loss1;
        s += b * r.loss2;
        s += -r.loss_sceptic;
        s += -ab * r.divergence_term;
      }
    }
    out.push_back(stuck != 0.0 ? stuck : s.value());
  }
  return out;
}

inline CheckResult check_eq8(const Trace& trace) {
  CheckResult c{"eq8", kInf, -kInf, true, false};
  for (const auto& row : aa_regret_slack(trace))
    for (double v : row) {
      c.worst = std::min(c.worst, v);
      c.best = std::max(c.best, v);
    }
  c.pass = c.worst >= -kSlackTol;
  return c;
}

inline CheckResult check_eq9(const Trace& trace) {
  if (!trace.meta.alpha || !trace.meta.epsilon)
    throw ConfigError("check eq9 needs a level-2 Sceptic (alpha and epsilon) in the trace");
  CheckResult c{"eq9", kInf, -kInf, true, false};
  for (double v : level2_inequality_slack(trace, *trace.meta.alpha, *trace.meta.epsilon)) {
    c.worst = std::min(c.worst, v);
    c.best = std::max(c.best, v);
  }
  if (trace.steps.empty()) c.worst = c.best = *trace.meta.epsilon;
  c.pass = c.worst >= -kSlackTol;
  return c;
}

/// Recomputes the level-1 ledger from the trace. When every outcome lies
/// outside the open interval between the predictions the ledger is an
/// identity and the check becomes exact.
inline CheckResult check_ledger(const Trace& trace) {
  if (!trace.meta.level1_c) throw ConfigError("check ledger needs a level-1 Sceptic in the trace");
  const Game game(trace.game);
  Level1State state(*trace.meta.level1_c);
  CheckResult c{"ledger", kInf, -kInf, true, true};
  bool areas_ok = true;
  double worst_abs = 0.0;
  for (const auto& r : trace.steps) {
    const auto audit = level1_ledger_update(state, game, r.omega, r.gamma1, r.gamma2, r.gamma_sceptic);
    areas_ok = areas_ok && audit.area >= 0.0;
    c.worst = std::min(c.worst, audit.slack);
    c.best = std::max(c.best, audit.slack);
    worst_abs = std::max(worst_abs, std::abs(audit.slack));
    const double x1 = r.gamma1.scalar(), x2 = r.gamma2.scalar();
    if (r.omega > std::min(x1, x2) && r.omega < std::max(x1, x2)) c.exact = false;
  }
  if (trace.steps.empty()) c.worst = c.best = 0.0;
  c.pass = areas_ok && c.worst >= -kSlackTol && (!c.exact || worst_abs <= kSlackTol);
  return c;
}

/// E[loss(w, g_k) - loss(w, g~)] under the Bernoulli Nature, per step and k.
/// worst is the value of largest magnitude.
inline CheckResult check_martingale_null(const Trace& trace) {
  if (!trace.meta.bernoulli)
    throw ConfigError("check martingale_null needs a Bernoulli Nature in the trace");
  const auto& b = *trace.meta.bernoulli;
  const Game game(trace.game);
  auto expect = [&](const Prediction& g) {
    return b.p * game.loss_unchecked(b.outcome_hi, g) + (1.0 - b.p) * game.loss_unchecked(b.outcome_lo, g);
  };
  CheckResult c{"martingale_null", 0.0, 0.0, true, true};
  for (const auto& r : trace.steps) {
    const double es = expect(r.gamma_sceptic);
    for (const Prediction* g : {&r.gamma1, &r.gamma2}) {
      const double v = expect(*g) - es;
      if (std::abs(v) > std::abs(c.worst)) c.worst = v;
      c.best = std::max(c.best, std::abs(v));
    }
  }
  c.pass = std::abs(c.worst) <= kSlackTol;
  return c;
}

inline const std::set<std::string>& known_checks() {
  static const std::set<std::string> names{"eq8", "eq9", "ledger", "martingale_null"};
  return names;
}

inline CheckResult run_check(const Trace& trace, const std::string& name) {
  if (name == "eq8") return check_eq8(trace);
  if (name == "eq9") return check_eq9(trace);
  if (name == "ledger") return check_ledger(trace);
  if (name == "martingale_null") return check_martingale_null(trace);
  throw ConfigError("unknown check '" + name + "'");
}

inline RunReport verify_run(const Trace& trace, const std::vector<std::string>& checks,
                            const Thresholds& th = {}) {
  RunReport rep = classify_disjuncts(trace, th);
  for (const auto& name : checks) rep.checks.push_back(run_check(trace, name));
  return rep;
}

}  // namespace jeffreys
