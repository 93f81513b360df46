#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "jeffreys/aggregating.hpp"
#include "jeffreys/divergence.hpp"
#include "jeffreys/game.hpp"
#include "jeffreys/numeric.hpp"
#include "jeffreys/strategy.hpp"

namespace jeffreys {

// ---------------------------------------------------------------------------
// Level 2: play a canonical point below the alpha-mean shifted by the lower
// divergence, with an eps * 2^-n allowance per step.

struct Level2Config {
  double alpha = 0.0;
  double epsilon = 1e-3;

  void validate() const {
    if (!(alpha > -1.0 && alpha < 1.0)) throw ConfigError("level-2 alpha must lie in (-1, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("level-2 epsilon must be positive");
  }
};

/// The numeric search found no canonical point below the level-2 target:
/// the divergence estimate was too large for the step's allowance.
class DivergenceOverestimate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Level2Move {
  Prediction prediction;
  double divergence = 0.0;  // lower alpha-divergence of (g1, g2) used for the target
};

/// Lower alpha-divergence by closed form where one exists, else by bisection.
inline double lower_divergence(const Game& game, const Prediction& g1, const Prediction& g2,
                               double alpha) {
  if (has_closed_form_divergence(game))
    return closed_form_divergence(game, g1, g2, alpha, DivergenceSide::Lower).value;
  return lower_alpha_divergence_numeric(game, g1, g2, alpha).value;
}

inline Level2Move level2_move(const Game& game, const Prediction& g1, const Prediction& g2,
                              const Level2Config& cfg, std::size_t n) {
  cfg.validate();
  const double a = (1.0 - cfg.alpha) / 2.0;
  const double b = (1.0 + cfg.alpha) / 2.0;

  if (game.kind() == GameKind::SquareLoss || game.kind() == GameKind::BoundedSquareLoss) {
    game.validate_prediction(g1);
    game.validate_prediction(g2);
    const double x = a * g1.scalar() + b * g2.scalar();
    return {x, alpha_divergence_square_loss(g1.scalar(), g2.scalar(), cfg.alpha)};
  }

  if (game.is_log_loss()) {
    game.validate_prediction(g1);
    game.validate_prediction(g2);
    std::vector<double> p(g1.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = (g1[i] > 0.0 && g2[i] > 0.0) ? std::pow(g1[i], a) * std::pow(g2[i], b) : 0.0;
      total += p[i];
    }
    if (!(total > 0.0))  // disjoint supports: infinite divergence, any move is fine
      return {game.mix(0.5, g1, g2), kInf};
    for (double& v : p) v /= total;
    return {Prediction::distribution(std::move(p)), -divergence_scale(cfg.alpha) * std::log(total)};
  }

  const auto res = lower_alpha_divergence_numeric(game, g1, g2, cfg.alpha);
  if (!res.bracketed)
    throw DivergenceOverestimate("lower divergence is unbounded; no level-2 target exists");
  const auto mean = detail::alpha_mean(game.canonical_point(g1), game.canonical_point(g2), cfg.alpha);
  const auto target = detail::shifted(mean, res.shift);
  const auto outcomes = game.outcome_grid();
  auto objective = [&](double x) {
    double worst = -kInf;
    for (std::size_t i = 0; i < outcomes.size(); ++i)
      worst = std::max(worst, detail::super_term(game.parameter_loss(outcomes[i], x), target[i]));
    return worst;
  };
  const auto best = grid_minimize(game.prediction_grid(), objective);
  const double allowance = cfg.epsilon * std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(n, 1000)));
  if (!(best.value <= allowance))
    throw DivergenceOverestimate("level-2 target missed by " + std::to_string(best.value) +
                                 " at step " + std::to_string(n));
  return {game.from_parameter(best.argmin), res.value};
}

inline Prediction level2_step(const Game& game, const Prediction& g1, const Prediction& g2,
                              const Level2Config& cfg, std::size_t n) {
  return level2_move(game, g1, g2, cfg, n).prediction;
}

class Level2Sceptic final : public Sceptic {
 public:
  Level2Sceptic(Game game, Level2Config cfg) : game_(std::move(game)), cfg_(cfg) { cfg_.validate(); }

  Prediction predict(std::size_t n, const Prediction& g1, const Prediction& g2, History) override {
    auto move = level2_move(game_, g1, g2, cfg_, n);
    last_divergence_ = move.divergence;
    return std::move(move.prediction);
  }
  std::optional<double> divergence_used() const override { return last_divergence_; }
  void annotate(TraceMeta& meta) const override {
    meta.alpha = cfg_.alpha;
    meta.epsilon = cfg_.epsilon;
  }
  std::string describe() const override {
    return "level2(alpha=" + std::to_string(cfg_.alpha) + ", epsilon=" + std::to_string(cfg_.epsilon) + ")";
  }
  const Level2Config& config() const { return cfg_; }

 private:
  Game game_;
  Level2Config cfg_;
  std::optional<double> last_divergence_;
};

// ---------------------------------------------------------------------------
// Level 1: lean towards Predictor 1 by f(D) where D = L^1 - L^2, and keep the
// ledger  L~ - (L^1 + L^2)/2 = int_0^D f - sum A_n.

/// f(x) = c x / (1 + |x|): odd, increasing, concave on [0, inf), sup = c < 1/2.
inline double level1_f(double x, double c) { return c * x / (1.0 + std::abs(x)); }

namespace detail {

// u - ln(1 + u) for u > -1, accurate near 0.
inline double u_minus_log1p(double u) {
  if (std::abs(u) < 0.1) {
    double term = u * u;
    double s = 0.0;
    for (int k = 2; k < 40; ++k) {
      const double t = term / k;
      s += (k % 2 == 0) ? t : -t;
      if (std::abs(t) < 1e-18 * std::abs(s)) break;
      term *= u;
    }
    return std::max(s, 0.0);
  }
  return std::max(u - std::log1p(u), 0.0);
}

}  // namespace detail

/// int_0^x f = c (|x| - ln(1 + |x|)).
inline double level1_F(double x, double c) { return c * detail::u_minus_log1p(std::abs(x)); }

/// int_a^{a+delta} f - f(a) * delta: the curvilinear triangle between f and
/// its value at the left end. Each piece is non-negative by construction.
inline double level1_triangle_area(double a, double delta, double c) {
  if (a < 0.0) return level1_triangle_area(-a, -delta, c);
  const double b = a + delta;
  if (b >= 0.0) return c * detail::u_minus_log1p(delta / (1.0 + a));
  const double nb = -b;
  return c * detail::u_minus_log1p(-a / (1.0 + a)) + c * detail::u_minus_log1p(nb) +
         level1_f(a, c) * nb;
}

struct Level1State {
  explicit Level1State(double c = 0.4) : c(c) {
    if (!(c > 0.0 && c < 0.5)) throw ConfigError("level-1 scale c must lie in (0, 1/2)");
  }

  double D = 0.0;  // L^1 - L^2 so far
  double c = 0.4;
  double ledger_integral = 0.0;  // int_0^D f
  CompensatedSum triangle_sum;   // sum of A_n
  CompensatedSum excess;         // L~ - (L^1 + L^2)/2
  std::size_t steps = 0;

  double bound() const { return ledger_integral - triangle_sum.value(); }
};

struct Level1Audit {
  std::size_t n = 0;
  double d_increment = 0.0;  // loss1 - loss2
  double area = 0.0;         // A_n
  double bound = 0.0;        // int_0^{D_n} f - sum A
  double excess = 0.0;       // L~_n - Lbar_n
  double slack = 0.0;        // bound - excess, >= 0 for convex losses
  bool ok = true;
};

/// (1/2 + f(D)) g1 + (1/2 - f(D)) g2.
inline Prediction level1_step(const Level1State& state, const Game& game, const Prediction& g1,
                              const Prediction& g2) {
  return game.mix(0.5 + level1_f(state.D, state.c), g1, g2);
}

inline Level1Audit level1_ledger_update(Level1State& state, const Game& game, double omega,
                                        const Prediction& g1, const Prediction& g2,
                                        const Prediction& own, double tol = 1e-9) {
  const double l1 = game.loss(omega, g1);
  const double l2 = game.loss(omega, g2);
  const double ls = game.loss(omega, own);
  const double delta = l1 - l2;
  if (!std::isfinite(delta) || !std::isfinite(ls))
    throw DomainError("level-1 ledger needs finite losses");

  Level1Audit audit;
  audit.n = ++state.steps;
  audit.d_increment = delta;
  audit.area = level1_triangle_area(state.D, delta, state.c);
  state.D += delta;
  state.ledger_integral = level1_F(state.D, state.c);
  state.triangle_sum += audit.area;
  state.excess += ls - 0.5 * (l1 + l2);
  audit.bound = state.bound();
  audit.excess = state.excess.value();
  audit.slack = audit.bound - audit.excess;
  audit.ok = audit.area >= 0.0 && audit.slack >= -tol;
  return audit;
}

class Level1Sceptic final : public Sceptic {
 public:
  Level1Sceptic(Game game, double c = 0.4) : game_(std::move(game)), state_(c), c_(c) {}

  void reset(std::uint64_t) override {
    state_ = Level1State(c_);
    audits_.clear();
  }
  Prediction predict(std::size_t, const Prediction& g1, const Prediction& g2, History) override {
    return level1_step(state_, game_, g1, g2);
  }
  void observe(std::size_t, double omega, const Prediction& g1, const Prediction& g2,
               const Prediction& own) override {
    audits_.push_back(level1_ledger_update(state_, game_, omega, g1, g2, own));
  }
  void annotate(TraceMeta& meta) const override { meta.level1_c = c_; }
  std::string describe() const override { return "level1(c=" + std::to_string(c_) + ")"; }

  const Level1State& state() const { return state_; }
  const std::vector<Level1Audit>& audits() const { return audits_; }

 private:
  Game game_;
  Level1State state_;
  double c_;
  std::vector<Level1Audit> audits_;
};

// ---------------------------------------------------------------------------
// Aggregating-Algorithm Sceptics.

namespace detail {

inline MixabilityParams resolve_mixability(const Game& game, std::optional<MixabilityParams> mix) {
  if (!mix) mix = default_mixability(game.kind());
  if (!mix)
    throw MixabilityViolation("no mixability constants are known for game '" +
                              std::string(to_string(game.kind())) + "'");
  if (!(mix->eta > 0.0) || !(mix->C > 0.0)) throw ConfigError("eta and C must be positive");
  if (game.one_parameter()) {
    GameDescriptor coarse = game.descriptor();
    coarse.grid_size = 65;
    if (!check_perfectly_mixable(Game(coarse), mix->eta, 1e-9))
      throw MixabilityViolation("game '" + std::string(to_string(game.kind())) +
                                "' is not perfectly mixable at eta = " + std::to_string(mix->eta));
  }
  return *mix;
}

}  // namespace detail

/// AA over a fixed list of Predictor strategies acting as experts.
class AggregatingSceptic final : public Sceptic {
 public:
  AggregatingSceptic(Game game, std::vector<std::unique_ptr<Predictor>> experts,
                     std::optional<std::vector<double>> priors = std::nullopt,
                     std::optional<MixabilityParams> mix = std::nullopt, double tol = 1e-9)
      : game_(std::move(game)),
        experts_(std::move(experts)),
        priors_(priors ? *priors
                       : std::vector<double>(experts_.size(), 1.0 / static_cast<double>(experts_.size()))),
        mix_(detail::resolve_mixability(game_, mix)),
        pool_(priors_),
        tol_(tol) {
    if (priors_.size() != experts_.size()) throw ConfigError("one prior per expert required");
    log_.priors = priors_;
    log_.eta = mix_.eta;
    log_.C = mix_.C;
  }

  void reset(std::uint64_t seed) override {
    for (std::size_t k = 0; k < experts_.size(); ++k) experts_[k]->reset(derive_seed(seed, 100 + k));
    pool_ = ExpertPool(priors_);
    log_.expert_losses.clear();
  }
  Prediction predict(std::size_t n, const Prediction&, const Prediction&, History history) override {
    preds_.clear();
    for (auto& e : experts_) preds_.push_back(e->predict(n, history));
    return aa_step(pool_, preds_, game_, mix_.eta, tol_);
  }
  void observe(std::size_t, double omega, const Prediction&, const Prediction&,
               const Prediction&) override {
    std::vector<double> losses(preds_.size());
    for (std::size_t k = 0; k < preds_.size(); ++k) losses[k] = game_.loss(omega, preds_[k]);
    aa_observe(pool_, omega, losses, mix_.eta);
    log_.expert_losses.push_back(std::move(losses));
  }
  void annotate(TraceMeta& meta) const override { meta.aggregator = log_; }
  std::string describe() const override {
    return "aa(experts=" + std::to_string(experts_.size()) + ", eta=" + std::to_string(mix_.eta) + ")";
  }
  const ExpertPool& pool() const { return pool_; }

 private:
  Game game_;
  std::vector<std::unique_ptr<Predictor>> experts_;
  std::vector<double> priors_;
  MixabilityParams mix_;
  ExpertPool pool_;
  double tol_;
  std::vector<Prediction> preds_;
  AggregatorLog log_;
};

// ---------------------------------------------------------------------------
// Level 3: AA over threshold experts. Expert (k, j) copies the base Sceptic
// until L^j - L~base exceeds 2^k, then copies Predictor j for good.

struct Level3Config {
  std::size_t k_max = 20;
  std::optional<MixabilityParams> mix;  // default per game
  double tol = 1e-9;
};

class Level3Sceptic final : public Sceptic {
 public:
  Level3Sceptic(Game game, std::unique_ptr<Sceptic> base, Level3Config cfg)
      : game_(std::move(game)), base_(std::move(base)), cfg_(cfg),
        mix_(detail::resolve_mixability(game_, cfg.mix)), pool_(make_priors(cfg.k_max)) {
    if (!base_) throw ConfigError("level-3 lift needs a base Sceptic");
    reset_state();
  }

  /// Expert index 2(k-1) + (j-1) for k = 1..k_max, j = 1, 2.
  static std::vector<double> make_priors(std::size_t k_max) {
    if (k_max == 0) throw ConfigError("level-3 k_max must be positive");
    std::vector<double> p;
    for (std::size_t k = 1; k <= k_max; ++k) {
      const double w = std::ldexp(1.0, -static_cast<int>(k) - 1);
      p.push_back(w);
      p.push_back(w);
    }
    return p;
  }
  static double threshold(std::size_t k) { return std::ldexp(1.0, static_cast<int>(k)); }

  void reset(std::uint64_t seed) override {
    base_->reset(derive_seed(seed, 7));
    reset_state();
  }

  Prediction predict(std::size_t n, const Prediction& g1, const Prediction& g2,
                     History history) override {
    base_pred_ = base_->predict(n, g1, g2, history);
    preds_.assign(pool_.size(), base_pred_);
    for (std::size_t i = 0; i < preds_.size(); ++i)
      if (switched_at_[i] != 0) preds_[i] = (i % 2 == 0) ? g1 : g2;
    return aa_step(pool_, preds_, game_, mix_.eta, cfg_.tol);
  }

  void observe(std::size_t n, double omega, const Prediction& g1, const Prediction& g2,
               const Prediction&) override {
    std::vector<double> losses(preds_.size());
    for (std::size_t i = 0; i < preds_.size(); ++i) losses[i] = game_.loss(omega, preds_[i]);
    aa_observe(pool_, omega, losses, mix_.eta);
    log_.expert_losses.push_back(std::move(losses));

    base_->observe(n, omega, g1, g2, base_pred_);
    cum1_ += game_.loss(omega, g1);
    cum2_ += game_.loss(omega, g2);
    cum_base_ += game_.loss(omega, base_pred_);
    const double lead1 = cum1_.value() - cum_base_.value();
    const double lead2 = cum2_.value() - cum_base_.value();
    for (std::size_t i = 0; i < switched_at_.size(); ++i) {
      if (switched_at_[i] != 0) continue;
      const double lead = (i % 2 == 0) ? lead1 : lead2;
      if (lead > threshold(i / 2 + 1)) switched_at_[i] = n;
    }
  }

  void annotate(TraceMeta& meta) const override { meta.aggregator = log_; }
  std::string describe() const override {
    return "level3(k_max=" + std::to_string(cfg_.k_max) + ", base=" + base_->describe() + ")";
  }

  /// Step after which each expert switched (0: still copying the base).
  const std::vector<std::size_t>& switch_steps() const { return switched_at_; }
  double base_cumulative_loss() const { return cum_base_.value(); }
  const ExpertPool& pool() const { return pool_; }
  const MixabilityParams& mixability() const { return mix_; }

 private:
  void reset_state() {
    pool_ = ExpertPool(make_priors(cfg_.k_max));
    switched_at_.assign(pool_.size(), 0);
    cum1_ = cum2_ = cum_base_ = CompensatedSum{};
    log_ = AggregatorLog{};
    log_.priors.assign(pool_.priors().begin(), pool_.priors().end());
    log_.eta = mix_.eta;
    log_.C = mix_.C;
  }

  Game game_;
  std::unique_ptr<Sceptic> base_;
  Level3Config cfg_;
  MixabilityParams mix_;
  ExpertPool pool_;
  std::vector<std::size_t> switched_at_;
  CompensatedSum cum1_, cum2_, cum_base_;
  Prediction base_pred_;
  std::vector<Prediction> preds_;
  AggregatorLog log_;
};

inline std::unique_ptr<Sceptic> make_level3_sceptic(const Game& game, std::unique_ptr<Sceptic> base,
                                                    Level3Config cfg = {}) {
  return std::make_unique<Level3Sceptic>(game, std::move(base), cfg);
}

}  // namespace jeffreys
