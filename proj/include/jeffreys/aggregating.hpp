#pragma once

#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "jeffreys/game.hpp"
#include "jeffreys/numeric.hpp"

namespace jeffreys {

/// The substitution step could not find a prediction whose losses are
/// dominated by the generalized prediction: eta is too large for the game,
/// or the game is not perfectly mixable at all.
class MixabilityViolation : public std::runtime_error {
 public:
  explicit MixabilityViolation(const std::string& what)
      : std::runtime_error("MixabilityViolation: " + what) {}
};

/// Every expert in the pool has been eliminated by an infinite loss.
class PoolCollapse : public std::runtime_error {
 public:
  PoolCollapse() : std::runtime_error("PoolCollapse: all expert weights are zero") {}
};

struct MixabilityParams {
  double eta = 1.0;  // learning rate
  double C = 1.0;    // regret constant, C = 1 / eta
};

/// Learning rate and regret constant for the bundled perfectly mixable games.
inline std::optional<MixabilityParams> default_mixability(GameKind kind) {
  switch (kind) {
    case GameKind::LogLossFinite: return MixabilityParams{1.0, 1.0};
    case GameKind::BoundedSquareLoss: return MixabilityParams{2.0, 0.5};
    default: return std::nullopt;
  }
}

class ExpertPool {
 public:
  explicit ExpertPool(std::vector<double> priors) : priors_(std::move(priors)) {
    if (priors_.empty()) throw DomainError("expert pool is empty");
    double total = 0.0;
    for (double p : priors_) {
      if (!(p > 0.0)) throw DomainError("expert priors must be strictly positive");
      total += p;
    }
    if (total > 1.0 + 1e-12) throw DomainError("expert priors must sum to at most 1");
    log_weights_.reserve(priors_.size());
    for (double p : priors_) log_weights_.push_back(std::log(p));
  }

  static ExpertPool uniform(std::size_t n) {
    return ExpertPool(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  std::size_t size() const { return priors_.size(); }
  std::span<const double> priors() const { return priors_; }
  std::span<const double> log_weights() const { return log_weights_; }

  /// 1 - sum of priors (positive for truncated infinite pools).
  double prior_deficiency() const {
    return 1.0 - std::accumulate(priors_.begin(), priors_.end(), 0.0);
  }

  std::vector<double> normalized_log_weights() const {
    const double z = log_sum_exp(log_weights_);
    if (z == -kInf) throw PoolCollapse();
    std::vector<double> out(log_weights_.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = log_weights_[k] - z;
    return out;
  }

  std::vector<double> normalized_weights() const {
    auto lw = normalized_log_weights();
    for (double& w : lw) w = std::exp(w);
    return lw;
  }

  void add_log_weight(std::size_t k, double delta) { log_weights_.at(k) += delta; }

 private:
  std::vector<double> priors_;
  std::vector<double> log_weights_;
};

/// g(w) = -(1/eta) ln sum_k w_k exp(-eta * lambda_k(w)), w normalized.
inline std::vector<double> generalized_prediction(const ExpertPool& pool,
                                                  std::span<const CanonicalPoint> points,
                                                  double eta) {
  if (points.size() != pool.size()) throw DomainError("one canonical point per expert required");
  if (!(eta > 0)) throw DomainError("eta must be positive");
  const auto lw = pool.normalized_log_weights();
  const std::size_t dim = points.front().size();
  std::vector<double> g(dim);
  std::vector<double> terms(pool.size());
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t k = 0; k < pool.size(); ++k) {
      const double lam = points[k][i];
      terms[k] = (lw[k] == -kInf || lam == kInf) ? -kInf : lw[k] - eta * lam;
    }
    g[i] = -log_sum_exp(terms) / eta;
  }
  return g;
}

/// max_w (loss(w, g) - target(w)) over the outcome grid.
inline double substitution_excess(const Game& game, const Prediction& g,
                                  std::span<const double> target) {
  const auto outcomes = game.outcome_grid();
  double worst = -kInf;
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    worst = std::max(worst, detail::super_term(game.loss_unchecked(outcomes[i], g), target[i]));
  return worst;
}

/// Generic minimax substitution over the prediction grid.
inline Prediction substitute_numeric(const Game& game, std::span<const double> target,
                                     double tol = 1e-9) {
  if (target.size() != game.outcome_grid().size())
    throw DomainError("generalized prediction has wrong dimension");
  if (!game.one_parameter())
    throw DomainError("numeric substitution needs a one-parameter game");
  const auto outcomes = game.outcome_grid();
  auto objective = [&](double x) {
    double worst = -kInf;
    for (std::size_t i = 0; i < outcomes.size(); ++i)
      worst = std::max(worst, detail::super_term(game.parameter_loss(outcomes[i], x), target[i]));
    return worst;
  };
  const auto best = grid_minimize(game.prediction_grid(), objective);
  if (!(best.value <= tol))
    throw MixabilityViolation("best substitute exceeds the generalized prediction by " +
                              std::to_string(best.value));
  return game.from_parameter(best.argmin);
}

/// Maps a generalized prediction back into the prediction space so that
/// loss(w, result) <= g(w) + tol on the outcome grid. Log-loss uses the Bayes
/// normalisation exp(-g) / sum exp(-g).
inline Prediction substitute(const Game& game, std::span<const double> g, double tol = 1e-9) {
  if (!game.is_log_loss()) return substitute_numeric(game, g, tol);
  if (g.size() != game.outcome_grid().size())
    throw DomainError("generalized prediction has wrong dimension");
  std::vector<double> p(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) p[i] = std::exp(-g[i]);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(total > 0.0)) throw MixabilityViolation("generalized prediction is infinite everywhere");
  for (double& v : p) v /= total;
  Prediction out = Prediction::distribution(std::move(p));
  const double excess = substitution_excess(game, out, g);
  if (!(excess <= tol))
    throw MixabilityViolation("Bayes substitute exceeds the generalized prediction by " +
                              std::to_string(excess));
  return out;
}

/// One Aggregating Algorithm move; the pool is not modified.
inline Prediction aa_step(const ExpertPool& pool, std::span<const Prediction> expert_predictions,
                          const Game& game, double eta, double tol = 1e-9) {
  if (expert_predictions.size() != pool.size())
    throw DomainError("one prediction per expert required");
  std::vector<CanonicalPoint> points;
  points.reserve(expert_predictions.size());
  for (const auto& p : expert_predictions) points.push_back(game.canonical_point(p));
  return substitute(game, generalized_prediction(pool, points, eta), tol);
}

/// Exponential-weights update after outcome omega; normalisation is deferred.
inline void aa_observe(ExpertPool& pool, [[maybe_unused]] double omega,
                       std::span<const double> expert_losses, double eta) {
  if (expert_losses.size() != pool.size()) throw DomainError("one loss per expert required");
  for (std::size_t k = 0; k < pool.size(); ++k) {
    const double l = expert_losses[k];
    pool.add_log_weight(k, l == 0.0 ? 0.0 : -eta * l);
  }
}

/// slack[k][N-1] = L_N^k + C ln(1/p_k) - L~_N from per-step losses.
/// A correct Aggregating Algorithm keeps every entry >= 0 up to rounding.
inline std::vector<std::vector<double>> aa_regret_slack(
    std::span<const double> aggregator_losses,
    std::span<const std::vector<double>> expert_losses, std::span<const double> priors, double C) {
  const std::size_t steps = aggregator_losses.size();
  if (expert_losses.size() != steps) throw DomainError("expert loss rows must match the horizon");
  std::vector<std::vector<double>> slack(priors.size(), std::vector<double>(steps));
  std::vector<CompensatedSum> cum(priors.size());
  CompensatedSum agg;
  for (std::size_t n = 0; n < steps; ++n) {
    agg += aggregator_losses[n];
    if (expert_losses[n].size() != priors.size())
      throw DomainError("expert loss row has wrong width");
    for (std::size_t k = 0; k < priors.size(); ++k) {
      cum[k] += expert_losses[n][k];
      const double lk = cum[k].value();
      const double la = agg.value();
      if (lk == kInf)
        slack[k][n] = kInf;
      else
        slack[k][n] = lk + C * std::log(1.0 / priors[k]) - la;
    }
  }
  return slack;
}

}  // namespace jeffreys
