#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jeffreys/numeric.hpp"

namespace jeffreys {

/// Input outside a game's outcome or prediction space.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class GameKind {
  AbsoluteLoss,         // (R, R, |w - g|)
  SquareLoss,           // (R, R, (w - g)^2)
  BoundedSquareLoss,    // ([0,1], [0,1], (w - g)^2)
  BoundedAbsoluteLoss,  // ([0,1], [0,1], |w - g|)
  QuarticLoss,          // ([-1,1], [-1,1], (w - g)^4)
  LogLossFinite,        // ({0..m-1}, simplex, -ln g(w))
};

inline std::string_view to_string(GameKind kind) {
  switch (kind) {
    case GameKind::AbsoluteLoss: return "absolute";
    case GameKind::SquareLoss: return "square";
    case GameKind::BoundedSquareLoss: return "bounded_square";
    case GameKind::BoundedAbsoluteLoss: return "bounded_absolute";
    case GameKind::QuarticLoss: return "quartic";
    case GameKind::LogLossFinite: return "log_loss";
  }
  return "unknown";
}

inline GameKind game_kind_from_string(std::string_view name) {
  for (GameKind k : {GameKind::AbsoluteLoss, GameKind::SquareLoss, GameKind::BoundedSquareLoss,
                     GameKind::BoundedAbsoluteLoss, GameKind::QuarticLoss, GameKind::LogLossFinite})
    if (to_string(k) == name) return k;
  if (name == "logloss" || name == "log") return GameKind::LogLossFinite;
  throw DomainError("unknown game kind '" + std::string(name) + "'");
}

/// A move of a Predictor or Sceptic: a real number for scalar games, a
/// probability vector for log-loss games.
class Prediction {
 public:
  Prediction() = default;
  Prediction(double x) : values_{x} {}  // NOLINT(google-explicit-constructor)
  Prediction(std::initializer_list<double> xs) : values_(xs) {}

  static Prediction distribution(std::vector<double> probs) {
    Prediction p;
    p.values_ = std::move(probs);
    return p;
  }

  bool is_scalar() const { return values_.size() == 1; }
  double scalar() const {
    if (!is_scalar()) throw DomainError("prediction is not a scalar");
    return values_[0];
  }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const Prediction&, const Prediction&) = default;

 private:
  std::vector<double> values_;
};

/// The loss profile w -> loss(w, g) of one prediction, restricted to the
/// game's outcome grid.
struct CanonicalPoint {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  operator std::span<const double>() const { return values; }  // NOLINT
};

struct GameDescriptor {
  GameKind kind = GameKind::BoundedSquareLoss;
  std::optional<double> lo = std::nullopt;  // defaults per kind
  std::optional<double> hi = std::nullopt;
  std::size_t grid_size = 257;
  std::size_t outcome_grid_size = 0;  // 0: kind default
  std::size_t m = 2;                  // log-loss outcome count
};

class Game {
 public:
  explicit Game(GameDescriptor d) : desc_(d) {
    if (kind() == GameKind::LogLossFinite) {
      if (d.m < 2) throw DomainError("log-loss game needs m >= 2 outcomes");
      lo_ = 0.0;
      hi_ = 1.0;
    } else {
      const auto [dlo, dhi] = default_bounds(kind());
      lo_ = d.lo.value_or(dlo);
      hi_ = d.hi.value_or(dhi);
      if (!(lo_ < hi_)) throw DomainError("game bounds must satisfy lo < hi");
      if (bounded() && (lo_ < dlo || hi_ > dhi))
        throw DomainError("bounds exceed the declared space of " + std::string(to_string(kind())));
    }
    if (d.grid_size < 2) throw DomainError("grid_size must be >= 2");
    prediction_grid_ = linspace(lo_, hi_, d.grid_size);

    if (kind() == GameKind::LogLossFinite) {
      outcome_grid_.resize(d.m);
      for (std::size_t i = 0; i < d.m; ++i) outcome_grid_[i] = static_cast<double>(i);
    } else {
      std::size_t n = d.outcome_grid_size;
      if (n == 0) n = kind() == GameKind::QuarticLoss ? 1025 : 2;
      if (n < 2) throw DomainError("outcome_grid_size must be >= 2");
      outcome_grid_ = linspace(lo_, hi_, n);
    }
    desc_.lo = lo_;
    desc_.hi = hi_;
    desc_.outcome_grid_size = outcome_grid_.size();
  }

  static Game absolute_loss() { return Game({GameKind::AbsoluteLoss}); }
  static Game square_loss() { return Game({GameKind::SquareLoss}); }
  static Game bounded_square_loss(std::size_t outcome_grid = 2) {
    return Game({.kind = GameKind::BoundedSquareLoss, .outcome_grid_size = outcome_grid});
  }
  static Game bounded_absolute_loss(std::size_t outcome_grid = 2) {
    return Game({.kind = GameKind::BoundedAbsoluteLoss, .outcome_grid_size = outcome_grid});
  }
  static Game quartic_loss(std::size_t outcome_grid = 1025) {
    return Game({.kind = GameKind::QuarticLoss, .outcome_grid_size = outcome_grid});
  }
  static Game log_loss(std::size_t m = 2) { return Game({.kind = GameKind::LogLossFinite, .m = m}); }

  GameKind kind() const { return desc_.kind; }
  const GameDescriptor& descriptor() const { return desc_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  /// Outcome and prediction spaces are intervals we must enforce (the R games
  /// only use [lo, hi] for their grids).
  bool bounded() const {
    return kind() != GameKind::AbsoluteLoss && kind() != GameKind::SquareLoss;
  }
  bool is_log_loss() const { return kind() == GameKind::LogLossFinite; }
  bool is_binary() const { return outcome_grid_.size() == 2; }

  /// Every prediction is described by one real parameter (scalar games and
  /// binary log-loss, where the parameter is the probability of outcome 1).
  bool one_parameter() const { return !is_log_loss() || desc_.m == 2; }

  std::span<const double> outcome_grid() const { return outcome_grid_; }
  /// Parameter grid over the prediction space (see one_parameter()).
  std::span<const double> prediction_grid() const { return prediction_grid_; }

  Prediction from_parameter(double x) const {
    if (is_log_loss()) return Prediction::distribution({1.0 - x, x});
    return x;
  }
  double to_parameter(const Prediction& g) const {
    if (is_log_loss()) {
      if (g.size() != 2) throw DomainError("binary log-loss prediction must have 2 entries");
      return g[1];
    }
    return g.scalar();
  }

  void validate_outcome(double omega) const {
    if (!std::isfinite(omega)) throw DomainError("outcome must be finite");
    if (is_log_loss()) {
      if (omega < 0 || omega >= static_cast<double>(desc_.m) || omega != std::floor(omega))
        throw DomainError("log-loss outcome must be an index in [0, m)");
      return;
    }
    if (bounded() && (omega < lo_ || omega > hi_))
      throw DomainError("outcome " + std::to_string(omega) + " outside [" + std::to_string(lo_) +
                        ", " + std::to_string(hi_) + "]");
  }

  void validate_prediction(const Prediction& g) const {
    if (is_log_loss()) {
      if (g.size() != desc_.m) throw DomainError("log-loss prediction has wrong length");
      double total = 0.0;
      for (double p : g.values()) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("probabilities must be >= 0");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-12) throw DomainError("probabilities must sum to 1");
      return;
    }
    if (!g.is_scalar()) throw DomainError("scalar game expects a scalar prediction");
    const double x = g.scalar();
    if (!std::isfinite(x)) throw DomainError("prediction must be finite");
    if (bounded() && (x < lo_ || x > hi_))
      throw DomainError("prediction " + std::to_string(x) + " outside [" + std::to_string(lo_) +
                        ", " + std::to_string(hi_) + "]");
  }

  double loss(double omega, const Prediction& g) const {
    validate_outcome(omega);
    validate_prediction(g);
    return loss_unchecked(omega, g);
  }

  double loss_unchecked(double omega, const Prediction& g) const {
    if (is_log_loss()) {
      const double p = g[static_cast<std::size_t>(omega)];
      return p > 0.0 ? -std::log(p) : kInf;
    }
    return scalar_loss(omega, g[0]);
  }

  /// Loss of the prediction with parameter x (one_parameter() games).
  double parameter_loss(double omega, double x) const {
    if (is_log_loss()) {
      const double p = omega == 0.0 ? 1.0 - x : x;
      if (p <= 0.0) return kInf;
      return omega == 0.0 ? -std::log1p(-x) : -std::log(x);
    }
    return scalar_loss(omega, x);
  }

  CanonicalPoint canonical_point(const Prediction& g) const {
    validate_prediction(g);
    CanonicalPoint pt;
    pt.values.reserve(outcome_grid_.size());
    for (double w : outcome_grid_) pt.values.push_back(loss_unchecked(w, g));
    return pt;
  }

  CanonicalPoint canonical_point_of_parameter(double x) const {
    CanonicalPoint pt;
    pt.values.reserve(outcome_grid_.size());
    for (double w : outcome_grid_) pt.values.push_back(parameter_loss(w, x));
    return pt;
  }

  /// Projects a move into the prediction space (no-op for the R games).
  Prediction clamp(const Prediction& g, double margin = 0.0) const {
    if (is_log_loss()) {
      std::vector<double> p(g.values().begin(), g.values().end());
      double total = 0.0;
      for (double& v : p) {
        v = std::max(v, margin);
        total += v;
      }
      for (double& v : p) v /= total;
      return Prediction::distribution(std::move(p));
    }
    if (!bounded()) return g;
    return std::clamp(g.scalar(), lo_, hi_);
  }

  /// w * g1 + (1 - w) * g2.
  Prediction mix(double w, const Prediction& g1, const Prediction& g2) const {
    if (g1.size() != g2.size()) throw DomainError("cannot mix predictions of different shapes");
    std::vector<double> out(g1.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = w * g1[i] + (1.0 - w) * g2[i];
    if (is_log_loss()) return Prediction::distribution(std::move(out));
    double x = out[0];
    if (bounded()) x = std::clamp(x, lo_, hi_);
    return x;
  }

  /// Same game with its grids spanning [lo, hi] (R games only).
  Game with_bounds(double lo, double hi) const {
    GameDescriptor d = desc_;
    d.lo = lo;
    d.hi = hi;
    return Game(d);
  }

  /// The game restricted to the two extreme outcomes of its outcome grid.
  Game binary_restriction() const {
    if (is_log_loss()) {
      if (desc_.m != 2) throw DomainError("binary restriction of a log-loss game needs m = 2");
      return *this;
    }
    GameDescriptor d = desc_;
    d.outcome_grid_size = 2;
    return Game(d);
  }

 private:
  static std::pair<double, double> default_bounds(GameKind k) {
    if (k == GameKind::QuarticLoss) return {-1.0, 1.0};
    return {0.0, 1.0};
  }

  double scalar_loss(double omega, double x) const {
    const double d = omega - x;
    switch (kind()) {
      case GameKind::AbsoluteLoss:
      case GameKind::BoundedAbsoluteLoss: return std::abs(d);
      case GameKind::SquareLoss:
      case GameKind::BoundedSquareLoss: return d * d;
      case GameKind::QuarticLoss: {
        const double d2 = d * d;
        return d2 * d2;
      }
      case GameKind::LogLossFinite: break;
    }
    return kInf;
  }

  GameDescriptor desc_;
  double lo_ = 0.0;
  double hi_ = 1.0;
  std::vector<double> outcome_grid_;
  std::vector<double> prediction_grid_;
};

// ---------------------------------------------------------------------------
// Superprediction / subprediction geometry.

namespace detail {

// loss - point for the "point dominates loss" test; an infinite point
// dominates everything.
inline double super_term(double loss, double point) {
  if (point == kInf) return -kInf;
  return loss - point;
}

// loss - point for the "loss dominates point" test.
inline double sub_term(double loss, double point) {
  if (loss == kInf) return kInf;
  return loss - point;
}

inline void check_dimension(const Game& game, std::span<const double> point) {
  if (point.size() != game.outcome_grid().size())
    throw DomainError("point dimension does not match the outcome grid");
}

// Multi-outcome log-loss: the equaliser g(w) = exp(-p(w) - c) gives both gaps
// as ln sum_w exp(-p(w)).
inline double log_loss_gap(std::span<const double> point) {
  std::vector<double> neg(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) neg[i] = -point[i];
  return log_sum_exp(neg);
}

}  // namespace detail

/// min over predictions of max_w (loss(w, g) - point(w)). The point is a
/// superprediction iff this is <= 0.
inline double superprediction_gap(const Game& game, std::span<const double> point,
                                  const RefineOptions& opts = {}) {
  detail::check_dimension(game, point);
  if (!game.one_parameter()) return detail::log_loss_gap(point);
  const auto outcomes = game.outcome_grid();
  auto objective = [&](double x) {
    double worst = -kInf;
    for (std::size_t i = 0; i < outcomes.size(); ++i)
      worst = std::max(worst, detail::super_term(game.parameter_loss(outcomes[i], x), point[i]));
    return worst;
  };
  return grid_minimize(game.prediction_grid(), objective, opts).value;
}

/// max over predictions of min_w (loss(w, g) - point(w)). The point is a
/// subprediction iff this is >= 0.
inline double subprediction_gap(const Game& game, std::span<const double> point,
                                const RefineOptions& opts = {}) {
  detail::check_dimension(game, point);
  if (!game.one_parameter()) return detail::log_loss_gap(point);
  const auto outcomes = game.outcome_grid();
  auto objective = [&](double x) {
    double least = kInf;
    for (std::size_t i = 0; i < outcomes.size(); ++i)
      least = std::min(least, detail::sub_term(game.parameter_loss(outcomes[i], x), point[i]));
    return -least;
  };
  return -grid_minimize(game.prediction_grid(), objective, opts).value;
}

inline bool is_superprediction(const Game& game, std::span<const double> point, double tol = 1e-9) {
  if (!(tol > 0)) throw DomainError("tolerance must be positive");
  return superprediction_gap(game, point) <= tol;
}

inline bool is_subprediction(const Game& game, std::span<const double> point, double tol = 1e-9) {
  if (!(tol > 0)) throw DomainError("tolerance must be positive");
  return subprediction_gap(game, point) >= -tol;
}

/// No point of the set is componentwise below a different one.
inline bool check_non_redundant(std::span<const CanonicalPoint> points, double tol = 1e-9) {
  auto leq = [tol](const CanonicalPoint& a, const CanonicalPoint& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] > b[i] + tol) return false;
    return true;
  };
  auto differ = [tol](const CanonicalPoint& a, const CanonicalPoint& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == b[i]) continue;
      if (!(std::abs(a[i] - b[i]) <= tol)) return true;
    }
    return false;
  };
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = 0; j < points.size(); ++j)
      if (i != j && leq(points[i], points[j]) && differ(points[i], points[j])) return false;
  return true;
}

inline std::vector<CanonicalPoint> grid_canonical_points(const Game& game) {
  if (!game.one_parameter())
    throw DomainError("grid canonical points need a one-parameter game");
  std::vector<CanonicalPoint> pts;
  pts.reserve(game.prediction_grid().size());
  for (double x : game.prediction_grid()) pts.push_back(game.canonical_point_of_parameter(x));
  return pts;
}

inline bool check_non_redundant(const Game& game, double tol = 1e-9) {
  return check_non_redundant(grid_canonical_points(game), tol);
}

/// Midpoint test of convexity of exp(-eta * superpredictions) over all pairs
/// of prediction-grid canonical points.
inline bool check_perfectly_mixable(const Game& game, double eta, double tol = 1e-9) {
  if (!(eta > 0)) throw DomainError("eta must be positive");
  const auto pts = grid_canonical_points(game);
  std::vector<std::vector<double>> mapped;
  mapped.reserve(pts.size());
  for (const auto& p : pts) {
    std::vector<double> e(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) e[i] = std::exp(-eta * p[i]);
    mapped.push_back(std::move(e));
  }
  std::vector<double> mid(game.outcome_grid().size());
  for (std::size_t a = 0; a < mapped.size(); ++a) {
    for (std::size_t b = a + 1; b < mapped.size(); ++b) {
      for (std::size_t i = 0; i < mid.size(); ++i) {
        const double m = 0.5 * (mapped[a][i] + mapped[b][i]);
        mid[i] = m > 0.0 ? -std::log(m) / eta : kInf;
      }
      if (superprediction_gap(game, mid) > tol) return false;
    }
  }
  return true;
}

}  // namespace jeffreys
