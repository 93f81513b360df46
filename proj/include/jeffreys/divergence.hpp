#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "jeffreys/game.hpp"

namespace jeffreys {

enum class DivergenceSide { Lower, Upper, Standard };
enum class DivergenceMethod { ClosedForm, NumericBisection };

inline std::string_view to_string(DivergenceSide s) {
  switch (s) {
    case DivergenceSide::Lower: return "lower";
    case DivergenceSide::Upper: return "upper";
    case DivergenceSide::Standard: return "standard";
  }
  return "unknown";
}

inline std::string_view to_string(DivergenceMethod m) {
  return m == DivergenceMethod::ClosedForm ? "closed_form" : "numeric_bisection";
}

struct DivergenceResult {
  double alpha = 0.0;
  DivergenceSide side = DivergenceSide::Lower;
  /// (4 / (1 - alpha^2)) * shift; may be +-inf.
  double value = 0.0;
  /// The vertical shift t between the alpha-mean of the two canonical points
  /// and the boundary of the super/subprediction set.
  double shift = 0.0;
  DivergenceMethod method = DivergenceMethod::ClosedForm;
  double tol = 0.0;
  /// False when no finite bracket was found and value is +-inf.
  bool bracketed = true;
};

struct BisectionOptions {
  double tol = 1e-10;             // final bracket width on the shift
  double membership_tol = 0.0;  // slack allowed in each membership test
  int max_doublings = 4;
};

inline double divergence_scale(double alpha) { return 4.0 / (1.0 - alpha * alpha); }

namespace detail {

inline void check_open_alpha(double alpha) {
  if (!(alpha > -1.0 && alpha < 1.0)) throw DomainError("alpha must lie in (-1, 1)");
}

inline void check_closed_alpha(double alpha) {
  if (!(alpha >= -1.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [-1, 1]");
}

inline std::vector<double> alpha_mean(const CanonicalPoint& l1, const CanonicalPoint& l2,
                                      double alpha) {
  const double a = (1.0 - alpha) / 2.0;
  const double b = (1.0 + alpha) / 2.0;
  std::vector<double> mean(l1.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    // 0 * inf is 0 here: a zero weight ignores that profile entirely.
    const double x = a == 0.0 ? 0.0 : a * l1[i];
    const double y = b == 0.0 ? 0.0 : b * l2[i];
    mean[i] = x + y;
  }
  return mean;
}

inline double bracket_radius(const Game& game, std::span<const double> mean) {
  double top = 1.0;
  if (game.one_parameter())
    for (const auto& p : grid_canonical_points(game))
      for (double v : p.values)
        if (std::isfinite(v)) top = std::max(top, std::abs(v));
  for (double v : mean)
    if (std::isfinite(v)) top = std::max(top, std::abs(v));
  return 4.0 * top;
}

inline std::vector<double> shifted(std::span<const double> mean, double t) {
  std::vector<double> out(mean.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mean[i] - t;
  return out;
}

inline double hellinger_affinity(std::span<const double> p1, std::span<const double> p2,
                                 double alpha) {
  if (p1.size() != p2.size()) throw DomainError("probability vectors differ in length");
  const double a = (1.0 - alpha) / 2.0;
  const double b = (1.0 + alpha) / 2.0;
  double s = 0.0;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    if (p1[i] < 0.0 || p2[i] < 0.0) throw DomainError("probabilities must be >= 0");
    if (p1[i] == 0.0 || p2[i] == 0.0) continue;
    s += std::pow(p1[i], a) * std::pow(p2[i], b);
  }
  return std::min(s, 1.0);  // Holder; rounding can overshoot
}

}  // namespace detail

/// Lower alpha-divergence by bisection on the shift t, using superprediction
/// membership of mean - t.
inline DivergenceResult lower_alpha_divergence_numeric(const Game& game, const Prediction& g1,
                                                       const Prediction& g2, double alpha,
                                                       const BisectionOptions& opts = {}) {
  detail::check_open_alpha(alpha);
  const auto mean = detail::alpha_mean(game.canonical_point(g1), game.canonical_point(g2), alpha);
  auto member = [&](double t) {
    return superprediction_gap(game, detail::shifted(mean, t)) <= opts.membership_tol;
  };

  DivergenceResult r{.alpha = alpha, .side = DivergenceSide::Lower,
                     .method = DivergenceMethod::NumericBisection, .tol = opts.tol};
  const double radius = detail::bracket_radius(game, mean);
  double lo = -radius;
  double hi = radius;
  for (int d = 0; !member(lo); ++d) {
    if (d == opts.max_doublings) {
      r.shift = r.value = -kInf;
      r.bracketed = false;
      return r;
    }
    lo *= 2.0;
  }
  for (int d = 0; member(hi); ++d) {
    if (d == opts.max_doublings) {
      r.shift = r.value = kInf;
      r.bracketed = false;
      return r;
    }
    hi *= 2.0;
  }
  while (hi - lo > opts.tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (member(mid) ? lo : hi) = mid;
  }
  r.shift = lo;
  r.value = divergence_scale(alpha) * lo;
  return r;
}

/// Upper alpha-divergence by bisection, using subprediction membership.
inline DivergenceResult upper_alpha_divergence_numeric(const Game& game, const Prediction& g1,
                                                       const Prediction& g2, double alpha,
                                                       const BisectionOptions& opts = {}) {
  detail::check_open_alpha(alpha);
  const auto mean = detail::alpha_mean(game.canonical_point(g1), game.canonical_point(g2), alpha);
  auto member = [&](double t) {
    return subprediction_gap(game, detail::shifted(mean, t)) >= -opts.membership_tol;
  };

  DivergenceResult r{.alpha = alpha, .side = DivergenceSide::Upper,
                     .method = DivergenceMethod::NumericBisection, .tol = opts.tol};
  const double radius = detail::bracket_radius(game, mean);
  double lo = -radius;
  double hi = radius;
  for (int d = 0; member(lo); ++d) {
    if (d == opts.max_doublings) {
      r.shift = r.value = -kInf;
      r.bracketed = false;
      return r;
    }
    lo *= 2.0;
  }
  for (int d = 0; !member(hi); ++d) {
    if (d == opts.max_doublings) {
      r.shift = r.value = kInf;
      r.bracketed = false;
      return r;
    }
    hi *= 2.0;
  }
  while (hi - lo > opts.tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (member(mid) ? hi : lo) = mid;
  }
  r.shift = hi;
  r.value = divergence_scale(alpha) * hi;
  return r;
}

/// Square-loss divergence; the same for every alpha and both sides.
inline double alpha_divergence_square_loss(double g1, double g2, double alpha) {
  detail::check_closed_alpha(alpha);
  const double d = g1 - g2;
  return d * d;
}

inline double alpha_divergence_log_loss(std::span<const double> p1, std::span<const double> p2,
                                        double alpha) {
  detail::check_open_alpha(alpha);
  const double aff = detail::hellinger_affinity(p1, p2, alpha);
  if (aff <= 0.0) return kInf;
  return -divergence_scale(alpha) * std::log(aff);
}

/// The textbook alpha-divergence, 4/(1-a^2) * (1 - affinity).
inline double standard_alpha_divergence_log_loss(std::span<const double> p1,
                                                 std::span<const double> p2, double alpha) {
  detail::check_open_alpha(alpha);
  return divergence_scale(alpha) * (1.0 - detail::hellinger_affinity(p1, p2, alpha));
}

inline double kl_divergence_log_loss(std::span<const double> p1, std::span<const double> p2) {
  if (p1.size() != p2.size()) throw DomainError("probability vectors differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    if (p1[i] == 0.0) continue;
    if (p2[i] == 0.0) return kInf;
    s += p1[i] * std::log(p1[i] / p2[i]);
  }
  return s;
}

/// True for games whose lower and upper divergences have a closed form.
inline bool has_closed_form_divergence(const Game& game) {
  return game.kind() == GameKind::SquareLoss || game.kind() == GameKind::BoundedSquareLoss ||
         game.is_log_loss();
}

inline DivergenceResult closed_form_divergence(const Game& game, const Prediction& g1,
                                               const Prediction& g2, double alpha,
                                               DivergenceSide side) {
  DivergenceResult r{.alpha = alpha, .side = side, .method = DivergenceMethod::ClosedForm};
  if (game.is_log_loss()) {
    game.validate_prediction(g1);
    game.validate_prediction(g2);
    if (side == DivergenceSide::Standard) {
      r.value = standard_alpha_divergence_log_loss(g1.values(), g2.values(), alpha);
    } else if (alpha == -1.0) {
      r.value = kl_divergence_log_loss(g1.values(), g2.values());
    } else if (alpha == 1.0) {
      r.value = kl_divergence_log_loss(g2.values(), g1.values());
    } else {
      r.value = alpha_divergence_log_loss(g1.values(), g2.values(), alpha);
    }
  } else if (game.kind() == GameKind::SquareLoss || game.kind() == GameKind::BoundedSquareLoss) {
    if (side == DivergenceSide::Standard)
      throw DomainError("the standard divergence is defined for log-loss games only");
    r.value = alpha_divergence_square_loss(g1.scalar(), g2.scalar(), alpha);
  } else {
    throw DomainError("no closed form for game " + std::string(to_string(game.kind())));
  }
  r.shift = std::abs(alpha) < 1.0 && std::isfinite(r.value) ? r.value / divergence_scale(alpha)
                                                            : r.value;
  return r;
}

}  // namespace jeffreys
