#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "jeffreys/game.hpp"
#include "jeffreys/strategy.hpp"

namespace jeffreys {

// ---------------------------------------------------------------------------
// Nature

class ConstantNature final : public Nature {
 public:
  explicit ConstantNature(double omega) : omega_(omega) {}
  std::optional<double> outcome(std::size_t, const Prediction&, const Prediction&,
                                const Prediction&, History) override {
    return omega_;
  }
  std::string describe() const override { return "constant(" + std::to_string(omega_) + ")"; }

 private:
  double omega_;
};

/// outcome_hi with probability p, else outcome_lo.
class BernoulliNature final : public Nature {
 public:
  BernoulliNature(double p, double outcome_lo = 0.0, double outcome_hi = 1.0)
      : info_{p, outcome_lo, outcome_hi} {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("bernoulli p must lie in [0, 1]");
  }
  void reset(std::uint64_t seed) override { rng_.seed(seed); }
  std::optional<double> outcome(std::size_t, const Prediction&, const Prediction&,
                                const Prediction&, History) override {
    return std::bernoulli_distribution(info_.p)(rng_) ? info_.outcome_hi : info_.outcome_lo;
  }
  void annotate(TraceMeta& meta) const override { meta.bernoulli = info_; }
  std::string describe() const override { return "iid_bernoulli(" + std::to_string(info_.p) + ")"; }

 private:
  BernoulliNatureInfo info_;
  std::mt19937_64 rng_{0};
};

class UniformNature final : public Nature {
 public:
  UniformNature(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(lo < hi)) throw ConfigError("iid_uniform needs lo < hi");
  }
  void reset(std::uint64_t seed) override { rng_.seed(seed); }
  std::optional<double> outcome(std::size_t, const Prediction&, const Prediction&,
                                const Prediction&, History) override {
    return std::uniform_real_distribution<double>(lo_, hi_)(rng_);
  }
  std::string describe() const override {
    return "iid_uniform(" + std::to_string(lo_) + ", " + std::to_string(hi_) + ")";
  }

 private:
  double lo_, hi_;
  std::mt19937_64 rng_{0};
};

/// Replays recorded outcomes; ends the run when they run out.
class ReplayNature final : public Nature {
 public:
  explicit ReplayNature(std::vector<double> outcomes, std::string source = "inline")
      : outcomes_(std::move(outcomes)), source_(std::move(source)) {}
  std::optional<double> outcome(std::size_t n, const Prediction&, const Prediction&,
                                const Prediction&, History) override {
    if (n == 0 || n > outcomes_.size()) return std::nullopt;
    return outcomes_[n - 1];
  }
  std::string describe() const override { return "replay(" + source_ + ")"; }

 private:
  std::vector<double> outcomes_;
  std::string source_;
};

/// Picks the candidate maximising loss(w, sceptic) - min(loss(w, g1), loss(w, g2));
/// ties go to the smallest candidate.
class AdversarialGreedyNature final : public Nature {
 public:
  AdversarialGreedyNature(Game game, std::vector<double> candidates)
      : game_(std::move(game)), candidates_(std::move(candidates)) {
    if (candidates_.empty()) candidates_.assign(game_.outcome_grid().begin(), game_.outcome_grid().end());
    std::sort(candidates_.begin(), candidates_.end());
  }
  std::optional<double> outcome(std::size_t, const Prediction& g1, const Prediction& g2,
                                const Prediction& sceptic, History) override {
    double best = candidates_.front();
    double best_score = -kInf;
    for (double w : candidates_) {
      const double score = game_.loss_unchecked(w, sceptic) -
                           std::min(game_.loss_unchecked(w, g1), game_.loss_unchecked(w, g2));
      if (score > best_score) {
        best_score = score;
        best = w;
      }
    }
    return best;
  }
  std::string describe() const override {
    return "adversarial_greedy(" + std::to_string(candidates_.size()) + " candidates)";
  }

 private:
  Game game_;
  std::vector<double> candidates_;
};

// ---------------------------------------------------------------------------
// Predictors. Scalar parameters map to (1 - x, x) in binary log-loss games;
// every move is clamped into the prediction space.

namespace detail {

inline Prediction finish_prediction(const Game& game, double x, double margin) {
  if (game.is_log_loss()) {
    if (game.descriptor().m != 2)
      throw ConfigError("scalar predictors need a binary log-loss game");
    x = std::clamp(x, margin, 1.0 - margin);
    return game.from_parameter(x);
  }
  return game.clamp(x);
}

}  // namespace detail

class ConstantPredictor final : public Predictor {
 public:
  ConstantPredictor(const Game& game, Prediction value) : value_(std::move(value)) {
    game.validate_prediction(value_);
  }
  Prediction predict(std::size_t, History) override { return value_; }
  std::string describe() const override {
    std::string s = "constant(";
    for (std::size_t i = 0; i < value_.size(); ++i) s += (i ? ";" : "") + std::to_string(value_[i]);
    return s + ")";
  }

 private:
  Prediction value_;
};

/// Mean of past outcomes (or of outcome indices for log-loss).
class RunningMeanPredictor final : public Predictor {
 public:
  RunningMeanPredictor(Game game, double initial, double margin = 1e-6)
      : game_(std::move(game)), initial_(initial), margin_(margin) {}
  Prediction predict(std::size_t, History history) override {
    double x = initial_;
    if (!history.empty()) {
      double s = 0.0;
      for (const auto& r : history) s += r.omega;
      x = s / static_cast<double>(history.size());
    }
    return detail::finish_prediction(game_, x, margin_);
  }
  std::string describe() const override { return "running_mean(" + std::to_string(initial_) + ")"; }

 private:
  Game game_;
  double initial_;
  double margin_;
};

/// centre + sigma_n * z with sigma_n = sigma0 / n^decay and z standard normal.
class NoisyTargetPredictor final : public Predictor {
 public:
  NoisyTargetPredictor(Game game, double centre, double sigma0, double decay, double margin = 1e-6)
      : game_(std::move(game)), centre_(centre), sigma0_(sigma0), decay_(decay), margin_(margin) {
    if (!(sigma0 >= 0.0)) throw ConfigError("noisy_target sigma0 must be >= 0");
  }
  void reset(std::uint64_t seed) override { rng_.seed(seed); }
  Prediction predict(std::size_t n, History) override {
    const double sigma = sigma0_ / std::pow(static_cast<double>(std::max<std::size_t>(n, 1)), decay_);
    const double z = std::normal_distribution<double>(0.0, 1.0)(rng_);
    return detail::finish_prediction(game_, centre_ + sigma * z, margin_);
  }
  std::string describe() const override {
    return "noisy_target(" + std::to_string(centre_) + ", " + std::to_string(sigma0_) + "/n^" +
           std::to_string(decay_) + ")";
  }

 private:
  Game game_;
  double centre_, sigma0_, decay_, margin_;
  std::mt19937_64 rng_{0};
};

/// start + delta * (n - 1).
class DriftPredictor final : public Predictor {
 public:
  DriftPredictor(Game game, double start, double delta, double margin = 1e-6)
      : game_(std::move(game)), start_(start), delta_(delta), margin_(margin) {}
  Prediction predict(std::size_t n, History) override {
    return detail::finish_prediction(game_, start_ + delta_ * static_cast<double>(n - 1), margin_);
  }
  std::string describe() const override {
    return "drift(" + std::to_string(start_) + ", " + std::to_string(delta_) + ")";
  }

 private:
  Game game_;
  double start_, delta_, margin_;
};

}  // namespace jeffreys
