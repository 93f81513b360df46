#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "jeffreys/game.hpp"

namespace jeffreys {

/// Invalid run configuration or a verification request that cannot be met.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepRecord {
  std::size_t n = 0;  // 1-based
  Prediction gamma1;
  Prediction gamma2;
  Prediction gamma_sceptic;
  double omega = 0.0;
  double loss1 = 0.0;
  double loss2 = 0.0;
  double loss_sceptic = 0.0;
  double cum1 = 0.0;
  double cum2 = 0.0;
  double cum_sceptic = 0.0;
  /// |g1 - g2| for scalar games; sqrt of the Hellinger divergence for
  /// log-loss, so that gap^2 is the alpha = 0 divergence in both cases.
  double gap = 0.0;
  /// Lower alpha-divergence of the two predictions (NaN when not computed).
  double divergence_term = std::numeric_limits<double>::quiet_NaN();
};

/// Per-step expert losses of an Aggregating-Algorithm Sceptic.
struct AggregatorLog {
  std::vector<double> priors;
  double eta = 1.0;
  double C = 1.0;
  std::vector<std::vector<double>> expert_losses;  // [step][expert]
};

/// Nature draws outcome_hi with probability p, else outcome_lo.
struct BernoulliNatureInfo {
  double p = 0.5;
  double outcome_lo = 0.0;
  double outcome_hi = 1.0;
};

struct TraceMeta {
  std::string nature;
  std::string predictor1;
  std::string predictor2;
  std::string sceptic;
  std::optional<double> alpha;    // level-2 Sceptic
  std::optional<double> epsilon;  // level-2 Sceptic
  std::optional<double> level1_c;
  std::optional<BernoulliNatureInfo> bernoulli;
  std::optional<AggregatorLog> aggregator;
  bool truncated = false;
  std::vector<std::string> warnings;
};

struct Trace {
  GameDescriptor game;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  TraceMeta meta;
};

using History = std::span<const StepRecord>;

/// Derives an independent seed for one role of a run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t role) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(role), 0x9e3779b9u};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual void reset([[maybe_unused]] std::uint64_t seed) {}
  /// Sees only completed steps.
  virtual Prediction predict(std::size_t n, History history) = 0;
  virtual std::string describe() const = 0;
};

class Sceptic {
 public:
  virtual ~Sceptic() = default;
  virtual void reset([[maybe_unused]] std::uint64_t seed) {}
  /// Sees both current predictions and completed steps, never the outcome.
  virtual Prediction predict(std::size_t n, const Prediction& g1, const Prediction& g2,
                             History history) = 0;
  virtual void observe([[maybe_unused]] std::size_t n, [[maybe_unused]] double omega,
                       [[maybe_unused]] const Prediction& g1,
                       [[maybe_unused]] const Prediction& g2,
                       [[maybe_unused]] const Prediction& own) {}
  /// Lower divergence the strategy used at the last predict(), if any.
  virtual std::optional<double> divergence_used() const { return std::nullopt; }
  virtual void annotate([[maybe_unused]] TraceMeta& meta) const {}
  virtual std::string describe() const = 0;
};

class Nature {
 public:
  virtual ~Nature() = default;
  virtual void reset([[maybe_unused]] std::uint64_t seed) {}
  /// Sees all three current moves. nullopt ends the run early.
  virtual std::optional<double> outcome(std::size_t n, const Prediction& g1, const Prediction& g2,
                                        const Prediction& sceptic, History history) = 0;
  virtual void annotate([[maybe_unused]] TraceMeta& meta) const {}
  virtual std::string describe() const = 0;
};

}  // namespace jeffreys
