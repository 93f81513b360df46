#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jeffreys/game.hpp"
#include "jeffreys/io.hpp"
#include "jeffreys/players.hpp"
#include "jeffreys/protocol.hpp"
#include "jeffreys/sceptic.hpp"
#include "jeffreys/strategy.hpp"

namespace jeffreys {

inline constexpr const char* kConfigVersion = "1";

struct DivergenceQuery {
  Prediction g1;
  Prediction g2;
  double alpha = 0.0;
  DivergenceSide side = DivergenceSide::Lower;
  std::string method = "auto";  // auto | closed_form | numeric
  double tol = 1e-6;            // bisection tolerance on the shift
  std::optional<double> expect_value;
  std::optional<double> expect_shift;
  double expect_tol = 1e-3;
};

struct RunConfig {
  std::string mode = "run";  // run | divergence
  GameDescriptor game;
  std::size_t N = 1000;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  json nature;
  json predictor1;
  json predictor2;
  json sceptic;
  std::optional<double> alpha;
  Thresholds thresholds;
  std::vector<std::string> checks;
  std::optional<std::string> trace_path;
  std::optional<std::string> report_path;
  std::optional<std::string> aggregate_path;
  std::vector<DivergenceQuery> queries;
  std::filesystem::path base_dir;  // for relative replay files
  json source;                     // the document as read
};

/// Fresh strategy objects for one run.
struct RunSetup {
  Game game;
  std::unique_ptr<Nature> nature;
  std::unique_ptr<Predictor> p1;
  std::unique_ptr<Predictor> p2;
  std::unique_ptr<Sceptic> sceptic;
};

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(where + ": missing field '" + key + "'");
  return j.at(key);
}

inline double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? number_from_json(j.at(key)) : fallback;
}

inline std::string kind_of(const json& j, const std::string& where) {
  const auto& k = require(j, "kind", where);
  if (!k.is_string()) throw ConfigError(where + ": kind must be a string");
  return k.get<std::string>();
}

inline Prediction prediction_from_json(const Game& game, const json& j) {
  if (j.is_array()) {
    std::vector<double> v;
    for (const auto& x : j) v.push_back(number_from_json(x));
    return game.is_log_loss() ? Prediction::distribution(std::move(v)) : Prediction(v.at(0));
  }
  const double x = number_from_json(j);
  return game.is_log_loss() ? game.from_parameter(x) : Prediction(x);
}

}  // namespace detail

inline std::unique_ptr<Predictor> make_predictor(const Game& game, const json& j,
                                                 const std::string& where = "predictor") {
  const auto kind = detail::kind_of(j, where);
  const double margin = detail::number_or(j, "margin", 1e-6);
  if (kind == "constant") {
    try {
      return std::make_unique<ConstantPredictor>(game,
                                                 detail::prediction_from_json(game, detail::require(j, "value", where)));
    } catch (const DomainError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  if (kind == "running_mean")
    return std::make_unique<RunningMeanPredictor>(game, detail::number_or(j, "initial", 0.5), margin);
  if (kind == "noisy_target")
    return std::make_unique<NoisyTargetPredictor>(
        game, number_from_json(detail::require(j, "center", where)),
        detail::number_or(j, "sigma0", 0.1), detail::number_or(j, "decay", 1.0), margin);
  if (kind == "drift")
    return std::make_unique<DriftPredictor>(game, number_from_json(detail::require(j, "start", where)),
                                            number_from_json(detail::require(j, "delta", where)), margin);
  throw ConfigError(where + ": unknown predictor kind '" + kind + "'");
}

inline std::unique_ptr<Nature> make_nature(const Game& game, const json& j,
                                           const std::filesystem::path& base_dir = {}) {
  const std::string where = "nature";
  const auto kind = detail::kind_of(j, where);
  if (kind == "constant") return std::make_unique<ConstantNature>(number_from_json(detail::require(j, "value", where)));
  if (kind == "iid_bernoulli")
    return std::make_unique<BernoulliNature>(number_from_json(detail::require(j, "p", where)),
                                             detail::number_or(j, "lo", 0.0), detail::number_or(j, "hi", 1.0));
  if (kind == "iid_uniform")
    return std::make_unique<UniformNature>(detail::number_or(j, "lo", game.lo()),
                                           detail::number_or(j, "hi", game.hi()));
  if (kind == "replay") {
    if (j.contains("outcomes")) {
      std::vector<double> v;
      for (const auto& x : j.at("outcomes")) v.push_back(number_from_json(x));
      return std::make_unique<ReplayNature>(std::move(v));
    }
    std::filesystem::path p = detail::require(j, "file", where).get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return std::make_unique<ReplayNature>(read_outcomes_file(p.string()), p.filename().string());
  }
  if (kind == "adversarial_greedy") {
    std::vector<double> cands;
    if (j.contains("candidates")) {
      for (const auto& x : j.at("candidates")) cands.push_back(number_from_json(x));
    } else if (j.contains("candidate_count")) {
      cands = linspace(detail::number_or(j, "lo", game.lo()), detail::number_or(j, "hi", game.hi()),
                       j.at("candidate_count").get<std::size_t>());
    }
    return std::make_unique<AdversarialGreedyNature>(game, std::move(cands));
  }
  throw ConfigError("nature: unknown kind '" + kind + "'");
}

inline std::unique_ptr<Sceptic> make_sceptic(const Game& game, const json& j,
                                             const std::string& where = "sceptic") {
  const auto kind = detail::kind_of(j, where);
  if (kind == "level2" || kind == "midpoint") {
    Level2Config cfg;
    if (kind == "level2") cfg.alpha = detail::number_or(j, "alpha", 0.0);
    cfg.epsilon = detail::number_or(j, "epsilon", 1e-3);
    return std::make_unique<Level2Sceptic>(game, cfg);
  }
  if (kind == "level1") {
    if (game.is_log_loss()) throw ConfigError(where + ": level-1 Sceptic needs a scalar game");
    return std::make_unique<Level1Sceptic>(game, detail::number_or(j, "c", 0.4));
  }
  std::optional<MixabilityParams> mix;
  if (j.contains("eta") || j.contains("C")) {
    MixabilityParams m;
    m.eta = detail::number_or(j, "eta", 1.0);
    m.C = detail::number_or(j, "C", 1.0 / m.eta);
    mix = m;
  }
  if (kind == "aggregating") {
    std::vector<std::unique_ptr<Predictor>> experts;
    const auto& list = detail::require(j, "experts", where);
    for (std::size_t k = 0; k < list.size(); ++k)
      experts.push_back(make_predictor(game, list[k], where + ".experts[" + std::to_string(k) + "]"));
    if (experts.empty()) throw ConfigError(where + ": experts must not be empty");
    std::optional<std::vector<double>> priors;
    if (j.contains("priors")) priors = j.at("priors").get<std::vector<double>>();
    return std::make_unique<AggregatingSceptic>(game, std::move(experts), priors, mix);
  }
  if (kind == "level3") {
    Level3Config cfg;
    if (j.contains("k_max")) cfg.k_max = j.at("k_max").get<std::size_t>();
    cfg.mix = mix;
    json base = j.contains("base") ? j.at("base") : json{{"kind", "midpoint"}};
    return make_level3_sceptic(game, make_sceptic(game, base, where + ".base"), cfg);
  }
  throw ConfigError(where + ": unknown kind '" + kind + "'");
}

inline RunSetup make_setup(const RunConfig& cfg) {
  RunSetup s{Game(cfg.game), nullptr, nullptr, nullptr, nullptr};
  s.nature = make_nature(s.game, cfg.nature, cfg.base_dir);
  s.p1 = make_predictor(s.game, cfg.predictor1, "predictor1");
  s.p2 = make_predictor(s.game, cfg.predictor2, "predictor2");
  s.sceptic = make_sceptic(s.game, cfg.sceptic);
  return s;
}

inline DivergenceSide divergence_side_from_string(const std::string& s) {
  if (s == "lower") return DivergenceSide::Lower;
  if (s == "upper") return DivergenceSide::Upper;
  if (s == "standard") return DivergenceSide::Standard;
  throw ConfigError("side must be lower, upper or standard, got '" + s + "'");
}

inline RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir = {}) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  cfg.source = doc;
  cfg.base_dir = base_dir;
  try {
    const auto& ver = detail::require(doc, "spec_version", "config");
    const std::string v = ver.is_string() ? ver.get<std::string>() : ver.dump();
    if (v != kConfigVersion) throw ConfigError("unsupported spec_version '" + v + "'");
    if (doc.contains("mode")) cfg.mode = doc.at("mode").get<std::string>();
    if (cfg.mode != "run" && cfg.mode != "divergence")
      throw ConfigError("mode must be 'run' or 'divergence'");
    cfg.game = game_descriptor_from_json(detail::require(doc, "game", "config"));
    const Game game(cfg.game);

    if (cfg.mode == "divergence") {
      for (const auto& q : detail::require(doc, "queries", "config")) {
        DivergenceQuery d;
        d.g1 = detail::prediction_from_json(game, detail::require(q, "g1", "query"));
        d.g2 = detail::prediction_from_json(game, detail::require(q, "g2", "query"));
        d.alpha = detail::number_or(q, "alpha", 0.0);
        if (q.contains("side")) d.side = divergence_side_from_string(q.at("side").get<std::string>());
        if (q.contains("method")) d.method = q.at("method").get<std::string>();
        d.tol = detail::number_or(q, "tol", d.tol);
        if (q.contains("expect_value")) d.expect_value = number_from_json(q.at("expect_value"));
        if (q.contains("expect_shift")) d.expect_shift = number_from_json(q.at("expect_shift"));
        d.expect_tol = detail::number_or(q, "expect_tol", d.expect_tol);
        cfg.queries.push_back(std::move(d));
      }
      if (cfg.queries.empty()) throw ConfigError("divergence config needs at least one query");
      return cfg;
    }

    cfg.N = detail::require(doc, "N", "config").get<std::size_t>();
    if (cfg.N == 0) throw ConfigError("N must be at least 1");
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("seeds")) cfg.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.nature = detail::require(doc, "nature", "config");
    cfg.predictor1 = detail::require(doc, "predictor1", "config");
    cfg.predictor2 = detail::require(doc, "predictor2", "config");
    cfg.sceptic = detail::require(doc, "sceptic", "config");
    if (doc.contains("alpha")) cfg.alpha = number_from_json(doc.at("alpha"));
    if (doc.contains("thresholds")) {
      const auto& t = doc.at("thresholds");
      cfg.thresholds.gap_sum_max = detail::number_or(t, "gap_sum_max", cfg.thresholds.gap_sum_max);
      cfg.thresholds.loss_gap_min = detail::number_or(t, "loss_gap_min", cfg.thresholds.loss_gap_min);
    }
    if (doc.contains("checks")) cfg.checks = doc.at("checks").get<std::vector<std::string>>();
    for (const auto& c : cfg.checks)
      if (!known_checks().count(c)) throw ConfigError("unknown check '" + c + "'");
    if (doc.contains("output")) {
      const auto& o = doc.at("output");
      if (o.contains("trace")) cfg.trace_path = o.at("trace").get<std::string>();
      if (o.contains("report")) cfg.report_path = o.at("report").get<std::string>();
      if (o.contains("aggregate")) cfg.aggregate_path = o.at("aggregate").get<std::string>();
    }
    make_setup(cfg);  // validates strategies against the game before any run
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config '" + path + "': " + e.what());
  }
  return parse_run_config(doc, std::filesystem::path(path).parent_path());
}

/// Builds fresh strategies and runs one seed.
inline Trace run_config(const RunConfig& cfg, std::uint64_t seed) {
  auto s = make_setup(cfg);
  return run_protocol(*s.nature, *s.p1, *s.p2, *s.sceptic, s.game, cfg.N, seed, RunOptions{cfg.alpha});
}

}  // namespace jeffreys
