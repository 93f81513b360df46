#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "jeffreys/config.hpp"
#include "jeffreys/divergence.hpp"
#include "jeffreys/io.hpp"
#include "jeffreys/protocol.hpp"

namespace jeffreys::cli {

enum ExitCode : int { kPass = 0, kCheckFailure = 1, kConfigError = 2 };

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> trace_path;
  std::optional<std::string> report_path;
};

struct SweepArgs {
  std::string config;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::string> out_path;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct DivergenceArgs {
  std::string game = "bounded_square";
  std::string g1;
  std::string g2;
  double alpha = 0.0;
  std::string side = "lower";
  std::string method = "auto";
  double tol = 1e-6;
  std::size_t m = 2;
};

namespace detail {

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

inline Prediction parse_prediction(const Game& game, const std::string& text) {
  std::vector<double> v;
  std::string tok;
  auto flush = [&] {
    if (tok.empty()) return;
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + tok + "'");
    }
    tok.clear();
  };
  for (char ch : text) {
    if (ch == ';' || ch == ',') flush();
    else tok += ch;
  }
  flush();
  if (v.empty()) throw ConfigError("empty prediction");
  if (game.is_log_loss())
    return v.size() == 1 ? game.from_parameter(v[0]) : Prediction::distribution(std::move(v));
  if (v.size() != 1) throw ConfigError("scalar game needs a single number");
  return v[0];
}

}  // namespace detail

/// Closed form when asked for (or when available under "auto"), otherwise
/// bisection. Unbounded games are searched over bounds covering both inputs.
inline DivergenceResult compute_divergence(const Game& game, const Prediction& g1,
                                           const Prediction& g2, double alpha, DivergenceSide side,
                                           const std::string& method, double tol) {
  const bool closed = method == "closed_form" || (method == "auto" && has_closed_form_divergence(game));
  if (method != "auto" && method != "closed_form" && method != "numeric")
    throw ConfigError("method must be auto, closed_form or numeric");
  if (closed || side == DivergenceSide::Standard) return closed_form_divergence(game, g1, g2, alpha, side);

  Game g = game;
  if (!game.bounded()) {
    const double lo = std::min({game.lo(), g1.scalar(), g2.scalar()});
    const double hi = std::max({game.hi(), g1.scalar(), g2.scalar()});
    g = game.with_bounds(lo, hi);
  }
  BisectionOptions opts;
  opts.tol = tol;
  return side == DivergenceSide::Lower ? lower_alpha_divergence_numeric(g, g1, g2, alpha, opts)
                                       : upper_alpha_divergence_numeric(g, g1, g2, alpha, opts);
}

inline int cmd_divergence(const DivergenceArgs& args, std::ostream& out, std::ostream& err) {
  try {
    GameDescriptor d;
    d.kind = game_kind_from_string(args.game);
    d.m = args.m;
    const Game game(d);
    const auto g1 = detail::parse_prediction(game, args.g1);
    const auto g2 = detail::parse_prediction(game, args.g2);
    const auto r = compute_divergence(game, g1, g2, args.alpha,
                                      divergence_side_from_string(args.side), args.method, args.tol);
    out << to_json(r).dump() << '\n';
    return kPass;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

namespace detail {

inline int run_divergence_config(const RunConfig& cfg, std::ostream& out) {
  const Game game(cfg.game);
  bool ok = true;
  json results = json::array();
  for (const auto& q : cfg.queries) {
    const auto r = compute_divergence(game, q.g1, q.g2, q.alpha, q.side, q.method, q.tol);
    json j = to_json(r);
    bool pass = true;
    if (q.expect_value) pass = pass && std::abs(r.value - *q.expect_value) <= q.expect_tol;
    if (q.expect_shift) pass = pass && std::abs(r.shift - *q.expect_shift) <= q.expect_tol;
    if (q.expect_value || q.expect_shift) j["pass"] = pass;
    ok = ok && pass;
    results.push_back(j);
  }
  json rep{{"game", to_json(cfg.game)}, {"results", results}, {"pass", ok}};
  out << rep.dump(2) << '\n';
  return ok ? kPass : kCheckFailure;
}

}  // namespace detail

inline int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_run_config(args.config);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    if (cfg.mode == "divergence") return detail::run_divergence_config(cfg, out);
    const std::uint64_t seed = args.seed.value_or(cfg.seed);
    const Trace trace = run_config(cfg, seed);
    RunReport rep = verify_run(trace, cfg.checks, cfg.thresholds);
    json j = to_json(rep);
    j["config"] = cfg.source;
    j["game"] = to_json(trace.game);
    j["strategies"] = {{"nature", trace.meta.nature},
                       {"predictor1", trace.meta.predictor1},
                       {"predictor2", trace.meta.predictor2},
                       {"sceptic", trace.meta.sceptic}};
    if (auto p = args.trace_path ? args.trace_path : cfg.trace_path)
      detail::write_file(*p, trace_csv(trace));
    if (auto p = args.report_path ? args.report_path : cfg.report_path)
      detail::write_file(*p, j.dump(2) + "\n");
    else
      out << j.dump(2) << '\n';
    for (const auto& w : trace.meta.warnings) err << "warning: " << w << '\n';
    return rep.all_checks_pass() ? kPass : kCheckFailure;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << '\n';
    return kCheckFailure;
  }
}

struct SweepOutcome {
  std::uint64_t seed = 0;
  std::optional<RunReport> report;
  std::string error;
};

/// Runs every seed; results are keyed by seed, independent of thread timing.
inline std::vector<SweepOutcome> run_sweep(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                           unsigned threads) {
  std::vector<SweepOutcome> results(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      results[i].seed = seeds[i];
      try {
        results[i].report = verify_run(run_config(cfg, seeds[i]), cfg.checks, cfg.thresholds);
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, seeds.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

inline json aggregate_sweep(const std::vector<SweepOutcome>& results, bool& all_pass) {
  all_pass = true;
  std::map<std::string, CheckResult> worst;
  std::map<std::string, std::map<std::string, int>> histogram;
  json failed = json::array();
  json per_seed = json::object();
  for (const auto& r : results) {
    if (!r.report) {
      all_pass = false;
      failed.push_back({{"seed", r.seed}, {"error", r.error}});
      continue;
    }
    if (!r.report->all_checks_pass()) {
      all_pass = false;
      failed.push_back({{"seed", r.seed}, {"error", "check failure"}});
    }
    for (const auto& c : r.report->checks) {
      auto [it, fresh] = worst.try_emplace(c.name, c);
      auto& w = it->second;
      if (!fresh) {
        const bool worse = c.exact ? std::abs(c.worst) > std::abs(w.worst) : c.worst < w.worst;
        if (worse) w.worst = c.worst;
        w.best = std::max(w.best, c.best);
        w.pass = w.pass && c.pass;
      }
    }
    for (const auto& v : r.report->verdicts) ++histogram[v.statement][std::string(to_string(v.verdict))];
    per_seed[std::to_string(r.seed)] = {{"pass", r.report->all_checks_pass()},
                                        {"loss_gap1", number_json(r.report->loss_gap1)},
                                        {"loss_gap2", number_json(r.report->loss_gap2)},
                                        {"gap_sum_sq", number_json(r.report->gap_sum_sq)}};
  }
  json checks = json::object();
  for (const auto& [name, c] : worst) checks[name] = to_json(c);
  return {{"runs", results.size()},
          {"checks", checks},
          {"verdicts", histogram},
          {"failed", failed},
          {"per_seed", per_seed},
          {"pass", all_pass}};
}

inline int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_run_config(args.config);
    if (cfg.mode != "run") throw ConfigError("sweep needs a run config");
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const auto seeds = args.seeds ? *args.seeds : cfg.seeds;
  if (seeds.empty()) {
    err << "config error: sweep needs at least one seed\n";
    return kConfigError;
  }
  bool all_pass = true;
  json agg = aggregate_sweep(run_sweep(cfg, seeds, args.threads), all_pass);
  agg["config"] = cfg.source;
  try {
    if (auto p = args.out_path ? args.out_path : cfg.aggregate_path)
      detail::write_file(*p, agg.dump(2) + "\n");
    else
      out << agg.dump(2) << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return all_pass ? kPass : kCheckFailure;
}

}  // namespace jeffreys::cli
