#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "jeffreys/divergence.hpp"
#include "jeffreys/game.hpp"
#include "jeffreys/protocol.hpp"
#include "jeffreys/strategy.hpp"

namespace jeffreys {

using json = nlohmann::json;

/// Round-trip decimal formatting (17 significant digits).
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_prediction(const Prediction& g) {
  std::string s;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i) s += ';';
    s += format_double(g[i]);
  }
  return s;
}

inline constexpr const char* kTraceHeader =
    "n,gamma1,gamma2,gamma_sceptic,omega,loss1,loss2,loss_sceptic,cum1,cum2,cum_sceptic,gap,"
    "divergence_term";

inline void write_trace_csv(std::ostream& os, const Trace& trace) {
  os << kTraceHeader << '\n';
  for (const auto& r : trace.steps) {
    os << r.n << ',' << format_prediction(r.gamma1) << ',' << format_prediction(r.gamma2) << ','
       << format_prediction(r.gamma_sceptic) << ',' << format_double(r.omega) << ','
       << format_double(r.loss1) << ',' << format_double(r.loss2) << ','
       << format_double(r.loss_sceptic) << ',' << format_double(r.cum1) << ','
       << format_double(r.cum2) << ',' << format_double(r.cum_sceptic) << ','
       << format_double(r.gap) << ',' << format_double(r.divergence_term) << '\n';
  }
}

inline std::string trace_csv(const Trace& trace) {
  std::ostringstream os;
  write_trace_csv(os, trace);
  return os.str();
}

/// JSON has no infinities: they are written as the strings "inf" / "-inf".
inline json number_json(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline double number_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "infinity") return kInf;
    if (s == "-inf" || s == "-infinity") return -kInf;
    throw ConfigError("expected a number, got \"" + s + "\"");
  }
  if (!j.is_number()) throw ConfigError("expected a number, got " + j.dump());
  return j.get<double>();
}

inline json to_json(const GameDescriptor& d) {
  json j{{"kind", std::string(to_string(d.kind))}, {"grid_size", d.grid_size}};
  if (d.lo && d.hi) j["bounds"] = {number_json(*d.lo), number_json(*d.hi)};
  if (d.outcome_grid_size) j["outcome_grid_size"] = d.outcome_grid_size;
  if (d.kind == GameKind::LogLossFinite) j["m"] = d.m;
  return j;
}

inline GameDescriptor game_descriptor_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("game must be an object");
  GameDescriptor d;
  try {
    d.kind = game_kind_from_string(j.at("kind").get<std::string>());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    if (!b.is_array() || b.size() != 2) throw ConfigError("game bounds must be [lo, hi]");
    d.lo = number_from_json(b[0]);
    d.hi = number_from_json(b[1]);
  }
  if (j.contains("grid_size")) d.grid_size = j.at("grid_size").get<std::size_t>();
  if (j.contains("outcome_grid_size")) d.outcome_grid_size = j.at("outcome_grid_size").get<std::size_t>();
  if (j.contains("m")) d.m = j.at("m").get<std::size_t>();
  return d;
}

inline json to_json(const DivergenceResult& r) {
  return {{"alpha", r.alpha},
          {"side", std::string(to_string(r.side))},
          {"value", number_json(r.value)},
          {"shift", number_json(r.shift)},
          {"method", std::string(to_string(r.method))},
          {"tol", r.tol},
          {"bracketed", r.bracketed}};
}

inline json to_json(const CheckResult& c) {
  return {{"name", c.name},
          {"worst", number_json(c.worst)},
          {"best", number_json(c.best)},
          {"pass", c.pass},
          {"exact", c.exact}};
}

inline json to_json(const RunReport& r) {
  json verdicts = json::object();
  for (const auto& v : r.verdicts) {
    json all = json::array();
    for (auto a : v.applicable) all.push_back(std::string(to_string(a)));
    verdicts[v.statement] = {{"verdict", std::string(to_string(v.verdict))}, {"applicable", all}};
  }
  json checks = json::object();
  for (const auto& c : r.checks) checks[c.name] = to_json(c);
  return {{"seed", r.seed},
          {"horizon", r.horizon},
          {"cum1", number_json(r.cum1)},
          {"cum2", number_json(r.cum2)},
          {"cum_sceptic", number_json(r.cum_sceptic)},
          {"gap_sum_sq", number_json(r.gap_sum_sq)},
          {"loss_gap1", number_json(r.loss_gap1)},
          {"loss_gap2", number_json(r.loss_gap2)},
          {"thresholds", {{"gap_sum_max", r.thresholds.gap_sum_max},
                          {"loss_gap_min", r.thresholds.loss_gap_min}}},
          {"verdicts", verdicts},
          {"checks", checks},
          {"pass", r.all_checks_pass()},
          {"truncated", r.truncated},
          {"warnings", r.warnings}};
}

/// Outcomes separated by whitespace, commas or newlines; '#' starts a comment.
inline std::vector<double> parse_outcomes(std::istream& is) {
  std::vector<double> out;
  std::string line;
  while (std::getline(is, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& ch : line)
      if (ch == ',' || ch == ';') ch = ' ';
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError("replay: not a number: '" + tok + "'");
      }
    }
  }
  return out;
}

inline std::vector<double> read_outcomes_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open replay file '" + path + "'");
  return parse_outcomes(in);
}

}  // namespace jeffreys
