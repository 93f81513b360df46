#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jeffreys/cli.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  // "1,2,5" or "1-100" or a mix
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string part = text.substr(pos, comma - pos);
    if (!part.empty()) {
      const auto dash = part.find('-');
      if (dash == std::string::npos) {
        seeds.push_back(std::stoull(part));
      } else {
        const auto a = std::stoull(part.substr(0, dash));
        const auto b = std::stoull(part.substr(dash + 1));
        for (auto s = a; s <= b; ++s) seeds.push_back(s);
      }
    }
    pos = comma + 1;
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  namespace jc = jeffreys::cli;
  CLI::App app{"Competitive prediction protocol simulator"};
  app.require_subcommand(1);

  jc::RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run one scenario and verify it");
  run_cmd->add_option("config", run.config, "scenario JSON")->required();
  run_cmd->add_option("--seed", run.seed, "override the scenario seed");
  run_cmd->add_option("--trace", run.trace_path, "trace CSV output path");
  run_cmd->add_option("--report", run.report_path, "report JSON output path");

  jc::SweepArgs sweep;
  std::string seed_text;
  bool seeds_given = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a scenario over many seeds");
  sweep_cmd->add_option("config", sweep.config, "scenario JSON")->required();
  sweep_cmd->add_option("--seeds", seed_text, "seed list, e.g. 1-100 or 1,4,9")
      ->each([&](const std::string&) { seeds_given = true; });
  sweep_cmd->add_option("--out", sweep.out_path, "aggregate JSON output path");
  sweep_cmd->add_option("--threads", sweep.threads, "worker threads (0: all cores)");

  jc::DivergenceArgs div;
  auto* div_cmd = app.add_subcommand("divergence", "lower/upper alpha-divergence of two predictions");
  div_cmd->add_option("--game", div.game, "absolute, square, bounded_square, bounded_absolute, quartic, log_loss");
  div_cmd->add_option("--g1", div.g1, "first prediction (log_loss: p or p0;p1;...)")->required();
  div_cmd->add_option("--g2", div.g2, "second prediction")->required();
  div_cmd->add_option("--alpha", div.alpha, "alpha in (-1, 1)");
  div_cmd->add_option("--side", div.side, "lower, upper or standard");
  div_cmd->add_option("--method", div.method, "auto, closed_form or numeric");
  div_cmd->add_option("--tol", div.tol, "bisection tolerance");
  div_cmd->add_option("--m", div.m, "log-loss outcome count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : jc::kConfigError;
  }

  if (*run_cmd) return jc::cmd_run(run, std::cout, std::cerr);
  if (*sweep_cmd) {
    if (seeds_given) {
      try {
        sweep.seeds = parse_seed_list(seed_text);
      } catch (const std::exception&) {
        std::cerr << "config error: bad seed list '" << seed_text << "'\n";
        return jc::kConfigError;
      }
    }
    return jc::cmd_sweep(sweep, std::cout, std::cerr);
  }
  return jc::cmd_divergence(div, std::cout, std::cerr);
}
