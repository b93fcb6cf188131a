#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spectrum/cli.hpp"

namespace {

void parse_m_range(const std::string& text, spectrum::RunOptions& opts) {
  std::size_t sep = text.find("..");
  if (sep == std::string::npos)
    throw CLI::ValidationError("--m-range", "expected A..B");
  try {
    opts.m_from = std::stoi(text.substr(0, sep));
    opts.m_to = std::stoi(text.substr(sep + 2));
  } catch (const std::exception&) {
    throw CLI::ValidationError("--m-range", "expected integers A..B");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium pricing for quality-differentiated spectrum markets"};
  app.require_subcommand(1);

  spectrum::RunOptions opts;
  std::string m_range;
  bool exact_ropt = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "market description file")->required();
    cmd->add_option("--out", opts.out_dir, "directory for CSV reports");
    return cmd;
  };
  auto add_seeded = [&](CLI::App* cmd) {
    cmd->add_option("--seed", [&opts](const CLI::results_t& res) {
      opts.seed = std::stoull(res[0]);
      return true;
    }, "override the sampling seed")->expected(1);
    cmd->add_option("--trials", opts.trials, "Monte Carlo rounds");
    cmd->add_option("--threads", opts.threads, "worker threads (0 = auto)");
    return cmd;
  };
  auto add_exact = [&](CLI::App* cmd) {
    cmd->add_option("--exact-ropt", exact_ropt,
                    "force exact (1) or Monte Carlo (0) optimal revenue")
        ->each([&](const std::string&) { opts.exact_ropt = exact_ropt; });
    return cmd;
  };

  add_common(app.add_subcommand("solve", "solve and print the pricing strategy"));

  CLI::App* verify =
      add_common(app.add_subcommand("verify", "check assumptions, structure and payoffs"));
  verify->add_option("--grid", opts.grid, "assumption probe grid size");
  verify->add_option("--points", opts.points, "payoff probes per band");

  add_seeded(add_common(
      app.add_subcommand("simulate", "play Monte Carlo rounds under the strategy")));

  CLI::App* efficiency = add_exact(add_seeded(add_common(
      app.add_subcommand("efficiency", "equilibrium vs optimal revenue"))));
  efficiency->add_option("--eps", opts.regime_eps, "regime classification margin");

  CLI::App* sweep = add_exact(add_seeded(
      add_common(app.add_subcommand("sweep", "efficiency across demand levels"))));
  sweep->add_option("--m-range", m_range, "demand range A..B")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? spectrum::kExitOk : spectrum::kExitConfigError;
  }

  opts.command = app.get_subcommands().front()->get_name();
  if (opts.command == "sweep") {
    try {
      parse_m_range(m_range, opts);
    } catch (const CLI::Error& e) {
      std::cerr << e.what() << "\n";
      return spectrum::kExitConfigError;
    }
  }
  return spectrum::run_command(opts, std::cout, std::cerr);
}
