#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "spectrum/config_io.hpp"
#include "spectrum/efficiency.hpp"
#include "spectrum/equilibrium.hpp"
#include "spectrum/simulator.hpp"
#include "spectrum/verification.hpp"

namespace spectrum {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerificationFailed = 1,
  kExitConfigError = 2,
  kExitNumericError = 3,
};

struct RunOptions {
  std::string command;
  std::string config_path;
  std::string out_dir;  // empty: print only, write nothing
  std::optional<std::uint64_t> seed;
  std::uint64_t trials = 100000;
  int grid = 512;     // penalty-assumption probe grid
  int points = 1000;  // payoff probes per band
  int threads = 0;    // 0: one per hardware thread
  int m_from = 0, m_to = 0;
  std::optional<bool> exact_ropt;  // unset: choose by market size
  double regime_eps = 0.05;
};

namespace detail {

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumericError;
  } catch (const DomainError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumericError;
  }
}

inline int threads_of(const RunOptions& o) {
  return o.threads > 0 ? o.threads : default_threads();
}

inline std::uint64_t seed_of(const RunOptions& o, const ParsedConfig& cfg) {
  if (o.seed) return *o.seed;
  if (cfg.seed) return *cfg.seed;
  return 12345;
}

inline bool want_exact_ropt(const RunOptions& o, const MarketConfig& cfg) {
  if (o.exact_ropt) return *o.exact_ropt;
  return cfg.l <= 12 || cfg.n() <= 3;
}

class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }
  bool enabled() const { return !dir_.empty(); }
  std::ofstream open(const std::string& filename) const {
    std::filesystem::path p = std::filesystem::path(dir_) / filename;
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write output file '" + p.string() + "'");
    return out;
  }

 private:
  std::string dir_;
};

inline void write_manifest(const OutputDir& out, const RunOptions& o,
                           const ParsedConfig& cfg,
                           const std::vector<std::string>& files) {
  if (!out.enabled()) return;
  std::ofstream m = out.open("manifest.txt");
  m << "command=" << o.command << "\n";
  m << "config=" << o.config_path << "\n";
  m << "config_hash=" << hash_string(config_hash(cfg.market)) << "\n";
  m << "seed=" << seed_of(o, cfg) << "\n";
  m << "trials=" << o.trials << "\n";
  m << "threads=" << threads_of(o) << "\n";
  for (const std::string& f : files) m << "file=" << f << "\n";
}

inline void print_strategy(std::ostream& os, const EquilibriumStrategy& s) {
  const MarketConfig& cfg = s.config();
  os << "market: l=" << cfg.l << " n=" << cfg.n() << " cost=" << g12(cfg.cost)
     << " cap=" << g12(cfg.cap) << " family=" << family_name(cfg.penalty.family());
  if (cfg.demand.is_fixed())
    os << " demand=" << cfg.demand.fixed_m();
  else
    os << " demand=pmf[" << cfg.demand.pmf().size() << "]";
  os << (s.is_degenerate() ? " (saturated: all mass at the cap)" : "") << "\n";
  os << "state      q       blocking     survival     profit       price"
        "        band                       price_range\n";
  for (int i = 1; i <= s.states(); ++i) {
    char line[320];
    std::snprintf(line, sizeof(line),
                  "%4d  %8.5f  %11.5e  %11.5e  %11.5e  %11.5e  [%.6g, %.6g]  [%.6g, %.6g]",
                  i, cfg.q_of(i), s.blocking(i), s.survival(i), s.expected_profit(i),
                  s.price(i), s.support_lower(i), s.support_upper(i), s.price_floor(i),
                  s.price_ceiling(i));
    os << line << "\n";
  }
  os << "equilibrium revenue per round: " << g12(equilibrium_revenue(s)) << "\n";
}

}  // namespace detail

inline int run_solve(const RunOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    ParsedConfig cfg = load_config(o.config_path);
    EquilibriumStrategy s(cfg.market);
    detail::print_strategy(out, s);
    detail::OutputDir dir(o.out_dir);
    if (dir.enabled()) {
      auto f = dir.open("strategy.csv");
      write_strategy_csv(f, s);
      detail::write_manifest(dir, o, cfg, {"strategy.csv"});
    }
    return kExitOk;
  });
}

inline int run_verify(const RunOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    ParsedConfig cfg = load_config(o.config_path);
    bool all_pass = true;

    PenaltyValidation assumptions = cfg.market.check_assumptions(o.grid);
    all_pass = all_pass && assumptions.ok;
    out << "assumptions: " << (assumptions.ok ? "PASS" : "FAIL") << "\n";
    if (!assumptions.ok) {
      out << "  " << assumptions.detail << "\n";
      return kExitVerificationFailed;  // cannot solve on broken premises
    }

    EquilibriumStrategy s(cfg.market);
    StructureReport structure = verify_structure(s);
    all_pass = all_pass && structure.pass;
    out << "structure: " << (structure.pass ? "PASS" : "FAIL") << " ("
        << structure.rows.size() << " checks)\n";
    for (const StructureRow& r : structure.rows)
      if (!r.pass)
        out << "  FAIL " << r.check << " state " << r.state << ": value "
            << g12(r.value) << " vs bound " << g12(r.bound) << "\n";

    PayoffReport payoff =
        verify_equilibrium(s, o.points, cfg.tol_on_support, cfg.tol_off_support);
    all_pass = all_pass && payoff.pass;
    out << "payoff: " << (payoff.pass ? "PASS" : "FAIL")
        << " (max indifference err " << g12(payoff.max_indifference_err)
        << ", max gain " << g12(payoff.max_gain) << ")\n";
    for (const PayoffRow& r : payoff.rows)
      if (!r.pass)
        out << "  FAIL state " << r.state << " interval " << r.interval << " ("
            << (r.indifference ? "indifference" : "no_gain") << "): err "
            << g12(r.max_err) << " at x=" << g12(r.worst_x) << "\n";

    detail::OutputDir dir(o.out_dir);
    if (dir.enabled()) {
      {
        auto f = dir.open("verify_structure.csv");
        write_structure_csv(f, cfg.market, structure);
      }
      {
        auto f = dir.open("verify_payoff.csv");
        write_payoff_csv(f, cfg.market, payoff);
      }
      detail::write_manifest(dir, o, cfg, {"verify_structure.csv", "verify_payoff.csv"});
    }
    return all_pass ? kExitOk : kExitVerificationFailed;
  });
}

inline int run_simulate(const RunOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    ParsedConfig cfg = load_config(o.config_path);
    EquilibriumStrategy s(cfg.market);
    MarketSimulator sim(s);
    const std::uint64_t seed = detail::seed_of(o, cfg);
    MarketStats st = sim.simulate_market(o.trials, seed, detail::threads_of(o));
    out << "trials=" << st.trials << " seed=" << seed << "\n";
    out << "revenue/round: simulated " << g12(st.mean_revenue) << " +/- "
        << g12(st.revenue_std_err) << ", analytic " << g12(equilibrium_revenue(s))
        << "\n";
    out << "mean demand " << g12(st.mean_demand) << ", mean channels sold "
        << g12(st.mean_sold) << "\n";
    for (int i = 1; i <= s.states(); ++i) {
      const StateStats& ss = st.per_state[static_cast<std::size_t>(i - 1)];
      out << "state " << i << ": profit " << g12(ss.mean_profit) << " +/- "
          << g12(ss.std_err) << " (analytic " << g12(s.expected_profit(i))
          << ", " << ss.sales << "/" << ss.observations << " sold)\n";
    }
    detail::OutputDir dir(o.out_dir);
    if (dir.enabled()) {
      auto f = dir.open("simulate.csv");
      write_market_stats_csv(f, s, st);
      detail::write_manifest(dir, o, cfg, {"simulate.csv"});
    }
    return kExitOk;
  });
}

inline int run_efficiency(const RunOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    ParsedConfig cfg = load_config(o.config_path);
    EquilibriumStrategy s(cfg.market);
    const bool exact = detail::want_exact_ropt(o, cfg.market);
    EfficiencyResult r = compute_efficiency(s, exact, o.trials, detail::seed_of(o, cfg),
                                            detail::threads_of(o));
    out << "r_ne=" << g12(r.r_ne) << "\n";
    out << "r_opt=" << g12(r.r_opt) << (r.exact ? " (exact)" : " (monte carlo)");
    if (!r.exact) out << " +/- " << g12(r.r_opt_std_err);
    out << "\n";
    out << "eta=" << g12(r.eta) << "\n";
    if (cfg.market.demand.is_fixed()) {
      Regime regime = classify_regime(cfg.market, o.regime_eps);
      out << "regime=" << regime_name(regime.kind);
      if (regime.kind == RegimeKind::Middle) out << " band=" << regime.band;
      if (regime.kind != RegimeKind::Transition)
        out << " per_primary_limit=" << g12(regime.per_primary_limit)
            << " per_primary_actual=" << g12(r.r_ne / cfg.market.l);
      out << "\n";
    }
    detail::OutputDir dir(o.out_dir);
    if (dir.enabled()) {
      auto f = dir.open("efficiency.csv");
      write_efficiency_csv(f, cfg.market, r);
      detail::write_manifest(dir, o, cfg, {"efficiency.csv"});
    }
    return kExitOk;
  });
}

inline int run_sweep(const RunOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (o.m_from < 1 || o.m_to < o.m_from)
      throw ConfigError("sweep needs --m-range A..B with 1 <= A <= B");
    ParsedConfig cfg = load_config(o.config_path);
    const bool exact = detail::want_exact_ropt(o, cfg.market);
    std::vector<SweepRow> rows =
        sweep_demand(cfg.market, o.m_from, o.m_to, exact, o.trials,
                     detail::seed_of(o, cfg), detail::threads_of(o));
    out << "m,r_ne,r_opt,eta\n";
    std::size_t failed = 0;
    for (const SweepRow& r : rows) {
      if (r.error.empty()) {
        out << r.parameter << ',' << g12(r.r_ne) << ',' << g12(r.r_opt) << ','
            << g12(r.eta) << "\n";
      } else {
        ++failed;
        out << r.parameter << ",,,," << r.error << "\n";
      }
    }
    detail::OutputDir dir(o.out_dir);
    if (dir.enabled()) {
      auto f = dir.open("sweep.csv");
      write_sweep_csv(f, cfg.market, rows);
      detail::write_manifest(dir, o, cfg, {"sweep.csv"});
    }
    return failed == rows.size() ? kExitNumericError : kExitOk;
  });
}

inline int run_command(const RunOptions& o, std::ostream& out, std::ostream& err) {
  if (o.command == "solve") return run_solve(o, out, err);
  if (o.command == "verify") return run_verify(o, out, err);
  if (o.command == "simulate") return run_simulate(o, out, err);
  if (o.command == "efficiency") return run_efficiency(o, out, err);
  if (o.command == "sweep") return run_sweep(o, out, err);
  err << "unknown command '" << o.command << "'\n";
  return kExitConfigError;
}

}  // namespace spectrum
