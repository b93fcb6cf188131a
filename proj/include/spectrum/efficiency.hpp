#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "spectrum/equilibrium.hpp"
#include "spectrum/parallel.hpp"
#include "spectrum/simulator.hpp"

namespace spectrum {

// Expected equilibrium revenue of the whole market per round, net of costs:
// each of the l primaries holds state i with probability q_i and nets
// price(i) - cost in expectation.
inline double equilibrium_revenue(const EquilibriumStrategy& s) {
  const MarketConfig& cfg = s.config();
  double per_primary = 0.0;
  for (int i = 1; i <= cfg.n(); ++i)
    per_primary += cfg.q_of(i) * s.expected_profit(i);
  return cfg.l * per_primary;
}

namespace detail {
inline void binomial_pmf(int M, double p, const std::vector<double>& logfact,
                         std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(M) + 1, 0.0);
  if (M == 0 || p <= 0.0) {
    out[0] = 1.0;
    return;
  }
  if (p >= 1.0) {
    out[static_cast<std::size_t>(M)] = 1.0;
    return;
  }
  const double lp = std::log(p), lq = std::log1p(-p);
  for (int k = 0; k <= M; ++k)
    out[static_cast<std::size_t>(k)] =
        std::exp(logfact[static_cast<std::size_t>(M)] - logfact[static_cast<std::size_t>(k)] -
                 logfact[static_cast<std::size_t>(M - k)] + k * lp + (M - k) * lq);
}
}  // namespace detail

// Revenue of an omniscient allocator that sees every state and sells the
// min(demand, available) best-quality channels at the penalty cap. Exact
// expectation over states and demand; feasible only for small markets or few
// states (the state-count distribution is convolved explicitly).
inline double optimal_revenue_exact(const MarketConfig& cfg) {
  cfg.validate();
  const int l = cfg.l, n = cfg.n();
  if (l > 12 && n > 3)
    throw ConfigError("exact optimal revenue needs l <= 12 or n <= 3");

  std::vector<double> logfact(static_cast<std::size_t>(l) + 1, 0.0);
  for (int i = 1; i <= l; ++i)
    logfact[static_cast<std::size_t>(i)] =
        logfact[static_cast<std::size_t>(i - 1)] + std::log(static_cast<double>(i));

  // Demand levels and their masses, with everything at or above l collapsed
  // into one bucket (extra demand cannot be served).
  std::vector<std::pair<int, double>> demand;
  if (cfg.demand.is_fixed()) {
    demand.emplace_back(std::min(cfg.demand.fixed_m(), l), 1.0);
  } else {
    const auto& pmf = cfg.demand.pmf();
    double hi = 0.0;
    for (std::size_t k = 1; k < pmf.size(); ++k) {
      if (k < static_cast<std::size_t>(l)) {
        if (pmf[k] > 0.0) demand.emplace_back(static_cast<int>(k), pmf[k]);
      } else {
        hi += pmf[k];
      }
    }
    if (hi > 0.0) demand.emplace_back(l, hi);
  }

  double total = 0.0;
  std::vector<double> ps, pn;
  for (const auto& [m, mass] : demand) {
    double rev = 0.0;
    for (int j = n; j >= 1; --j) {
      // Sold units from state j: the allocator first serves the S primaries
      // in better states, then min(N_j, m - S) of the N_j in state j.
      const double q_better = cfg.suffix_q(j + 1);
      detail::binomial_pmf(l, q_better, logfact, ps);
      const double pj = cfg.q_of(j) / (1.0 - q_better);
      double expected_units = 0.0;
      for (int s = 0; s <= l && s < m; ++s) {
        if (ps[static_cast<std::size_t>(s)] == 0.0) continue;
        const int r = m - s;
        detail::binomial_pmf(l - s, pj, logfact, pn);
        double e = 0.0;
        for (int k = 0; k <= l - s; ++k)
          e += std::min(k, r) * pn[static_cast<std::size_t>(k)];
        expected_units += ps[static_cast<std::size_t>(s)] * e;
      }
      rev += expected_units * (cfg.penalty.price(j, cfg.cap) - cfg.cost);
    }
    total += mass * rev;
  }
  return total;
}

// Monte Carlo estimate of the omniscient-allocator revenue; draws demand and
// states with the same per-trial streams the market simulator uses.
inline Estimate optimal_revenue_monte_carlo(const MarketConfig& cfg, std::uint64_t trials,
                                            std::uint64_t seed,
                                            int threads = default_threads()) {
  cfg.validate();
  const int l = cfg.l, n = cfg.n();
  std::vector<double> margin(static_cast<std::size_t>(n) + 1, 0.0);
  for (int j = 1; j <= n; ++j)
    margin[static_cast<std::size_t>(j)] = cfg.penalty.price(j, cfg.cap) - cfg.cost;

  const std::uint64_t block = 1 << 14;
  const std::uint64_t blocks = (trials + block - 1) / block;
  std::vector<double> sum_b(blocks, 0.0), sumsq_b(blocks, 0.0);
  for_blocks(trials, block, threads,
             [&](std::uint64_t b, std::uint64_t begin, std::uint64_t end) {
               std::vector<int> count(static_cast<std::size_t>(n) + 1, 0);
               double sum = 0.0, sumsq = 0.0;
               for (std::uint64_t t = begin; t < end; ++t) {
                 RngStream rng(seed, t);
                 int m = cfg.demand.sample(rng);
                 std::fill(count.begin(), count.end(), 0);
                 for (int i = 0; i < l; ++i) {
                   double u = rng.uniform01();
                   double acc = 0.0;
                   for (int j = 1; j <= n; ++j) {
                     acc += cfg.q_of(j);
                     if (u < acc) {
                       ++count[static_cast<std::size_t>(j)];
                       break;
                     }
                   }
                 }
                 double rev = 0.0;
                 int remaining = std::max(0, m);
                 for (int j = n; j >= 1 && remaining > 0; --j) {
                   int take = std::min(count[static_cast<std::size_t>(j)], remaining);
                   rev += take * margin[static_cast<std::size_t>(j)];
                   remaining -= take;
                 }
                 sum += rev;
                 sumsq += rev * rev;
               }
               sum_b[b] = sum;
               sumsq_b[b] = sumsq;
             });
  double sum = 0.0, sumsq = 0.0;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    sum += sum_b[b];
    sumsq += sumsq_b[b];
  }
  Estimate e;
  e.trials = trials;
  if (trials == 0) return e;
  const double nt = static_cast<double>(trials);
  e.mean = sum / nt;
  if (trials > 1)
    e.std_err = std::sqrt(std::max(0.0, sumsq / nt - e.mean * e.mean) / (nt - 1.0));
  return e;
}

struct EfficiencyResult {
  double r_ne = 0.0;
  double r_opt = 0.0;
  double r_opt_std_err = 0.0;  // 0 when r_opt is exact
  double eta = 1.0;            // r_ne / r_opt
  bool exact = true;
};

inline double efficiency_ratio(double r_ne, double r_opt) {
  if (r_opt <= 0.0)
    return r_ne <= 0.0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
  return r_ne / r_opt;
}

inline EfficiencyResult compute_efficiency(const EquilibriumStrategy& s, bool exact = true,
                                           std::uint64_t trials = 100000,
                                           std::uint64_t seed = 1,
                                           int threads = default_threads()) {
  EfficiencyResult r;
  r.r_ne = equilibrium_revenue(s);
  r.exact = exact;
  if (exact) {
    r.r_opt = optimal_revenue_exact(s.config());
  } else {
    Estimate e = optimal_revenue_monte_carlo(s.config(), trials, seed, threads);
    r.r_opt = e.mean;
    r.r_opt_std_err = e.std_err;
  }
  r.eta = efficiency_ratio(r.r_ne, r.r_opt);
  return r;
}

// ---------------------------------------------------------------------------
// Large-market demand regimes under fixed demand m. With x = m / (l - 1):
// above Q_1 every participant's price tends to the cap; between Q_i and
// Q_{i-1} only states i..n keep profiting, anchored at the break-even penalty
// of state i-1; below Q_n all profits vanish. The epsilon margin keeps the
// classification away from the thresholds, where convergence is slow.

enum class RegimeKind { Low, Middle, High, Transition };

struct Regime {
  RegimeKind kind = RegimeKind::Transition;
  int band = 0;  // lowest still-profitable state for Middle
  double per_primary_limit = 0.0;
};

inline const char* regime_name(RegimeKind k) {
  switch (k) {
    case RegimeKind::Low: return "low";
    case RegimeKind::Middle: return "middle";
    case RegimeKind::High: return "high";
    case RegimeKind::Transition: return "transition";
  }
  return "?";
}

inline Regime classify_regime(const MarketConfig& cfg, double epsilon) {
  if (!cfg.demand.is_fixed())
    throw ConfigError("demand regimes are defined for fixed demand only");
  const int n = cfg.n();
  const double x = static_cast<double>(cfg.demand.fixed_m()) / (cfg.l - 1);
  Regime r;
  if (x >= cfg.suffix_q(1) + epsilon) {
    r.kind = RegimeKind::High;
    for (int j = 1; j <= n; ++j)
      r.per_primary_limit +=
          cfg.q_of(j) * (cfg.penalty.price(j, cfg.cap) - cfg.cost);
    return r;
  }
  if (x <= cfg.suffix_q(n) - epsilon) {
    r.kind = RegimeKind::Low;
    return r;
  }
  for (int i = 2; i <= n; ++i) {
    if (x >= cfg.suffix_q(i) + epsilon && x <= cfg.suffix_q(i - 1) - epsilon) {
      r.kind = RegimeKind::Middle;
      r.band = i;
      const double anchor = cfg.penalty.penalty(i - 1, cfg.cost);
      for (int j = i; j <= n; ++j)
        r.per_primary_limit +=
            cfg.q_of(j) * (cfg.penalty.price(j, anchor) - cfg.cost);
      return r;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Parameter sweeps; a failing point is captured in its row instead of
// aborting the whole sweep.

struct SweepRow {
  double parameter = 0.0;  // demand m, or the q scale factor
  double r_ne = std::numeric_limits<double>::quiet_NaN();
  double r_opt = std::numeric_limits<double>::quiet_NaN();
  double r_opt_std_err = 0.0;
  double eta = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

inline std::vector<SweepRow> sweep_demand(const MarketConfig& base, int m_from, int m_to,
                                          bool exact = true, std::uint64_t trials = 100000,
                                          std::uint64_t seed = 1,
                                          int threads = default_threads()) {
  if (m_from < 1 || m_to < m_from) throw ConfigError("demand sweep needs 1 <= from <= to");
  std::vector<SweepRow> rows;
  for (int m = m_from; m <= m_to; ++m) {
    SweepRow row;
    row.parameter = m;
    try {
      MarketConfig cfg = base;
      cfg.demand = DemandModel::fixed(m);
      EquilibriumStrategy s(cfg);
      EfficiencyResult e = compute_efficiency(s, exact, trials, seed, threads);
      row.r_ne = e.r_ne;
      row.r_opt = e.r_opt;
      row.r_opt_std_err = e.r_opt_std_err;
      row.eta = e.eta;
    } catch (const std::exception& ex) {
      row.error = ex.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<SweepRow> sweep_state_scale(const MarketConfig& base,
                                               const std::vector<double>& scales,
                                               bool exact = true,
                                               std::uint64_t trials = 100000,
                                               std::uint64_t seed = 1,
                                               int threads = default_threads()) {
  std::vector<SweepRow> rows;
  for (double scale : scales) {
    SweepRow row;
    row.parameter = scale;
    try {
      MarketConfig cfg = base;
      for (double& qi : cfg.q) qi *= scale;
      EquilibriumStrategy s(cfg);
      EfficiencyResult e = compute_efficiency(s, exact, trials, seed, threads);
      row.r_ne = e.r_ne;
      row.r_opt = e.r_opt;
      row.r_opt_std_err = e.r_opt_std_err;
      row.eta = e.eta;
    } catch (const std::exception& ex) {
      row.error = ex.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace spectrum
