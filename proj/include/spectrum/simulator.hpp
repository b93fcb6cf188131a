#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "spectrum/equilibrium.hpp"
#include "spectrum/parallel.hpp"
#include "spectrum/rng.hpp"

namespace spectrum {

// Raw outcome of one market round.
struct Trial {
  int demand = 0;
  std::vector<int> state;       // per primary; 0 = sitting out this round
  std::vector<double> penalty;  // meaningful where state >= 1
  std::vector<double> price;    // filled for sold channels only
  std::vector<char> sold;
  double revenue = 0.0;         // sum of price - cost over sold channels
};

// Per-trial scratch space; reuse one per thread to avoid reallocation.
struct TrialWorkspace {
  Trial trial;
  std::vector<std::pair<double, int>> order;
};

struct Estimate {
  double mean = 0.0;
  double std_err = 0.0;
  std::uint64_t trials = 0;
};

struct StateStats {
  std::uint64_t observations = 0;  // primary-rounds spent in this state
  std::uint64_t sales = 0;
  double mean_profit = 0.0;
  double std_err = 0.0;  // treats primary-rounds as independent samples
};

struct MarketStats {
  std::uint64_t trials = 0;
  double mean_revenue = 0.0;
  double revenue_std_err = 0.0;
  double mean_demand = 0.0;
  double mean_sold = 0.0;
  std::vector<StateStats> per_state;  // index = state - 1
};

// Plays rounds of the market under a given pricing strategy. Each trial
// draws, in this fixed order: the demand, every primary's state (ascending
// index), every participant's penalty (ascending index), then any tie-break
// shuffles (ascending penalty). Trial t under seed s uses the dedicated
// stream (s, t), so results are reproducible for any thread count.
class MarketSimulator {
 public:
  explicit MarketSimulator(const EquilibriumStrategy& strategy)
      : strat_(strategy), cfg_(strategy.config()) {}

  // One full round with every primary following the strategy.
  void run_trial(std::uint64_t seed, std::uint64_t trial, TrialWorkspace& ws) const {
    RngStream rng(seed, trial);
    draw_round(rng, -1, 0, 0.0, ws.trial);
    allocate(rng, ws);
  }

  // One round with primary 0 frozen in state `pinned_state` at penalty
  // `pinned_x`; the other l - 1 primaries follow the strategy.
  void run_pinned_trial(std::uint64_t seed, std::uint64_t trial, int pinned_state,
                        double pinned_x, TrialWorkspace& ws) const {
    RngStream rng(seed, trial);
    draw_round(rng, 0, pinned_state, pinned_x, ws.trial);
    allocate(rng, ws);
  }

  // Expected profit of a primary frozen at penalty level x in state `state`
  // while everyone else plays the strategy. The profit is (f_state(x) - cost)
  // times a sale indicator, so the error bar is exact Bernoulli.
  Estimate estimate_state_payoff(int state, double x, std::uint64_t trials,
                                 std::uint64_t seed, int threads = default_threads()) const {
    if (state < 1 || state > cfg_.n()) throw DomainError("state index out of range 1..n");
    const double margin =
        x <= cfg_.cap ? cfg_.penalty.price(state, x) - cfg_.cost : 0.0;
    const std::uint64_t block = 1 << 16;
    const std::uint64_t blocks = (trials + block - 1) / block;
    std::vector<std::uint64_t> sold_in_block(blocks, 0);
    for_blocks(trials, block, threads,
               [&](std::uint64_t b, std::uint64_t begin, std::uint64_t end) {
                 TrialWorkspace ws;
                 std::uint64_t hits = 0;
                 for (std::uint64_t t = begin; t < end; ++t) {
                   run_pinned_trial(seed, t, state, x, ws);
                   hits += ws.trial.sold[0] ? 1 : 0;
                 }
                 sold_in_block[b] = hits;
               });
    std::uint64_t hits = 0;
    for (std::uint64_t h : sold_in_block) hits += h;
    const double p = trials == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(trials);
    Estimate e;
    e.trials = trials;
    e.mean = margin * p;
    e.std_err = trials == 0
                    ? 0.0
                    : std::abs(margin) * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
    return e;
  }

  MarketStats simulate_market(std::uint64_t trials, std::uint64_t seed,
                              int threads = default_threads()) const {
    const int n = cfg_.n();
    struct BlockAcc {
      double rev = 0.0, rev2 = 0.0, demand = 0.0, sold = 0.0;
      std::vector<std::uint64_t> obs, sales;
      std::vector<double> profit, profit2;
    };
    const std::uint64_t block = 1 << 14;
    const std::uint64_t blocks = (trials + block - 1) / block;
    std::vector<BlockAcc> acc(blocks);
    for_blocks(trials, block, threads,
               [&](std::uint64_t b, std::uint64_t begin, std::uint64_t end) {
                 BlockAcc a;
                 a.obs.assign(static_cast<std::size_t>(n), 0);
                 a.sales.assign(static_cast<std::size_t>(n), 0);
                 a.profit.assign(static_cast<std::size_t>(n), 0.0);
                 a.profit2.assign(static_cast<std::size_t>(n), 0.0);
                 TrialWorkspace ws;
                 for (std::uint64_t t = begin; t < end; ++t) {
                   run_trial(seed, t, ws);
                   const Trial& tr = ws.trial;
                   a.rev += tr.revenue;
                   a.rev2 += tr.revenue * tr.revenue;
                   a.demand += tr.demand;
                   for (int i = 0; i < cfg_.l; ++i) {
                     const int s = tr.state[static_cast<std::size_t>(i)];
                     if (s == 0) continue;
                     const std::size_t k = static_cast<std::size_t>(s - 1);
                     a.obs[k] += 1;
                     double profit = 0.0;
                     if (tr.sold[static_cast<std::size_t>(i)]) {
                       a.sales[k] += 1;
                       a.sold += 1.0;
                       profit = tr.price[static_cast<std::size_t>(i)] - cfg_.cost;
                     }
                     a.profit[k] += profit;
                     a.profit2[k] += profit * profit;
                   }
                 }
                 acc[b] = std::move(a);
               });
    MarketStats st;
    st.trials = trials;
    st.per_state.resize(static_cast<std::size_t>(n));
    if (trials == 0) return st;
    double rev = 0.0, rev2 = 0.0, demand = 0.0, sold = 0.0;
    std::vector<std::uint64_t> obs(static_cast<std::size_t>(n), 0),
        sales(static_cast<std::size_t>(n), 0);
    std::vector<double> profit(static_cast<std::size_t>(n), 0.0),
        profit2(static_cast<std::size_t>(n), 0.0);
    for (const BlockAcc& a : acc) {  // block order: deterministic reduction
      rev += a.rev;
      rev2 += a.rev2;
      demand += a.demand;
      sold += a.sold;
      for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
        obs[k] += a.obs[k];
        sales[k] += a.sales[k];
        profit[k] += a.profit[k];
        profit2[k] += a.profit2[k];
      }
    }
    const double nt = static_cast<double>(trials);
    st.mean_revenue = rev / nt;
    st.revenue_std_err =
        trials > 1 ? std::sqrt(std::max(0.0, rev2 / nt - st.mean_revenue * st.mean_revenue) /
                               (nt - 1.0))
                   : 0.0;
    st.mean_demand = demand / nt;
    st.mean_sold = sold / nt;
    for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
      StateStats& ss = st.per_state[k];
      ss.observations = obs[k];
      ss.sales = sales[k];
      if (obs[k] > 0) {
        const double m = static_cast<double>(obs[k]);
        ss.mean_profit = profit[k] / m;
        if (obs[k] > 1)
          ss.std_err = std::sqrt(
              std::max(0.0, profit2[k] / m - ss.mean_profit * ss.mean_profit) / (m - 1.0));
      }
    }
    return st;
  }

 private:
  void draw_round(RngStream& rng, int pinned, int pinned_state, double pinned_x,
                  Trial& out) const {
    const int l = cfg_.l;
    const int n = cfg_.n();
    out.demand = cfg_.demand.sample(rng);
    out.state.assign(static_cast<std::size_t>(l), 0);
    out.penalty.assign(static_cast<std::size_t>(l), 0.0);
    out.price.assign(static_cast<std::size_t>(l), 0.0);
    out.sold.assign(static_cast<std::size_t>(l), 0);
    out.revenue = 0.0;
    for (int i = 0; i < l; ++i) {
      if (i == pinned) {
        out.state[static_cast<std::size_t>(i)] = pinned_state;
        continue;
      }
      double u = rng.uniform01();
      double acc = 0.0;
      int s = 0;
      for (int j = 1; j <= n; ++j) {
        acc += cfg_.q_of(j);
        if (u < acc) {
          s = j;
          break;
        }
      }
      out.state[static_cast<std::size_t>(i)] = s;
    }
    for (int i = 0; i < l; ++i) {
      const int s = out.state[static_cast<std::size_t>(i)];
      if (s == 0) continue;
      out.penalty[static_cast<std::size_t>(i)] =
          i == pinned ? pinned_x : strat_.quantile(s, rng.uniform01());
    }
  }

  void allocate(RngStream& rng, TrialWorkspace& ws) const {
    Trial& tr = ws.trial;
    auto& order = ws.order;
    order.clear();
    for (int i = 0; i < cfg_.l; ++i) {
      if (tr.state[static_cast<std::size_t>(i)] == 0) continue;
      if (tr.penalty[static_cast<std::size_t>(i)] > cfg_.cap) continue;  // outside option wins
      order.emplace_back(tr.penalty[static_cast<std::size_t>(i)], i);
    }
    std::sort(order.begin(), order.end());
    // Secondaries are indifferent between equal penalties: shuffle tied runs.
    for (std::size_t a = 0; a < order.size();) {
      std::size_t b = a + 1;
      while (b < order.size() && order[b].first == order[a].first) ++b;
      for (std::size_t i = b - 1; i > a; --i) {
        std::size_t j = a + static_cast<std::size_t>(rng.uniform_below(i - a + 1));
        std::swap(order[i], order[j]);
      }
      a = b;
    }
    const std::size_t take = std::min<std::size_t>(
        order.size(), static_cast<std::size_t>(std::max(0, tr.demand)));
    for (std::size_t k = 0; k < take; ++k) {
      const int i = order[k].second;
      const int s = tr.state[static_cast<std::size_t>(i)];
      const double price = cfg_.penalty.price(s, order[k].first);
      tr.sold[static_cast<std::size_t>(i)] = 1;
      tr.price[static_cast<std::size_t>(i)] = price;
      tr.revenue += price - cfg_.cost;
    }
  }

  const EquilibriumStrategy& strat_;
  const MarketConfig& cfg_;
};

}  // namespace spectrum
