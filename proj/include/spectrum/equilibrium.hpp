#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "spectrum/market.hpp"
#include "spectrum/rng.hpp"
#include "spectrum/tail.hpp"

namespace spectrum {

// The symmetric equilibrium pricing rule. A primary in quality state i
// randomizes its penalty over the band [L_i, L_{i-1}]; the bands tile
// [L_n, cap] top-down, worst quality highest. Writing sf_i for the chance of
// selling when everyone in states i..n undercuts you (sf_{n+1} covers nobody
// undercutting), the bands and expected profits follow one backward pass:
//
//   L_0 = cap
//   u_i = (f_i(L_{i-1}) - c) * sf_i      expected profit in state i
//   L_i = g_i(c + u_i / sf_{i+1})        indifference at the band floor
//
// and the in-band distribution makes every rival penalty level yield the
// same expected profit, which pins the cdf to
//   cdf_i(x) = (sf^{-1}(u_i / (f_i(x) - c)) - Q_{i+1}) / q_i,
// with Q_i the probability of being in state i or better. Every formula is
// phrased in survival probabilities (1 - blocking), which stay accurate when
// blocking is nearly certain.
class EquilibriumStrategy {
 public:
  explicit EquilibriumStrategy(MarketConfig cfg)
      : config_(std::move(cfg)), tail_(config_.l, config_.demand) {
    config_.validate();
    const int n = config_.n();
    qsuf_.resize(static_cast<std::size_t>(n) + 2);
    for (int i = 1; i <= n + 1; ++i)
      qsuf_[static_cast<std::size_t>(i)] = config_.suffix_q(i);
    blocking_.assign(static_cast<std::size_t>(n) + 2, 0.0);
    survival_.assign(static_cast<std::size_t>(n) + 2, 0.0);
    for (int i = 1; i <= n + 1; ++i) {
      blocking_[static_cast<std::size_t>(i)] = tail_.eval(qsuf_[static_cast<std::size_t>(i)]);
      survival_[static_cast<std::size_t>(i)] =
          tail_.complement(qsuf_[static_cast<std::size_t>(i)]);
    }

    boundary_.assign(static_cast<std::size_t>(n) + 1, config_.cap);
    price_.assign(static_cast<std::size_t>(n), 0.0);
    profit_.assign(static_cast<std::size_t>(n), 0.0);
    top_price_.assign(static_cast<std::size_t>(n), 0.0);
    bottom_price_.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 1; i <= n; ++i) {
      const double fL = config_.penalty.price(i, boundary_[static_cast<std::size_t>(i - 1)]);
      const double sf_i = survival_[static_cast<std::size_t>(i)];
      const double sf_next = survival_[static_cast<std::size_t>(i + 1)];
      // The profit is the primary stored quantity: recovering it later as
      // price - cost would absorb a tiny u into the cost's ulp and truncate
      // its relative precision.
      const double u = (fL - config_.cost) * sf_i;
      profit_[static_cast<std::size_t>(i - 1)] = u;
      price_[static_cast<std::size_t>(i - 1)] = config_.cost + u;
      top_price_[static_cast<std::size_t>(i - 1)] = fL;
      // Band floor: sf_i / sf_next < 1 analytically; clamp float drift. When
      // both survivals underflow, profit is zero and the band collapses to
      // the break-even penalty g_i(cost).
      double ratio = sf_next > 0.0 ? std::min(1.0, sf_i / sf_next) : 0.0;
      const double floor_price = config_.cost + (fL - config_.cost) * ratio;
      bottom_price_[static_cast<std::size_t>(i - 1)] = floor_price;
      boundary_[static_cast<std::size_t>(i)] = config_.penalty.penalty(i, floor_price);
    }
  }

  // Builds a strategy with prescribed profits and band boundaries instead of
  // the solved ones; lets tests feed perturbed strategies to the verifiers.
  static EquilibriumStrategy with_overrides(const MarketConfig& cfg,
                                            const std::vector<double>& prices,
                                            const std::vector<double>& boundaries) {
    EquilibriumStrategy s(cfg);
    const int n = s.config_.n();
    if (static_cast<int>(prices.size()) != n ||
        static_cast<int>(boundaries.size()) != n + 1)
      throw ConfigError("override vectors must have sizes n and n+1");
    s.price_ = prices;
    s.boundary_ = boundaries;
    for (int i = 1; i <= n; ++i) {
      s.profit_[static_cast<std::size_t>(i - 1)] =
          prices[static_cast<std::size_t>(i - 1)] - cfg.cost;
      s.top_price_[static_cast<std::size_t>(i - 1)] =
          cfg.penalty.price(i, boundaries[static_cast<std::size_t>(i - 1)]);
      s.bottom_price_[static_cast<std::size_t>(i - 1)] =
          cfg.penalty.price(i, boundaries[static_cast<std::size_t>(i)]);
    }
    return s;
  }

  const MarketConfig& config() const { return config_; }
  const TailFunction& tail() const { return tail_; }
  int states() const { return config_.n(); }
  bool is_degenerate() const { return tail_.degenerate(); }

  // Expected-profit price of state i: selling anywhere in the band nets
  // expected_profit(i) = price(i) - cost, with the profit held at full
  // precision even when it is far below one ulp of the cost.
  double price(int i) const { return price_.at(static_cast<std::size_t>(i - 1)); }
  double expected_profit(int i) const { return profit_.at(static_cast<std::size_t>(i - 1)); }
  const std::vector<double>& prices() const { return price_; }

  // Band boundaries L_0..L_n (L_0 = cap); state i spans [L_i, L_{i-1}].
  double boundary(int i) const { return boundary_.at(static_cast<std::size_t>(i)); }
  const std::vector<double>& boundaries() const { return boundary_; }
  double support_lower(int i) const { return boundary(i); }
  double support_upper(int i) const { return boundary(i - 1); }

  // Charged-price range of state i.
  double price_floor(int i) const { return bottom_price_.at(static_cast<std::size_t>(i - 1)); }
  double price_ceiling(int i) const { return top_price_.at(static_cast<std::size_t>(i - 1)); }

  // Blocking/survival constants at the state thresholds, index 1..n+1.
  double blocking(int i) const { return blocking_.at(static_cast<std::size_t>(i)); }
  double survival(int i) const { return survival_.at(static_cast<std::size_t>(i)); }
  double q_suffix(int i) const { return qsuf_.at(static_cast<std::size_t>(i)); }

  // P(penalty <= x) for a primary in state i.
  double cdf(int i, double x) const {
    require_state(i);
    if (is_degenerate()) return x >= config_.cap ? 1.0 : 0.0;
    const double lo = support_lower(i), hi = support_upper(i);
    if (x >= hi) return 1.0;
    if (x <= lo) return 0.0;
    const double u = expected_profit(i);
    if (!(u > 0.0)) return 1.0;  // collapsed band
    const double fx = config_.penalty.price(i, x);
    double s = u / (fx - config_.cost);
    s = std::min(tail_.sf_max(), std::max(tail_.sf_min(), s));
    const double undercut = tail_.inverse_sf(s);
    const double psi = (undercut - q_suffix(i + 1)) / config_.q_of(i);
    return std::min(1.0, std::max(0.0, psi));
  }

  // Inverse cdf; closed-form, one survival evaluation per call.
  double quantile(int i, double u) const {
    require_state(i);
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile argument must be in [0, 1]");
    if (is_degenerate()) return config_.cap;
    const double profit = expected_profit(i);
    if (!(profit > 0.0)) return support_lower(i);
    const double sf = tail_.complement(q_suffix(i + 1) + config_.q_of(i) * u);
    if (!(sf > 0.0)) return support_lower(i);
    double fx = config_.cost + profit / sf;
    fx = std::min(price_ceiling(i), std::max(price_floor(i), fx));
    double x = config_.penalty.penalty(i, fx);
    return std::min(support_upper(i), std::max(support_lower(i), x));
  }

  double sample_penalty(int i, RngStream& rng) const { return quantile(i, rng.uniform01()); }

 private:
  void require_state(int i) const {
    if (i < 1 || i > states()) throw DomainError("state index out of range 1..n");
  }

  MarketConfig config_;
  TailFunction tail_;
  std::vector<double> qsuf_;      // Q_i, index 1..n+1
  std::vector<double> blocking_;  // w_i, index 1..n+1
  std::vector<double> survival_;  // 1 - w_i, index 1..n+1
  std::vector<double> boundary_;  // L_0..L_n
  std::vector<double> price_;     // p_i, index i-1
  std::vector<double> profit_;    // u_i = p_i - c at full precision, index i-1
  std::vector<double> top_price_, bottom_price_;
};

}  // namespace spectrum
