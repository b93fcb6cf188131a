#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "spectrum/demand.hpp"
#include "spectrum/errors.hpp"
#include "spectrum/penalty.hpp"

namespace spectrum {

// One spectrum market: l primary license holders, each with an idle channel
// in quality state i (1..n, probability q_i) or no channel to spare
// (probability 1 - sum q_i, "state 0"). Secondaries buy the cheapest offers;
// a sale at price p in state i nets p - cost but exposes the seller to the
// interference penalty g_i(p), capped at `cap` by the outside option.
struct MarketConfig {
  int l;
  DemandModel demand;
  std::vector<double> q;  // q[i-1] = P(state i), i = 1..n
  double cost;
  double cap;             // penalty level of the outside option
  PenaltyModel penalty;

  int n() const { return static_cast<int>(q.size()); }

  double q_of(int state) const {
    if (state < 1 || state > n()) throw DomainError("state index out of range 1..n");
    return q[static_cast<std::size_t>(state - 1)];
  }

  // Probability of being in state `state` or better (higher index = better
  // quality = lower penalty); suffix_q(n + 1) = 0.
  double suffix_q(int state) const {
    if (state < 1 || state > n() + 1) throw DomainError("state index out of range 1..n+1");
    double s = 0.0;
    for (int j = n(); j >= state; --j) s += q[static_cast<std::size_t>(j - 1)];
    return s;
  }

  // Structural sanity; throws ConfigError with the first problem found.
  void validate() const {
    if (l < 2) throw ConfigError("market needs at least two primaries");
    if (q.empty()) throw ConfigError("at least one quality state is required");
    if (static_cast<int>(q.size()) != penalty.states())
      throw ConfigError("state probabilities and penalty weights disagree on n");
    double sum = 0.0;
    for (double qi : q) {
      if (!(qi > 0.0) || !std::isfinite(qi))
        throw ConfigError("state probabilities must be positive and finite");
      sum += qi;
    }
    if (sum > 1.0 + 1e-12) throw ConfigError("state probabilities must sum to at most 1");
    if (!(cost >= 0.0) || !std::isfinite(cost))
      throw ConfigError("transaction cost must be finite and nonnegative");
    if (!std::isfinite(cap)) throw ConfigError("penalty cap must be finite");
  }

  // Grid checks of the penalty-curve assumptions; never throws.
  PenaltyValidation check_assumptions(int grid_size = 512) const {
    try {
      validate();
    } catch (const ConfigError& e) {
      PenaltyValidation rep;
      rep.ok = false;
      rep.check = "config";
      rep.detail = e.what();
      return rep;
    }
    return penalty.validate(cost, cap, grid_size);
  }
};

}  // namespace spectrum
