#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "spectrum/errors.hpp"
#include "spectrum/rng.hpp"

namespace spectrum {

// Number of bandwidth units the secondary market requests per round: either a
// fixed count m, or a random count drawn from a pmf over {0, 1, 2, ...}.
class DemandModel {
 public:
  static DemandModel fixed(int m) {
    if (m < 1) throw ConfigError("fixed demand must be at least 1");
    DemandModel d;
    d.fixed_m_ = m;
    return d;
  }

  // pmf[k] = P(demand == k); must be nonnegative and sum to 1.
  static DemandModel random(std::vector<double> pmf) {
    if (pmf.empty()) throw ConfigError("demand pmf must be nonempty");
    double sum = 0.0;
    for (double g : pmf) {
      if (!(g >= 0.0) || !std::isfinite(g))
        throw ConfigError("demand pmf entries must be finite and nonnegative");
      sum += g;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("demand pmf must sum to 1");
    for (double& g : pmf) g /= sum;
    DemandModel d;
    d.pmf_ = std::move(pmf);
    return d;
  }

  bool is_fixed() const { return pmf_.empty(); }
  int fixed_m() const {
    if (!is_fixed()) throw DomainError("demand model is random");
    return fixed_m_;
  }
  const std::vector<double>& pmf() const {
    if (is_fixed()) throw DomainError("demand model is fixed");
    return pmf_;
  }

  // Probability of zero demand; the floor of the blocking probability.
  double mass_at_zero() const { return is_fixed() ? 0.0 : pmf_[0]; }

  // Mixture weights over blocking-tail orders for a market of l primaries:
  // weight k (1 <= k <= l-1) multiplies P(Binom(l-1, x) >= k). Demand at or
  // above l can never block a sale, so that mass contributes nothing.
  std::vector<double> tail_weights(int l) const {
    std::vector<double> w(static_cast<std::size_t>(l), 0.0);  // index 0 unused
    if (is_fixed()) {
      if (fixed_m_ <= l - 1) w[static_cast<std::size_t>(fixed_m_)] = 1.0;
      return w;
    }
    for (std::size_t k = 1; k < pmf_.size() && k <= static_cast<std::size_t>(l - 1); ++k)
      w[k] = pmf_[k];
    return w;
  }

  // True when demand never falls in 1..l-1, i.e. each round either sells
  // nothing or clears every available channel. Price competition then
  // collapses to the cap.
  bool saturates(int l) const {
    if (is_fixed()) return fixed_m_ >= l;
    double mass = 0.0;
    for (std::size_t k = 1; k < pmf_.size() && k <= static_cast<std::size_t>(l - 1); ++k)
      mass += pmf_[k];
    return mass == 0.0;
  }

  int sample(RngStream& rng) const {
    if (is_fixed()) return fixed_m_;
    double u = rng.uniform01();
    double acc = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) {
      acc += pmf_[k];
      if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(pmf_.size()) - 1;  // guards rounding at u ~ 1
  }

 private:
  DemandModel() = default;

  int fixed_m_ = 0;
  std::vector<double> pmf_;  // empty <=> fixed
};

}  // namespace spectrum
