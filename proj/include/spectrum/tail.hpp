#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "spectrum/demand.hpp"
#include "spectrum/errors.hpp"

namespace spectrum {

// Blocking probability of a primary: w(x) is the chance that, when each of the
// other l-1 primaries independently undercuts with probability x, at least as
// many undercutters show up as there are demanded units. Under random demand
// this is the pmf-weighted mixture of binomial upper tails
//   w(x) = gamma_0 + sum_k gamma_k P(Binom(l-1, x) >= k),
// where demand mass at or above l contributes nothing (a sale can then never
// be blocked) and gamma_0 is the chance of no demand at all.
//
// Both w and 1-w are computed as direct sums so neither loses relative
// accuracy near 0; sums are anchored at the in-range mode of the binomial pmf
// to avoid underflow of edge terms.
class TailFunction {
 public:
  TailFunction(int l, const DemandModel& demand) : n_others_(l - 1) {
    if (l < 2) throw ConfigError("market needs at least two primaries");
    gamma0_ = demand.mass_at_zero();
    std::vector<double> gk = demand.tail_weights(l);  // index k = 1..l-1
    if (demand.is_fixed()) {
      gamma_hi_ = demand.fixed_m() >= l ? 1.0 : 0.0;
    } else {
      gamma_hi_ = 0.0;
      const auto& pmf = demand.pmf();
      for (std::size_t k = pmf.size(); k-- > static_cast<std::size_t>(l);)
        gamma_hi_ += pmf[k];
    }
    // G(i) = total weight of tail orders k <= i, W(i) = weight of orders > i.
    prefix_.assign(static_cast<std::size_t>(n_others_) + 1, 0.0);
    suffix_.assign(static_cast<std::size_t>(n_others_) + 1, 0.0);
    k_min_ = n_others_ + 1;
    k_max_ = 0;
    for (int k = 1; k <= n_others_; ++k) {
      prefix_[static_cast<std::size_t>(k)] =
          prefix_[static_cast<std::size_t>(k - 1)] + gk[static_cast<std::size_t>(k)];
      if (gk[static_cast<std::size_t>(k)] > 0.0) {
        k_min_ = std::min(k_min_, k);
        k_max_ = std::max(k_max_, k);
      }
    }
    for (int i = n_others_ - 1; i >= 0; --i)
      suffix_[static_cast<std::size_t>(i)] =
          suffix_[static_cast<std::size_t>(i + 1)] +
          gk[static_cast<std::size_t>(i + 1)];
    // Extended precision: the anchor exponent below is O(1e4) for thousands of
    // sellers, so double-precision table entries would cap relative accuracy
    // near 1e-11; long double keeps it near 1e-13.
    logfact_.resize(static_cast<std::size_t>(n_others_) + 1);
    logfact_[0] = 0.0L;
    for (int i = 1; i <= n_others_; ++i)
      logfact_[static_cast<std::size_t>(i)] =
          logfact_[static_cast<std::size_t>(i - 1)] + std::log(static_cast<long double>(i));
  }

  int blocking_pool() const { return n_others_; }

  // True when no demand level in 1..l-1 has mass: w is constant in x and the
  // market saturates (every round sells all channels or none).
  bool degenerate() const { return k_max_ == 0; }

  double floor_value() const { return gamma0_; }            // w(0)
  double ceil_value() const { return 1.0 - gamma_hi_; }     // w(1)
  double sf_max() const { return 1.0 - gamma0_; }           // 1 - w at x = 0
  double sf_min() const { return gamma_hi_; }               // 1 - w at x = 1

  double eval(double x) const {
    x = clamp_prob(x);
    if (degenerate()) return gamma0_;
    return gamma0_ + weighted_sum(x, k_min_, n_others_,
                                  [this](int i) { return prefix_[static_cast<std::size_t>(i)]; });
  }

  // 1 - w(x), summed directly so it stays accurate when w(x) is close to 1.
  double complement(double x) const {
    x = clamp_prob(x);
    if (degenerate()) return gamma_hi_;
    return gamma_hi_ + weighted_sum(x, 0, k_max_ - 1,
                                    [this](int i) { return suffix_[static_cast<std::size_t>(i)]; });
  }

  // Smallest x with w(x) >= y. y is clamped into the attainable range
  // [w(0), w(1)] when within 1e-12 of it, and rejected beyond that.
  // The bracket is driven to adjacent doubles: where the tail is steep, any
  // slack in x scales into relative error at the root by the local log-slope.
  double inverse(double y) const {
    const double lo_v = floor_value(), hi_v = ceil_value();
    if (y <= lo_v) {
      if (y < lo_v - 1e-12) throw DomainError("tail inverse argument below w(0)");
      return 0.0;
    }
    if (y >= hi_v) {
      if (y > hi_v + 1e-12) throw DomainError("tail inverse argument above w(1)");
      return 1.0;
    }
    double lo = 0.0, hi = 1.0;  // invariant: w(lo) < y <= w(hi)
    for (int it = 0; it < 1100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;  // bracket is one ulp wide
      (eval(mid) >= y ? hi : lo) = mid;
    }
    return hi;
  }

  // Smallest x with 1 - w(x) <= s; the survival-space twin of inverse(),
  // well conditioned when the survival probability is close to 0 or 1.
  double inverse_sf(double s) const {
    if (s >= sf_max()) {
      if (s > sf_max() + 1e-12) throw DomainError("survival target above 1 - w(0)");
      return 0.0;
    }
    if (s <= sf_min()) {
      if (s < sf_min() - 1e-12) throw DomainError("survival target below 1 - w(1)");
      return 1.0;
    }
    double lo = 0.0, hi = 1.0;  // invariant: sf(lo) > s >= sf(hi)
    for (int it = 0; it < 1100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;  // bracket is one ulp wide
      (complement(mid) <= s ? hi : lo) = mid;
    }
    return hi;
  }

 private:
  static double clamp_prob(double x) {
    if (x < -1e-12 || x > 1.0 + 1e-12)
      throw DomainError("tail argument must be a probability");
    return std::min(1.0, std::max(0.0, x));
  }

  // sum over i in [i_lo, i_hi] of P(Binom(N, x) == i) * wt(i), with the
  // pmf terms generated by ratio recurrence outward from the in-range mode.
  template <class WeightFn>
  double weighted_sum(double x, int i_lo, int i_hi, WeightFn wt) const {
    const int N = n_others_;
    if (i_lo > i_hi) return 0.0;
    if (x <= 0.0) return i_lo == 0 ? wt(0) : 0.0;  // point mass at i = 0
    if (x >= 1.0) return i_hi == N ? wt(N) : 0.0;  // point mass at i = N
    int mode = static_cast<int>(std::floor((N + 1) * x));
    mode = std::min(i_hi, std::max(i_lo, std::min(mode, N)));
    const long double log_t =
        logfact_[static_cast<std::size_t>(N)] - logfact_[static_cast<std::size_t>(mode)] -
        logfact_[static_cast<std::size_t>(N - mode)] +
        static_cast<long double>(mode) * std::log(static_cast<long double>(x)) +
        static_cast<long double>(N - mode) * std::log1p(-static_cast<long double>(x));
    const double t_anchor = static_cast<double>(std::exp(log_t));
    const double odds = x / (1.0 - x);
    double acc = t_anchor * wt(mode);
    double t = t_anchor;
    for (int i = mode; i < i_hi; ++i) {
      t *= odds * static_cast<double>(N - i) / static_cast<double>(i + 1);
      if (t < 1e-300) break;
      acc += t * wt(i + 1);
    }
    t = t_anchor;
    for (int i = mode; i > i_lo; --i) {
      t *= static_cast<double>(i) / (odds * static_cast<double>(N - i + 1));
      if (t < 1e-300) break;
      acc += t * wt(i - 1);
    }
    return acc;
  }

  int n_others_;
  double gamma0_ = 0.0;    // demand mass at 0
  double gamma_hi_ = 0.0;  // demand mass at >= l
  std::vector<double> prefix_, suffix_;
  std::vector<long double> logfact_;
  int k_min_ = 0, k_max_ = 0;
};

}  // namespace spectrum
