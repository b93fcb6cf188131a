#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "spectrum/equilibrium.hpp"

namespace spectrum {

// Chance that one fixed rival undercuts penalty level x: it must hold a
// channel (state k, probability q_k) and have drawn a penalty below x.
inline double undercut_probability(const EquilibriumStrategy& s, double x) {
  double total = 0.0;
  for (int k = 1; k <= s.states(); ++k)
    total += s.config().q_of(k) * s.cdf(k, x);
  return total;
}

// Expected profit of a primary in state j that posts penalty level x while
// the other l-1 primaries follow the strategy. Above the cap the outside
// option absorbs all demand and the profit is zero; below the attainable
// penalty range of g_j no price realizes x, so no deviation exists there.
inline double analytic_payoff(const EquilibriumStrategy& s, int j, double x) {
  const MarketConfig& cfg = s.config();
  if (x > cfg.cap) return 0.0;
  double price;
  try {
    price = cfg.penalty.price(j, x);
  } catch (const DomainError&) {
    return 0.0;
  }
  return (price - cfg.cost) * s.tail().complement(undercut_probability(s, x));
}

// cdf formula without the support short-circuits; may stray slightly outside
// [0, 1] and is what the atom probes below need.
inline double raw_psi(const EquilibriumStrategy& s, int i, double x) {
  const MarketConfig& cfg = s.config();
  const double u = s.expected_profit(i);
  if (!(u > 0.0)) return x >= s.support_lower(i) ? 1.0 : 0.0;
  double fx;
  try {
    fx = cfg.penalty.price(i, x);
  } catch (const DomainError&) {  // probe left the attainable penalty range
    return x <= s.support_lower(i) ? 0.0 : 1.0;
  }
  if (!(fx - cfg.cost > 0.0)) return 0.0;
  double sv = u / (fx - cfg.cost);
  sv = std::min(s.tail().sf_max(), std::max(s.tail().sf_min(), sv));
  return (s.tail().inverse_sf(sv) - s.q_suffix(i + 1)) / cfg.q_of(i);
}

// ---------------------------------------------------------------------------
// Equilibrium property: in its own band a state is indifferent (payoff equals
// its equilibrium profit); everywhere else it cannot do better.

struct PayoffRow {
  int state = 0;     // deviating state j
  int interval = 0;  // 0 = above cap, 1..n = band of state i, n+1 = below L_n
  bool indifference = false;  // true when interval == state
  double max_err = 0.0;       // relative indifference error, or relative gain
  double worst_x = 0.0;
  bool pass = true;
};

struct PayoffReport {
  bool pass = true;
  double max_indifference_err = 0.0;
  double max_gain = 0.0;
  std::vector<PayoffRow> rows;
};

inline PayoffReport verify_equilibrium(const EquilibriumStrategy& s,
                                       int points_per_interval = 1000,
                                       double tol_on_support = 1e-8,
                                       double tol_off_support = 1e-8) {
  if (points_per_interval < 2)
    throw std::invalid_argument("points_per_interval must be at least 2");
  const MarketConfig& cfg = s.config();
  const int n = s.states();
  PayoffReport rep;
  for (int j = 1; j <= n; ++j) {
    const double u = s.expected_profit(j);
    const double denom = std::max(std::abs(u), 1e-280);
    for (int interval = 0; interval <= n + 1; ++interval) {
      double lo, hi;
      if (interval == 0) {  // beyond the cap the payoff must vanish
        lo = cfg.cap;
        hi = cfg.cap + std::max(1.0, std::abs(cfg.cap));
      } else if (interval <= n) {
        lo = s.boundary(interval);
        hi = s.boundary(interval - 1);
      } else {  // probe below the lowest band
        const double ln = s.boundary(n);
        double span = std::max(cfg.cap - ln, 0.25 * (1.0 + std::abs(ln)));
        lo = ln - 0.25 * span;
        // stay inside the attainable penalty range of state j
        const double floor_j = cfg.penalty.min_penalty(j);
        if (std::isfinite(floor_j))
          lo = std::max(lo, floor_j + 1e-9 * (1.0 + std::abs(floor_j)));
        hi = ln;
      }
      PayoffRow row;
      row.state = j;
      row.interval = interval;
      row.indifference = interval == j;
      row.worst_x = lo;
      // Measuring the payoff through the host band's cdf carries two rounding
      // channels. All rows: the cdf quantizes the undercut point to doubles
      // (tail inversion plus reconstruction, a few ulps), and the survival
      // value at the probe wobbles by that times the local log-slope of the
      // tail. Off-support rows additionally recompute the host margin
      // f_i - c outside the cdf, so its conditioning eps*|f_i|/(f_i - c) no
      // longer cancels; to first order through the tail slope every other
      // factor does, leaving K*eps*(f_j - c)*u_i*|f_i|/(f_i - c)^2.
      // Indifference rows see only the first channel: there the same computed
      // margin divides inside the cdf and multiplies outside, exactly.
      constexpr double kEps = 2.220446049250313e-16;
      auto log_slope = [&](double y) -> double {
        const double h = 1e-9;
        const double y_lo = std::max(0.0, y - h), y_hi = std::min(1.0, y + h);
        const double mid = s.tail().complement(y);
        if (!(mid > 0.0) || !(y_hi > y_lo)) return 0.0;
        return std::abs(s.tail().complement(y_lo) - s.tail().complement(y_hi)) /
               ((y_hi - y_lo) * mid);
      };
      auto noise_slack = [&](double x, double phi) -> double {
        if (interval < 1 || interval > n) return 0.0;
        const int i = interval;
        const double u_i = s.expected_profit(i);
        if (!(u_i > 0.0)) return 0.0;
        double slack = 0.0;
        if (phi > 0.0)
          slack += 16.0 * kEps * log_slope(undercut_probability(s, x)) * phi /
                   denom;
        double fi, fj;
        try {
          fi = cfg.penalty.price(i, x);
          fj = cfg.penalty.price(j, x);
        } catch (const DomainError&) {
          return slack;
        }
        const double mi = fi - cfg.cost;
        const double mj = fj - cfg.cost;
        if (!(mi > 0.0) || !(mj > 0.0)) return slack;
        const double cond = 64.0 * kEps * mj * u_i * std::abs(fi) /
                            (mi * mi) / denom;
        // The deviator's own margin f_j - c is recomputed here as well, so
        // its conditioning scales phi directly; for indifference rows that
        // margin is the bitwise-identical host margin and cancels.
        if (!row.indifference)
          return slack + cond +
                 64.0 * kEps * std::abs(fj) / mj * std::max(phi, 0.0) / denom;
        // Indifference probes keep the cancellation except where the cdf
        // clamps psi at a band edge: the clamp pins the undercut point to
        // the exact edge, so within the conditioning width of either edge
        // the conditioning term reappears with j == i.
        const double sv = u_i / mi;
        const double m_rel = 64.0 * kEps * (1.0 + std::abs(fi) / mi);
        const bool near_edge =
            sv >= s.survival(i + 1) * (1.0 - 4.0 * m_rel) ||
            sv <= s.survival(i) * (1.0 + 4.0 * m_rel);
        return near_edge ? slack + cond : slack;
      };
      for (int t = 0; t < points_per_interval; ++t) {
        // clamped: the grid arithmetic can overshoot hi by one ulp, which
        // above the cap would flip the payoff to zero
        const double x =
            std::min(hi, lo + (hi - lo) * t / (points_per_interval - 1));
        const double phi = analytic_payoff(s, j, x);
        // only a gap beyond the rounding envelope is a violation
        double err;
        if (row.indifference) {
          err = std::abs(phi - u) / denom - noise_slack(x, phi);
        } else {
          err = (phi - u) / denom - noise_slack(x, phi);
        }
        if (err > row.max_err) {
          row.max_err = err;
          row.worst_x = x;
        }
      }
      row.pass = row.indifference ? row.max_err <= tol_on_support
                                  : row.max_err <= tol_off_support;
      if (row.indifference)
        rep.max_indifference_err = std::max(rep.max_indifference_err, row.max_err);
      else
        rep.max_gain = std::max(rep.max_gain, row.max_err);
      rep.pass = rep.pass && row.pass;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Structural invariants of a solved strategy: ordered bands, ordered profits
// and blocking constants, cdf hitting 0/1 at the band edges, no atoms at the
// edges, monotone cdf, and a tight quantile/cdf round trip. The edge and
// round-trip conditions are tested in survival space: psi(x) within tol of a
// target t is equivalent, through the monotone tail complement, to the ratio
// u_i / (f_i(x) - c) landing between the complements at t -+ q_i * tol. That
// form stays well-posed where the tail is numerically flat and inverting it
// would amplify rounding noise into psi.

struct StructureRow {
  std::string check;
  int state = 0;      // 0 when the check is global
  double value = 0.0; // measured quantity
  double bound = 0.0; // limit it was held against
  bool pass = true;
};

struct StructureReport {
  bool pass = true;
  std::vector<StructureRow> rows;
};

namespace detail {
inline void push(StructureReport& rep, const char* check, int state, double value,
                 double bound, bool ok) {
  rep.rows.push_back({check, state, value, bound, ok});
  rep.pass = rep.pass && ok;
}
}  // namespace detail

inline StructureReport verify_structure(const EquilibriumStrategy& s,
                                        double tol = 1e-9,
                                        double boundary_eps = 1e-6) {
  const MarketConfig& cfg = s.config();
  const int n = s.states();
  const TailFunction& tail = s.tail();
  constexpr double kEps = 2.220446049250313e-16;
  StructureReport rep;

  if (s.is_degenerate()) {
    // Demand never lands in 1..l-1: every band collapses to the cap and each
    // state sells with the same probability.
    for (int i = 1; i <= n; ++i) {
      detail::push(rep, "band_at_cap", i, s.boundary(i), cfg.cap,
                   s.boundary(i) == cfg.cap);
      const double expect =
          (cfg.penalty.price(i, cfg.cap) - cfg.cost) * s.tail().sf_min();
      detail::push(rep, "profit_value", i, s.expected_profit(i), expect,
                   std::abs(s.expected_profit(i) - expect) <=
                       tol * std::max(1.0, std::abs(expect)));
    }
    return rep;
  }

  for (int i = 1; i <= n; ++i) {
    // A band may collapse to a point only when sf_i / sf_{i+1} rounds to 1:
    // the floor recursion then moves the boundary by less than one ulp, and
    // the f/g round trip may even invert it by a few.
    const double gap = s.boundary(i - 1) - s.boundary(i);
    const bool saturated = !(s.survival(i + 1) > 0.0) ||
                           s.survival(i) >= s.survival(i + 1) * (1.0 - 1e-12);
    const bool ordered =
        gap > 0.0 ||
        (saturated && gap >= -8.0 * kEps * std::max(1.0, std::abs(s.boundary(i))));
    detail::push(rep, "band_order", i, gap, 0.0, ordered);
    detail::push(rep, "profit_positive", i, s.expected_profit(i), 0.0,
                 s.expected_profit(i) > 0.0);
    if (i < n)
      detail::push(rep, "profit_increasing", i, s.price(i + 1) - s.price(i), 0.0,
                   s.price(i + 1) > s.price(i));
    detail::push(rep, "blocking_decreasing", i, s.blocking(i) - s.blocking(i + 1), 0.0,
                 s.blocking(i) > s.blocking(i + 1));
  }

  for (int i = 1; i <= n; ++i) {
    const double lo = s.support_lower(i), hi = s.support_upper(i);
    const double width = hi - lo;
    const double u_i = s.expected_profit(i);
    const double q_i = cfg.q_of(i);
    const double q_below = s.q_suffix(i + 1);  // undercut mass at the floor
    const double q_above = s.q_suffix(i);      // undercut mass at the ceiling

    // Measured survival ratio u_i / (f_i(x) - c) plus its relative rounding
    // bound: f_i carries a few ulps and subtracting the cost amplifies them
    // by |f_i| / (f_i - c). A negative noise flags an unusable probe (price
    // unattainable or at/below cost).
    auto survival_ratio = [&](double x, double& rel_noise) -> double {
      double fx;
      try {
        fx = cfg.penalty.price(i, x);
      } catch (const DomainError&) {
        rel_noise = -1.0;
        return -1.0;
      }
      const double margin = fx - cfg.cost;
      if (!(margin > 0.0)) {
        rel_noise = -1.0;
        return -1.0;
      }
      rel_noise = 64.0 * kEps * (1.0 + std::abs(fx) / margin);
      return u_i / margin;
    };
    // ratio within [complement(target + slack), complement(target - slack)],
    // widened by its own rounding bound, iff |psi - (target-q_below)/q_i|
    // stays within slack/q_i in cdf units.
    auto between = [&](double ratio, double rel_noise, double target,
                       double slack) -> bool {
      if (!(ratio > 0.0) || rel_noise < 0.0) return false;
      const double b_lo = tail.complement(std::min(1.0, target + slack));
      const double b_hi =
          target > slack ? tail.complement(target - slack) : tail.sf_max();
      return ratio >= b_lo * (1.0 - rel_noise - 1e-12) &&
             ratio <= b_hi * (1.0 + rel_noise + 1e-12);
    };

    double noise_lo, noise_hi;
    const double r_lo = survival_ratio(lo, noise_lo);
    const double r_hi = survival_ratio(hi, noise_hi);
    detail::push(rep, "cdf_floor", i, r_lo, tail.complement(q_below),
                 between(r_lo, noise_lo, q_below, q_i * tol));
    detail::push(rep, "cdf_ceiling", i, r_hi, tail.complement(q_above),
                 between(r_hi, noise_hi, q_above, q_i * tol));

    // Atom probes. Just outside the band the cdf must already sit at its
    // plateau; just inside, the gap to the plateau must shrink as the probe
    // moves 100x closer (a jump would freeze it). Band edges may legally have
    // unbounded slope, so only the decay ratio is checked, not the gap size.
    const double eps = std::max({boundary_eps * std::max(1.0, std::abs(lo)),
                                 boundary_eps * width, 32.0 * std::abs(lo) * 1e-16});
    if (width > 4.0 * eps) {
      // Below the floor the ratio must still clear the floor complement; an
      // unusable probe means no quote can land there at all, which is fine.
      double noise_b;
      const double r_b = survival_ratio(lo - eps, noise_b);
      const bool below_ok =
          noise_b < 0.0 ||
          r_b >= tail.complement(std::min(1.0, q_below + 2.0 * q_i * tol)) *
                     (1.0 - noise_b - 1e-12);
      detail::push(rep, "no_atom_below", i, r_b, tail.complement(q_below), below_ok);

      // Above the ceiling the ratio must stay at or under the ceiling
      // complement, otherwise mass is hiding past the band.
      double noise_a;
      const double r_a = survival_ratio(hi + eps, noise_a);
      const bool above_ok =
          noise_a >= 0.0 &&
          r_a <= (q_above > 2.0 * q_i * tol
                      ? tail.complement(q_above - 2.0 * q_i * tol)
                      : tail.sf_max()) *
                     (1.0 + noise_a + 1e-12);
      detail::push(rep, "no_atom_above", i, r_a, tail.complement(q_above), above_ok);

      // Decay probes are meaningful only where the probe separation moves the
      // measured ratio by clearly more than its rounding noise; exponentially
      // flat tail stretches fail that and are skipped (the edge checks above
      // still pin the boundary there).
      double na1, na2;
      const double s1 = survival_ratio(lo + eps, na1);
      const double s2 = survival_ratio(lo + eps / 100.0, na2);
      if (na1 >= 0.0 && na2 >= 0.0 &&
          std::abs(s1 - s2) > 10.0 * (na1 + na2) * std::max(s1, s2)) {
        const double d1 = std::abs(raw_psi(s, i, lo + eps));
        const double d2 = std::abs(raw_psi(s, i, lo + eps / 100.0));
        detail::push(rep, "edge_decay_lower", i, d2, 0.95 * d1 + 1e-12,
                     d2 <= 0.95 * d1 + 1e-12);
      }
      double nb1, nb2;
      const double t1 = survival_ratio(hi - eps, nb1);
      const double t2 = survival_ratio(hi - eps / 100.0, nb2);
      if (nb1 >= 0.0 && nb2 >= 0.0 &&
          std::abs(t1 - t2) > 10.0 * (nb1 + nb2) * std::max(t1, t2)) {
        const double g1 = std::abs(1.0 - raw_psi(s, i, hi - eps));
        const double g2 = std::abs(1.0 - raw_psi(s, i, hi - eps / 100.0));
        detail::push(rep, "edge_decay_upper", i, g2, 0.95 * g1 + 1e-12,
                     g2 <= 0.95 * g1 + 1e-12);
      }
    }

    double prev = -1.0;
    bool monotone = true;
    double worst = 0.0;
    for (int t = 0; t <= 64; ++t) {
      const double x = lo + width * t / 64.0;
      const double c = s.cdf(i, x);
      if (c < prev - 1e-12) {
        monotone = false;
        worst = prev - c;
      }
      prev = std::max(prev, c);
    }
    detail::push(rep, "cdf_monotone", i, worst, 1e-12, monotone);

    // Round trip, also in survival space: the penalty the quantile returns
    // for level uu must carry a ratio matching the complement at
    // q_below + q_i * uu within the same tol window.
    double worst_ratio = 0.0;
    double worst_target = tail.complement(q_below);
    bool rt_ok = true;
    for (int t = 0; t <= 32; ++t) {
      const double uu = static_cast<double>(t) / 32.0;
      double noise;
      const double ratio = survival_ratio(s.quantile(i, uu), noise);
      const double target = q_below + q_i * uu;
      if (!between(ratio, noise, target, q_i * tol)) {
        rt_ok = false;
        worst_ratio = ratio;
        worst_target = tail.complement(target);
      }
    }
    detail::push(rep, "quantile_round_trip", i, worst_ratio, worst_target, rt_ok);
  }
  return rep;
}

}  // namespace spectrum
