#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "spectrum/efficiency.hpp"
#include "support/test_configs.hpp"

using namespace spectrum;

namespace {

// Exhaustive oracle: enumerate all (n+1)^l state vectors and all demand
// levels, allocating best states first at the cap.
double optimal_revenue_brute(const MarketConfig& cfg) {
  const int l = cfg.l, n = cfg.n();
  std::vector<double> margin(static_cast<std::size_t>(n) + 1, 0.0);
  for (int j = 1; j <= n; ++j)
    margin[static_cast<std::size_t>(j)] = cfg.penalty.price(j, cfg.cap) - cfg.cost;
  std::vector<std::pair<int, double>> demand;
  if (cfg.demand.is_fixed()) {
    demand.emplace_back(cfg.demand.fixed_m(), 1.0);
  } else {
    const auto& pmf = cfg.demand.pmf();
    for (std::size_t k = 0; k < pmf.size(); ++k)
      if (pmf[k] > 0.0) demand.emplace_back(static_cast<int>(k), pmf[k]);
  }
  const double q0 = 1.0 - cfg.suffix_q(1);
  double total = 0.0;
  for (long long code = 0; code < static_cast<long long>(std::pow(n + 1, l)); ++code) {
    long long rest = code;
    double prob = 1.0;
    std::vector<int> count(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < l; ++i) {
      const int s = static_cast<int>(rest % (n + 1));
      rest /= (n + 1);
      ++count[static_cast<std::size_t>(s)];
      prob *= s == 0 ? q0 : cfg.q_of(s);
    }
    if (prob == 0.0) continue;
    for (const auto& [m, mass] : demand) {
      int remaining = m;
      double rev = 0.0;
      for (int j = n; j >= 1 && remaining > 0; --j) {
        const int take = std::min(count[static_cast<std::size_t>(j)], remaining);
        rev += take * margin[static_cast<std::size_t>(j)];
        remaining -= take;
      }
      total += prob * mass * rev;
    }
  }
  return total;
}

}  // namespace

TEST_CASE("reference market revenues and efficiency") {
  SECTION("single state") {
    EquilibriumStrategy s(testcfg::two_seller_single_state());
    CHECK(equilibrium_revenue(s) == Catch::Approx(0.5).margin(1e-12));
    CHECK(optimal_revenue_exact(s.config()) == Catch::Approx(0.75).margin(1e-12));
    EfficiencyResult r = compute_efficiency(s);
    CHECK(r.eta == Catch::Approx(2.0 / 3.0).margin(1e-12));
  }
  SECTION("two states") {
    EquilibriumStrategy s(testcfg::two_seller_two_state());
    CHECK(equilibrium_revenue(s) == Catch::Approx(1.38).margin(1e-12));
    CHECK(optimal_revenue_exact(s.config()) == Catch::Approx(2.19).margin(1e-12));
    EfficiencyResult r = compute_efficiency(s);
    CHECK(r.eta == Catch::Approx(46.0 / 73.0).margin(1e-12));
    CHECK(r.exact);
    CHECK(r.r_opt_std_err == 0.0);
  }
}

TEST_CASE("exact optimal revenue matches brute-force enumeration") {
  for (int idx = 0; idx < 8; ++idx) {
    MarketConfig cfg = testcfg::random_market(idx);
    cfg.l = 2 + idx % 5;  // keep the state space enumerable
    if (cfg.demand.fixed_m() >= cfg.l) cfg.demand = DemandModel::fixed(cfg.l - 1);
    INFO("market " << idx << " l=" << cfg.l);
    CHECK(optimal_revenue_exact(cfg) ==
          Catch::Approx(optimal_revenue_brute(cfg)).epsilon(1e-10));
  }
  MarketConfig random_demand{5,
                             DemandModel::random({0.1, 0.2, 0.3, 0.1, 0.1, 0.1, 0.1}),
                             {0.3, 0.25},
                             0.5,
                             3.0,
                             PenaltyModel(PenaltyFamily::Additive, {1.0, 2.0})};
  CHECK(optimal_revenue_exact(random_demand) ==
        Catch::Approx(optimal_revenue_brute(random_demand)).epsilon(1e-10));
}

TEST_CASE("monte carlo optimal revenue brackets the exact value") {
  MarketConfig cfg = testcfg::two_seller_two_state();
  const double exact = optimal_revenue_exact(cfg);
  Estimate e = optimal_revenue_monte_carlo(cfg, 200000, 5);
  CHECK(e.std_err > 0.0);
  CHECK(std::abs(e.mean - exact) <= 4.0 * e.std_err);
  Estimate e1 = optimal_revenue_monte_carlo(cfg, 50000, 5, 1);
  Estimate e4 = optimal_revenue_monte_carlo(cfg, 50000, 5, 4);
  CHECK(e1.mean == e4.mean);  // thread count never changes the estimate
}

TEST_CASE("exact optimal revenue enforces its size precondition") {
  MarketConfig cfg{20,
                   DemandModel::fixed(10),
                   {0.1, 0.1, 0.1, 0.1},
                   1.0,
                   50.0,
                   PenaltyModel(PenaltyFamily::Additive, {1.0, 2.0, 3.0, 4.0})};
  CHECK_THROWS_AS(optimal_revenue_exact(cfg), ConfigError);
  CHECK_NOTHROW(optimal_revenue_monte_carlo(cfg, 1000, 1));
}

TEST_CASE("demand regimes classify against the band thresholds") {
  // thresholds at m/(l-1) = 0.3 and 0.6 with margin 0.05
  CHECK(classify_regime(testcfg::wide_market(1300), 0.05).kind == RegimeKind::High);
  CHECK(classify_regime(testcfg::wide_market(1300), 0.05).per_primary_limit ==
        Catch::Approx(1.5));
  Regime mid = classify_regime(testcfg::wide_market(900), 0.05);
  CHECK(mid.kind == RegimeKind::Middle);
  CHECK(mid.band == 2);
  CHECK(mid.per_primary_limit == Catch::Approx(0.3));
  CHECK(classify_regime(testcfg::wide_market(500), 0.05).kind == RegimeKind::Low);
  CHECK(classify_regime(testcfg::wide_market(1250), 0.05).kind ==
        RegimeKind::Transition);
  MarketConfig random_demand = testcfg::two_seller_two_state();
  random_demand.demand = DemandModel::random({0.5, 0.5});
  CHECK_THROWS_AS(classify_regime(random_demand, 0.05), ConfigError);
}

TEST_CASE("demand sweeps report per-row results and capture failures") {
  std::vector<SweepRow> rows = sweep_demand(testcfg::two_seller_two_state(), 1, 1);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].error.empty());
  CHECK(rows[0].r_ne == Catch::Approx(1.38).margin(1e-12));
  CHECK(rows[0].eta == Catch::Approx(46.0 / 73.0).margin(1e-12));

  // force per-row failures: exact optimal revenue is out of reach at l=20, n=4
  MarketConfig big{20,
                   DemandModel::fixed(10),
                   {0.1, 0.1, 0.1, 0.1},
                   1.0,
                   50.0,
                   PenaltyModel(PenaltyFamily::Additive, {1.0, 2.0, 3.0, 4.0})};
  std::vector<SweepRow> failing = sweep_demand(big, 3, 4, true);
  REQUIRE(failing.size() == 2);
  for (const SweepRow& r : failing) {
    CHECK_FALSE(r.error.empty());
    CHECK(std::isnan(r.eta));
  }
}

TEST_CASE("scaling down channel availability raises efficiency pressure on demand") {
  std::vector<SweepRow> rows =
      sweep_state_scale(testcfg::two_seller_two_state(), {0.5, 1.0});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].error.empty());
  CHECK(rows[1].error.empty());
  CHECK(rows[1].eta == Catch::Approx(46.0 / 73.0).margin(1e-12));
}

TEST_CASE("efficiency never exceeds one on generated markets") {
  for (int idx = 0; idx < 10; ++idx) {
    MarketConfig cfg = testcfg::random_market(idx);
    EquilibriumStrategy s(cfg);
    const bool exact = cfg.l <= 12 || cfg.n() <= 3;
    EfficiencyResult r = compute_efficiency(s, exact, 20000, 7);
    INFO("market " << idx << ": r_ne=" << r.r_ne << " r_opt=" << r.r_opt);
    CHECK(r.r_ne >= 0.0);
    CHECK(r.eta <= 1.0 + (exact ? 1e-12 : 4.0 * r.r_opt_std_err / std::max(r.r_opt, 1e-300)));
  }
}
