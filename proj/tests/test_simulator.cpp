#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "spectrum/simulator.hpp"
#include "support/test_configs.hpp"

using namespace spectrum;

TEST_CASE("trials replay identically and differ across indices") {
  EquilibriumStrategy s(testcfg::two_seller_two_state());
  MarketSimulator sim(s);
  TrialWorkspace a, b, c;
  sim.run_trial(7, 123, a);
  sim.run_trial(7, 123, b);
  sim.run_trial(7, 124, c);
  CHECK(a.trial.state == b.trial.state);
  CHECK(a.trial.penalty == b.trial.penalty);
  CHECK(a.trial.sold == b.trial.sold);
  CHECK(a.trial.revenue == b.trial.revenue);
  bool differs = a.trial.state != c.trial.state || a.trial.penalty != c.trial.penalty;
  CHECK(differs);
}

TEST_CASE("allocation sells the cheapest penalties first, never more than demand") {
  MarketConfig cfg = testcfg::random_market(3);
  EquilibriumStrategy s(cfg);
  MarketSimulator sim(s);
  TrialWorkspace ws;
  for (std::uint64_t t = 0; t < 500; ++t) {
    sim.run_trial(99, t, ws);
    const Trial& tr = ws.trial;
    int participants = 0, sold = 0;
    double worst_sold = -1e300, best_unsold = 1e300, revenue = 0.0;
    for (int i = 0; i < cfg.l; ++i) {
      if (tr.state[static_cast<std::size_t>(i)] == 0) {
        REQUIRE_FALSE(tr.sold[static_cast<std::size_t>(i)]);
        continue;
      }
      ++participants;
      if (tr.sold[static_cast<std::size_t>(i)]) {
        ++sold;
        worst_sold = std::max(worst_sold, tr.penalty[static_cast<std::size_t>(i)]);
        revenue += tr.price[static_cast<std::size_t>(i)] - cfg.cost;
        // the sold price reprices the drawn penalty through the state curve
        CHECK(cfg.penalty.penalty(tr.state[static_cast<std::size_t>(i)],
                                  tr.price[static_cast<std::size_t>(i)]) ==
              Catch::Approx(tr.penalty[static_cast<std::size_t>(i)]).margin(1e-9));
      } else {
        best_unsold = std::min(best_unsold, tr.penalty[static_cast<std::size_t>(i)]);
      }
    }
    REQUIRE(sold == std::min(participants, tr.demand));
    if (sold > 0 && sold < participants) CHECK(worst_sold <= best_unsold);
    CHECK(tr.revenue == Catch::Approx(revenue).margin(1e-9));
  }
}

TEST_CASE("exact penalty ties are broken uniformly") {
  // force a pure atom: every band boundary collapsed to the cap
  MarketConfig cfg{3, DemandModel::fixed(1), {1.0}, 1.0, 2.0,
                   PenaltyModel(PenaltyFamily::Additive, {0.0})};
  EquilibriumStrategy solved(cfg);
  EquilibriumStrategy atom =
      EquilibriumStrategy::with_overrides(cfg, {solved.price(1)}, {2.0, 2.0});
  MarketSimulator sim(atom);
  TrialWorkspace ws;
  std::vector<int> wins(3, 0);
  const int trials = 30000;
  for (int t = 0; t < trials; ++t) {
    sim.run_trial(5, static_cast<std::uint64_t>(t), ws);
    for (int i = 0; i < 3; ++i)
      if (ws.trial.sold[static_cast<std::size_t>(i)]) ++wins[static_cast<std::size_t>(i)];
  }
  // all three always tie at the cap; one demanded unit, so 1/3 each
  for (int i = 0; i < 3; ++i)
    CHECK(wins[static_cast<std::size_t>(i)] ==
          Catch::Approx(trials / 3.0).epsilon(0.05));
}

TEST_CASE("pinned payoffs match the known deviation values") {
  EquilibriumStrategy s(testcfg::two_seller_single_state());
  MarketSimulator sim(s);
  SECTION("inside the band the payoff equals the equilibrium profit") {
    Estimate e = sim.estimate_state_payoff(1, 1.75, 200000, 11);
    CHECK(e.std_err > 0.0);
    CHECK(std::abs(e.mean - 0.5) <= 4.0 * e.std_err);
  }
  SECTION("below the band the sale is sure but the margin shrinks") {
    Estimate e = sim.estimate_state_payoff(1, 1.2, 50000, 12);
    CHECK(e.mean == Catch::Approx(0.2).margin(1e-12));  // deterministic sale
    CHECK(e.std_err == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("above the cap nothing sells") {
    Estimate e = sim.estimate_state_payoff(1, 2.5, 10000, 13);
    CHECK(e.mean == 0.0);
  }
}

TEST_CASE("market statistics agree with the analytic equilibrium") {
  EquilibriumStrategy s(testcfg::two_seller_two_state());
  MarketSimulator sim(s);
  MarketStats st = sim.simulate_market(200000, 21);
  const double r_ne = 2.0 * (0.3 * 0.8 + 0.3 * 1.5);
  CHECK(std::abs(st.mean_revenue - r_ne) <= 5.0 * st.revenue_std_err);
  CHECK(st.mean_demand == Catch::Approx(1.0));
  for (int i = 1; i <= 2; ++i) {
    const StateStats& ss = st.per_state[static_cast<std::size_t>(i - 1)];
    CHECK(ss.observations > 0);
    CHECK(std::abs(ss.mean_profit - (s.price(i) - 0.0)) <= 6.0 * ss.std_err);
  }
}

TEST_CASE("thread count never changes results") {
  EquilibriumStrategy s(testcfg::random_market(1));
  MarketSimulator sim(s);
  MarketStats one = sim.simulate_market(40000, 3, 1);
  MarketStats four = sim.simulate_market(40000, 3, 4);
  CHECK(one.mean_revenue == four.mean_revenue);
  CHECK(one.revenue_std_err == four.revenue_std_err);
  for (std::size_t k = 0; k < one.per_state.size(); ++k) {
    CHECK(one.per_state[k].mean_profit == four.per_state[k].mean_profit);
    CHECK(one.per_state[k].observations == four.per_state[k].observations);
  }
  Estimate e1 = sim.estimate_state_payoff(1, s.quantile(1, 0.5), 40000, 3, 1);
  Estimate e4 = sim.estimate_state_payoff(1, s.quantile(1, 0.5), 40000, 3, 4);
  CHECK(e1.mean == e4.mean);
}

TEST_CASE("saturated markets sell everything whenever demand shows up") {
  MarketConfig cfg = testcfg::two_seller_two_state();
  cfg.demand = DemandModel::random({0.25, 0.0, 0.75});
  EquilibriumStrategy s(cfg);
  MarketSimulator sim(s);
  TrialWorkspace ws;
  for (std::uint64_t t = 0; t < 300; ++t) {
    sim.run_trial(17, t, ws);
    for (int i = 0; i < cfg.l; ++i) {
      if (ws.trial.state[static_cast<std::size_t>(i)] == 0) continue;
      CHECK(static_cast<bool>(ws.trial.sold[static_cast<std::size_t>(i)]) ==
            (ws.trial.demand >= 2));
    }
  }
}
