#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "spectrum/penalty.hpp"
#include "support/test_configs.hpp"

using namespace spectrum;

TEST_CASE("piecewise linear maps evaluate and invert exactly") {
  PiecewiseLinear pl({0.0, 1.0, 3.0}, {0.0, 2.0, 4.0});
  CHECK(pl.eval(0.0) == 0.0);
  CHECK(pl.eval(0.5) == Catch::Approx(1.0));
  CHECK(pl.eval(2.0) == Catch::Approx(3.0));
  CHECK(pl.eval(3.0) == 4.0);
  CHECK(pl.inverse(3.0) == Catch::Approx(2.0));
  for (double x : {0.0, 0.25, 0.9, 1.0, 1.7, 2.9, 3.0})
    CHECK(pl.inverse(pl.eval(x)) == Catch::Approx(x).margin(1e-14));
  CHECK_THROWS_AS(pl.eval(-0.1), DomainError);
  CHECK_THROWS_AS(pl.eval(3.1), DomainError);
  CHECK_THROWS_AS(pl.inverse(4.5), DomainError);
}

TEST_CASE("piecewise linear knots must strictly increase") {
  CHECK_THROWS_AS(PiecewiseLinear({0.0, 0.0}, {0.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(PiecewiseLinear({0.0, 1.0}, {1.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(PiecewiseLinear({0.0}, {1.0}), ConfigError);
}

TEST_CASE("family formulas match hand values") {
  SECTION("additive shift") {
    PenaltyModel m(PenaltyFamily::Additive, {1.0, 2.0});
    CHECK(m.penalty(1, 5.0) == 4.0);
    CHECK(m.penalty(2, 5.0) == 3.0);
    CHECK(m.price(2, 3.0) == 5.0);
  }
  SECTION("multiplicative scaling") {
    PenaltyModel m(PenaltyFamily::Multiplicative, {2.0, 4.0});
    CHECK(m.penalty(1, 6.0) == 3.0);
    CHECK(m.penalty(2, 6.0) == 1.5);
    CHECK(m.price(2, 1.5) == 6.0);
    CHECK_THROWS_AS(m.price(1, -1.0), DomainError);
  }
  SECTION("power curve with offsets") {
    PenaltyModel m(PenaltyFamily::PowerShift, {1.0, 128.0, 2187.0}, 10.0);
    CHECK(m.penalty(3, 2.0) == Catch::Approx(1024.0 - 2187.0));
    CHECK(m.penalty(1, 2.0) == Catch::Approx(1023.0));
    CHECK(m.price(3, 1024.0 - 2187.0) == Catch::Approx(2.0));
    CHECK_THROWS_AS(m.penalty(1, -0.5), DomainError);
    CHECK_THROWS_AS(m.price(1, -2.0), DomainError);
  }
  SECTION("exponential curve") {
    PenaltyModel m(PenaltyFamily::ExpShift, {1.0, 3.0});
    CHECK(m.penalty(1, 0.0) == 0.0);
    CHECK(m.penalty(2, std::log(5.0)) == Catch::Approx(2.0));
    CHECK(m.price(2, 2.0) == Catch::Approx(std::log(5.0)));
    CHECK_THROWS_AS(m.price(2, -3.0), DomainError);
  }
  SECTION("log curve") {
    PenaltyModel m(PenaltyFamily::LogShift, {1.0, 2.0});
    CHECK(m.penalty(1, std::exp(3.0)) == Catch::Approx(2.0));
    CHECK(m.price(1, 2.0) == Catch::Approx(std::exp(3.0)));
    CHECK_THROWS_AS(m.penalty(1, 0.0), DomainError);
  }
}

TEST_CASE("price and penalty are mutually inverse across families") {
  for (int idx = 0; idx < 10; ++idx) {
    MarketConfig cfg = testcfg::random_market(idx);
    const PenaltyModel& m = cfg.penalty;
    for (int i = 1; i <= m.states(); ++i) {
      const double glo = m.penalty(i, cfg.cost);
      for (int t = 0; t <= 16; ++t) {
        const double x = glo + (cfg.cap - glo) * t / 16.0;
        const double p = m.price(i, x);
        CHECK(m.penalty(i, p) == Catch::Approx(x).margin(1e-9 * (1.0 + std::abs(x))));
      }
    }
  }
}

TEST_CASE("constructor rejects malformed models") {
  CHECK_THROWS_AS(PenaltyModel(PenaltyFamily::Additive, {}), ConfigError);
  CHECK_THROWS_AS(PenaltyModel(PenaltyFamily::PowerShift, {1.0}, 0.0), ConfigError);
  CHECK_THROWS_AS(PenaltyModel(PenaltyFamily::PowerShift, {1.0}, -1.0), ConfigError);
  CHECK_THROWS_AS(PenaltyModel(PenaltyFamily::Multiplicative, {1.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(PenaltyModel(PenaltyFamily::Multiplicative, {1.0, -2.0}), ConfigError);
  // zeta knots only make sense where zeta appears in the formulas
  PiecewiseLinear z({0.0, 10.0}, {1.0, 11.0});
  CHECK_THROWS_AS(PenaltyModel(PenaltyFamily::PowerShift, {1.0}, 2.0, z), ConfigError);
  CHECK_NOTHROW(PenaltyModel(PenaltyFamily::Additive, {1.0, 2.0}, 1.0, z));
}

TEST_CASE("validation accepts the reference markets") {
  CHECK(testcfg::two_seller_single_state().check_assumptions().ok);
  CHECK(testcfg::two_seller_two_state().check_assumptions().ok);
  CHECK(testcfg::power_market(10.0).check_assumptions().ok);
  CHECK(testcfg::power_market(0.1).check_assumptions().ok);
  CHECK(testcfg::wide_market(900).check_assumptions().ok);
}

TEST_CASE("validation reports the first broken assumption") {
  SECTION("weights ordered the wrong way break curve ordering") {
    PenaltyModel bad(PenaltyFamily::Additive, {2.0, 1.0});  // h must increase
    PenaltyValidation rep = bad.validate(0.0, 5.0);
    REQUIRE_FALSE(rep.ok);
    CHECK(rep.check == "ordering");
    CHECK(rep.state_i == 1);
    CHECK(rep.state_j == 2);
  }
  SECTION("zero cost degrades the multiplicative ratio to a constant") {
    PenaltyModel m(PenaltyFamily::Multiplicative, {1.0, 2.0});
    PenaltyValidation rep = m.validate(0.0, 5.0);
    REQUIRE_FALSE(rep.ok);
    CHECK((rep.check == "ratio" || rep.check == "cost_domain"));
  }
  SECTION("cap below the worst break-even penalty") {
    PenaltyModel m(PenaltyFamily::Additive, {1.0, 2.0});
    PenaltyValidation rep = m.validate(3.0, 1.5);  // g_1(3) = 2 >= cap
    REQUIRE_FALSE(rep.ok);
    CHECK(rep.check == "cap");
  }
  SECTION("cost outside the price domain") {
    PenaltyModel m(PenaltyFamily::LogShift, {1.0});
    PenaltyValidation rep = m.validate(0.0, 5.0);  // log needs positive price
    REQUIRE_FALSE(rep.ok);
    CHECK(rep.check == "cost_domain");
  }
  SECTION("grid size precondition") {
    PenaltyModel m(PenaltyFamily::Additive, {1.0});
    CHECK_THROWS_AS(m.validate(0.0, 5.0, 50), std::invalid_argument);
  }
}

TEST_CASE("ratio condition holds on all state pairs of generated markets") {
  for (int idx = 0; idx < 15; ++idx) {
    MarketConfig cfg = testcfg::random_market(idx);
    PenaltyValidation rep = cfg.penalty.validate(cfg.cost, cfg.cap);
    INFO("market " << idx << ": " << rep.detail);
    CHECK(rep.ok);
  }
}
