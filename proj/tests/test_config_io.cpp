#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <string>

#include "spectrum/config_io.hpp"

using namespace spectrum;

namespace {
const char* kSample = R"(
# twenty sellers, three quality states
l = 20
n = 3
q = 0.1, 0.1, 0.1
c = 1.0
v = 100.0
demand.fixed_m = 10
penalty.family = power_shift
penalty.r = 10
penalty.h = 1, 128, 2187
seed = 42
tol.on_support = 1e-7
)";
}

TEST_CASE("a full config parses into the market description") {
  ParsedConfig cfg = parse_config(kSample, "sample");
  CHECK(cfg.market.l == 20);
  CHECK(cfg.market.n() == 3);
  CHECK(cfg.market.q == std::vector<double>{0.1, 0.1, 0.1});
  CHECK(cfg.market.cost == 1.0);
  CHECK(cfg.market.cap == 100.0);
  CHECK(cfg.market.demand.is_fixed());
  CHECK(cfg.market.demand.fixed_m() == 10);
  CHECK(cfg.market.penalty.family() == PenaltyFamily::PowerShift);
  CHECK(cfg.market.penalty.exponent() == 10.0);
  CHECK(cfg.market.penalty.weights() == std::vector<double>{1.0, 128.0, 2187.0});
  REQUIRE(cfg.seed.has_value());
  CHECK(*cfg.seed == 42);
  CHECK(cfg.tol_on_support == 1e-7);
  CHECK(cfg.tol_off_support == 1e-8);  // untouched default
}

TEST_CASE("random demand and zeta knots parse") {
  const char* text = R"(
l = 4
q = 0.4, 0.3
c = 0.5
v = 6.0
demand.pmf = 0.1, 0.4, 0.5
penalty.family = additive
penalty.h = 1, 2
penalty.zeta = 0:0, 2:3, 10:12
)";
  ParsedConfig cfg = parse_config(text, "t");
  CHECK_FALSE(cfg.market.demand.is_fixed());
  CHECK(cfg.market.demand.pmf() == std::vector<double>{0.1, 0.4, 0.5});
  REQUIRE(cfg.market.penalty.zeta().has_value());
  CHECK(cfg.market.penalty.zeta()->eval(1.0) == Catch::Approx(1.5));
}

TEST_CASE("parse errors carry the offending location") {
  auto fails_with = [](const std::string& text, const std::string& needle) {
    try {
      parse_config(text, "cfg");
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      INFO(e.what());
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  fails_with("l = 2\nl = 3\n", "duplicate key");
  fails_with("bogus_key = 1\n", "unknown key");
  fails_with("l two\n", "expected key = value");
  fails_with("l = abc\n", "expected an integer");
  fails_with("l = 2\nq = 0.5\nc = 0\nv = 2\npenalty.family = additive\npenalty.h = 0\n",
             "demand.fixed_m / demand.pmf");
  fails_with(
      "l = 2\nq = 0.5\nc = 0\nv = 2\ndemand.fixed_m = 1\n"
      "penalty.family = additive\npenalty.h = 0\npenalty.r = 2\n",
      "penalty.r applies only");
  fails_with(
      "l = 2\nn = 3\nq = 0.5\nc = 0\nv = 2\ndemand.fixed_m = 1\n"
      "penalty.family = additive\npenalty.h = 0\n",
      "n disagrees");
  fails_with(
      "l = 2\nq = 0.5\nc = 0\nv = 2\ndemand.fixed_m = 1\n"
      "penalty.family = power_shift\npenalty.h = 0\n",
      "needs penalty.r");
  fails_with(
      "l = 2\nq = 0.5\nc = 0\nv = 2\ndemand.fixed_m = 1\n"
      "penalty.family = parabolic\npenalty.h = 0\n",
      "unknown penalty family");
}

TEST_CASE("config hash tracks content") {
  ParsedConfig a = parse_config(kSample, "a");
  ParsedConfig b = parse_config(kSample, "b");
  CHECK(config_hash(a.market) == config_hash(b.market));
  ParsedConfig c = parse_config(kSample, "c");
  c.market.cap = 101.0;
  CHECK(config_hash(a.market) != config_hash(c.market));
  CHECK(hash_string(config_hash(a.market)).size() == 16);
}

TEST_CASE("csv writers stamp the config hash") {
  ParsedConfig cfg = parse_config(kSample, "s");
  EquilibriumStrategy s(cfg.market);
  std::ostringstream os;
  write_strategy_csv(os, s);
  const std::string text = os.str();
  CHECK(text.find("# config_hash=" + hash_string(config_hash(cfg.market))) !=
        std::string::npos);
  CHECK(text.find("state,q,blocking") != std::string::npos);
  // one line per state plus two comments and the header
  int lines = 0;
  for (char ch : text) lines += ch == '\n';
  CHECK(lines == 3 + 3);
}
