#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spectrum/efficiency.hpp"
#include "spectrum/market.hpp"
#include "spectrum/simulator.hpp"
#include "spectrum/verification.hpp"

namespace spectrum {

inline std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Console rendering: 12 significant digits round away the trailing ulp noise
// of values like 1.38 while losing nothing a reader acts on. Files keep g17.
inline std::string g12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

struct ParsedConfig {
  MarketConfig market;
  std::optional<std::uint64_t> seed;
  double tol_on_support = 1e-8;
  double tol_off_support = 1e-8;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

// raw key -> (value, line number)
using KeyMap = std::map<std::string, std::pair<std::string, int>>;

inline ConfigError key_error(const std::string& name, const KeyMap& keys,
                             const std::string& key, const std::string& what) {
  std::ostringstream os;
  os << name;
  auto it = keys.find(key);
  if (it != keys.end()) os << ":" << it->second.second;
  os << ": " << what << " for key '" << key << "'";
  return ConfigError(os.str());
}

inline double parse_double(const std::string& name, const KeyMap& keys,
                           const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw key_error(name, keys, key, "expected a number, got '" + t + "'");
  return v;
}

inline long long parse_int(const std::string& name, const KeyMap& keys,
                           const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size())
    throw key_error(name, keys, key, "expected an integer, got '" + t + "'");
  return v;
}

inline std::vector<double> parse_list(const std::string& name, const KeyMap& keys,
                                      const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split(text, ','))
    out.push_back(parse_double(name, keys, key, item));
  return out;
}

}  // namespace detail

inline PenaltyFamily parse_family(const std::string& s) {
  if (s == "additive") return PenaltyFamily::Additive;
  if (s == "multiplicative") return PenaltyFamily::Multiplicative;
  if (s == "power_shift") return PenaltyFamily::PowerShift;
  if (s == "exp_shift") return PenaltyFamily::ExpShift;
  if (s == "log_shift") return PenaltyFamily::LogShift;
  throw ConfigError("unknown penalty family '" + s +
                    "' (additive, multiplicative, power_shift, exp_shift, log_shift)");
}

// Parses the flat key=value market description; `name` labels error messages
// (usually the file path).
inline ParsedConfig parse_config(const std::string& content, const std::string& name) {
  using detail::key_error;
  detail::KeyMap keys;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(name + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
    if (!keys.emplace(key, std::make_pair(value, lineno)).second)
      throw ConfigError(name + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }

  static const char* known[] = {"l",         "n",          "q",
                                "c",         "v",          "demand.fixed_m",
                                "demand.pmf", "penalty.family", "penalty.r",
                                "penalty.h", "penalty.zeta",   "seed",
                                "tol.on_support", "tol.off_support"};
  for (const auto& [key, val] : keys) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok)
      throw ConfigError(name + ":" + std::to_string(val.second) + ": unknown key '" + key + "'");
  }

  auto need = [&](const std::string& key) -> const std::string& {
    auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(name + ": missing required key '" + key + "'");
    return it->second.first;
  };
  auto maybe = [&](const std::string& key) -> std::optional<std::string> {
    auto it = keys.find(key);
    if (it == keys.end()) return std::nullopt;
    return it->second.first;
  };

  const long long l = detail::parse_int(name, keys, "l", need("l"));
  if (l < 2 || l > 1000000) throw key_error(name, keys, "l", "l must be in 2..1000000");
  std::vector<double> q = detail::parse_list(name, keys, "q", need("q"));
  const double c = detail::parse_double(name, keys, "c", need("c"));
  const double v = detail::parse_double(name, keys, "v", need("v"));
  if (auto nt = maybe("n")) {
    long long n = detail::parse_int(name, keys, "n", *nt);
    if (n != static_cast<long long>(q.size()))
      throw key_error(name, keys, "n", "n disagrees with the length of q");
  }

  auto fixed_m = maybe("demand.fixed_m");
  auto pmf_text = maybe("demand.pmf");
  if (static_cast<bool>(fixed_m) == static_cast<bool>(pmf_text))
    throw ConfigError(name + ": exactly one of demand.fixed_m / demand.pmf is required");
  DemandModel demand =
      fixed_m ? DemandModel::fixed(static_cast<int>(
                    detail::parse_int(name, keys, "demand.fixed_m", *fixed_m)))
              : DemandModel::random(detail::parse_list(name, keys, "demand.pmf", *pmf_text));

  const PenaltyFamily family = parse_family(need("penalty.family"));
  std::vector<double> h = detail::parse_list(name, keys, "penalty.h", need("penalty.h"));
  double r = 1.0;
  if (auto rt = maybe("penalty.r")) {
    if (family != PenaltyFamily::PowerShift)
      throw key_error(name, keys, "penalty.r", "penalty.r applies only to power_shift");
    r = detail::parse_double(name, keys, "penalty.r", *rt);
  } else if (family == PenaltyFamily::PowerShift) {
    throw ConfigError(name + ": power_shift needs penalty.r");
  }
  std::optional<PiecewiseLinear> zeta;
  if (auto zt = maybe("penalty.zeta")) {
    std::vector<double> xs, ys;
    for (const std::string& pair : detail::split(*zt, ',')) {
      std::vector<std::string> xy = detail::split(pair, ':');
      if (xy.size() != 2)
        throw key_error(name, keys, "penalty.zeta", "expected x:y pairs, got '" + pair + "'");
      xs.push_back(detail::parse_double(name, keys, "penalty.zeta", xy[0]));
      ys.push_back(detail::parse_double(name, keys, "penalty.zeta", xy[1]));
    }
    zeta.emplace(std::move(xs), std::move(ys));
  }

  ParsedConfig out{
      MarketConfig{static_cast<int>(l), std::move(demand), std::move(q), c, v,
                   PenaltyModel(family, std::move(h), r, std::move(zeta))},
      std::nullopt, 1e-8, 1e-8};
  if (auto st = maybe("seed"))
    out.seed = static_cast<std::uint64_t>(detail::parse_int(name, keys, "seed", *st));
  if (auto t = maybe("tol.on_support"))
    out.tol_on_support = detail::parse_double(name, keys, "tol.on_support", *t);
  if (auto t = maybe("tol.off_support"))
    out.tol_off_support = detail::parse_double(name, keys, "tol.off_support", *t);
  out.market.validate();
  return out;
}

inline ParsedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

// Canonical one-line-per-key rendering; basis of the hash stamped into every
// CSV so outputs can be traced back to the exact market they describe.
inline std::string canonical_config(const MarketConfig& cfg) {
  std::ostringstream os;
  os << "l=" << cfg.l << "\n";
  if (cfg.demand.is_fixed()) {
    os << "demand.fixed_m=" << cfg.demand.fixed_m() << "\n";
  } else {
    os << "demand.pmf=";
    const auto& pmf = cfg.demand.pmf();
    for (std::size_t k = 0; k < pmf.size(); ++k) os << (k ? "," : "") << g17(pmf[k]);
    os << "\n";
  }
  os << "q=";
  for (std::size_t i = 0; i < cfg.q.size(); ++i) os << (i ? "," : "") << g17(cfg.q[i]);
  os << "\n";
  os << "c=" << g17(cfg.cost) << "\n";
  os << "v=" << g17(cfg.cap) << "\n";
  os << "penalty.family=" << family_name(cfg.penalty.family()) << "\n";
  if (cfg.penalty.family() == PenaltyFamily::PowerShift)
    os << "penalty.r=" << g17(cfg.penalty.exponent()) << "\n";
  os << "penalty.h=";
  const auto& h = cfg.penalty.weights();
  for (std::size_t i = 0; i < h.size(); ++i) os << (i ? "," : "") << g17(h[i]);
  os << "\n";
  return os.str();
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t config_hash(const MarketConfig& cfg) {
  return fnv1a64(canonical_config(cfg));
}

inline std::string hash_string(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// CSV writers. Every file starts with a config-hash comment.

namespace detail {
inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}
}  // namespace detail

inline void write_strategy_csv(std::ostream& os, const EquilibriumStrategy& s) {
  const MarketConfig& cfg = s.config();
  const int n = s.states();
  os << "# config_hash=" << hash_string(config_hash(cfg)) << "\n";
  os << "# blocking_top=" << g17(s.blocking(n + 1))
     << " survival_top=" << g17(s.survival(n + 1)) << "\n";
  os << "state,q,blocking,survival,expected_profit,price,band_lower,band_upper,"
        "price_floor,price_ceiling\n";
  for (int i = 1; i <= n; ++i) {
    os << i << ',' << g17(cfg.q_of(i)) << ',' << g17(s.blocking(i)) << ','
       << g17(s.survival(i)) << ',' << g17(s.expected_profit(i)) << ','
       << g17(s.price(i)) << ',' << g17(s.support_lower(i)) << ','
       << g17(s.support_upper(i)) << ',' << g17(s.price_floor(i)) << ','
       << g17(s.price_ceiling(i)) << "\n";
  }
}

inline void write_payoff_csv(std::ostream& os, const MarketConfig& cfg,
                             const PayoffReport& rep) {
  os << "# config_hash=" << hash_string(config_hash(cfg)) << "\n";
  os << "state,interval,kind,max_err,worst_x,pass\n";
  for (const PayoffRow& r : rep.rows) {
    os << r.state << ',' << r.interval << ','
       << (r.indifference ? "indifference" : "no_gain") << ',' << g17(r.max_err) << ','
       << g17(r.worst_x) << ',' << (r.pass ? 1 : 0) << "\n";
  }
}

inline void write_structure_csv(std::ostream& os, const MarketConfig& cfg,
                                const StructureReport& rep) {
  os << "# config_hash=" << hash_string(config_hash(cfg)) << "\n";
  os << "check,state,value,bound,pass\n";
  for (const StructureRow& r : rep.rows) {
    os << detail::csv_quote(r.check) << ',' << r.state << ',' << g17(r.value) << ','
       << g17(r.bound) << ',' << (r.pass ? 1 : 0) << "\n";
  }
}

inline void write_market_stats_csv(std::ostream& os, const EquilibriumStrategy& s,
                                   const MarketStats& st) {
  const MarketConfig& cfg = s.config();
  os << "# config_hash=" << hash_string(config_hash(cfg)) << "\n";
  os << "# trials=" << st.trials << " mean_revenue=" << g17(st.mean_revenue)
     << " revenue_std_err=" << g17(st.revenue_std_err)
     << " mean_demand=" << g17(st.mean_demand) << " mean_sold=" << g17(st.mean_sold)
     << "\n";
  os << "state,observations,sales,mean_profit,std_err,expected_profit\n";
  for (int i = 1; i <= s.states(); ++i) {
    const StateStats& ss = st.per_state[static_cast<std::size_t>(i - 1)];
    os << i << ',' << ss.observations << ',' << ss.sales << ',' << g17(ss.mean_profit)
       << ',' << g17(ss.std_err) << ',' << g17(s.expected_profit(i)) << "\n";
  }
}

inline void write_efficiency_csv(std::ostream& os, const MarketConfig& cfg,
                                 const EfficiencyResult& r) {
  os << "# config_hash=" << hash_string(config_hash(cfg)) << "\n";
  os << "r_ne,r_opt,r_opt_std_err,eta,exact\n";
  os << g17(r.r_ne) << ',' << g17(r.r_opt) << ',' << g17(r.r_opt_std_err) << ','
     << g17(r.eta) << ',' << (r.exact ? 1 : 0) << "\n";
}

inline void write_sweep_csv(std::ostream& os, const MarketConfig& cfg,
                            const std::vector<SweepRow>& rows) {
  os << "# config_hash=" << hash_string(config_hash(cfg)) << "\n";
  os << "parameter,r_ne,r_opt,r_opt_std_err,eta,error\n";
  for (const SweepRow& r : rows) {
    os << g17(r.parameter) << ',' << g17(r.r_ne) << ',' << g17(r.r_opt) << ','
       << g17(r.r_opt_std_err) << ',' << g17(r.eta) << ','
       << detail::csv_quote(r.error) << "\n";
  }
}

}  // namespace spectrum
