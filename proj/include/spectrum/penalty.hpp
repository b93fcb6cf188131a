#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spectrum/errors.hpp"

namespace spectrum {

// Strictly increasing piecewise-linear map given by knots (x_k, y_k).
// Inversion is exact (linear solve per segment), which keeps user-supplied
// curves round-trippable to machine precision.
class PiecewiseLinear {
 public:
  PiecewiseLinear(std::vector<double> xs, std::vector<double> ys)
      : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.size() < 2 || xs_.size() != ys_.size())
      throw ConfigError("piecewise-linear map needs at least two (x, y) knots");
    for (std::size_t k = 0; k + 1 < xs_.size(); ++k) {
      if (!(xs_[k] < xs_[k + 1]) || !(ys_[k] < ys_[k + 1]))
        throw ConfigError("piecewise-linear knots must be strictly increasing in x and y");
    }
    for (std::size_t k = 0; k < xs_.size(); ++k) {
      if (!std::isfinite(xs_[k]) || !std::isfinite(ys_[k]))
        throw ConfigError("piecewise-linear knots must be finite");
    }
  }

  double domain_min() const { return xs_.front(); }
  double domain_max() const { return xs_.back(); }
  double range_min() const { return ys_.front(); }
  double range_max() const { return ys_.back(); }

  double eval(double x) const {
    if (x < xs_.front() || x > xs_.back())
      throw DomainError("piecewise-linear argument outside knot span");
    return interp(xs_, ys_, x);
  }

  double inverse(double y) const {
    if (y < ys_.front() || y > ys_.back())
      throw DomainError("piecewise-linear inverse argument outside knot span");
    return interp(ys_, xs_, y);
  }

 private:
  static double interp(const std::vector<double>& a, const std::vector<double>& b, double t) {
    auto it = std::upper_bound(a.begin(), a.end(), t);
    std::size_t hi = std::min<std::size_t>(a.size() - 1,
                     std::max<std::size_t>(1, static_cast<std::size_t>(it - a.begin())));
    std::size_t lo = hi - 1;
    double u = (t - a[lo]) / (a[hi] - a[lo]);
    return b[lo] + u * (b[hi] - b[lo]);
  }

  std::vector<double> xs_, ys_;
};

enum class PenaltyFamily { Additive, Multiplicative, PowerShift, ExpShift, LogShift };

inline const char* family_name(PenaltyFamily f) {
  switch (f) {
    case PenaltyFamily::Additive: return "additive";
    case PenaltyFamily::Multiplicative: return "multiplicative";
    case PenaltyFamily::PowerShift: return "power_shift";
    case PenaltyFamily::ExpShift: return "exp_shift";
    case PenaltyFamily::LogShift: return "log_shift";
  }
  return "?";
}

struct PenaltyValidation {
  bool ok = true;
  std::string check;     // name of the first failed check, empty when ok
  int state_i = 0;       // first violating states (state_j = 0 when unary)
  int state_j = 0;
  double at_y = 0.0;     // probe point(s) of the first violation
  double at_x = 0.0;
  std::string detail;
};

// Quality-indexed penalty curves g_i and their inverses f_i.
//
// Families (h strictly increasing, i the 1-based state index):
//   additive        g_i(p) = zeta(p) - h(i)
//   multiplicative  g_i(p) = zeta(p) / h(i),  zeta > 0, h > 0
//   power_shift     g_i(p) = p^r - h(i),      p >= 0, r > 0
//   exp_shift       g_i(p) = exp(p) - h(i)
//   log_shift       g_i(p) = log(p) - h(i),   p > 0
//
// zeta defaults to the identity; a strictly increasing piecewise-linear curve
// may be supplied for the additive and multiplicative families.
class PenaltyModel {
 public:
  PenaltyModel(PenaltyFamily family, std::vector<double> weights, double exponent = 1.0,
               std::optional<PiecewiseLinear> zeta = std::nullopt)
      : family_(family), h_(std::move(weights)), r_(exponent), zeta_(std::move(zeta)) {
    if (h_.empty()) throw ConfigError("penalty model needs at least one state weight");
    for (double w : h_)
      if (!std::isfinite(w)) throw ConfigError("penalty weights must be finite");
    if (family_ == PenaltyFamily::PowerShift && !(r_ > 0.0))
      throw ConfigError("power_shift exponent must be positive");
    if (family_ == PenaltyFamily::Multiplicative) {
      for (double w : h_)
        if (!(w > 0.0)) throw ConfigError("multiplicative weights must be positive");
      if (zeta_ && !(zeta_->range_min() > 0.0))
        throw ConfigError("multiplicative zeta must be positive on its knot span");
    }
    if (zeta_ && family_ != PenaltyFamily::Additive && family_ != PenaltyFamily::Multiplicative)
      throw ConfigError("zeta knots apply only to the additive and multiplicative families");
  }

  int states() const { return static_cast<int>(h_.size()); }
  PenaltyFamily family() const { return family_; }
  double exponent() const { return r_; }
  const std::vector<double>& weights() const { return h_; }
  const std::optional<PiecewiseLinear>& zeta() const { return zeta_; }

  // g_state(price)
  double penalty(int state, double price) const {
    const double w = weight(state);
    switch (family_) {
      case PenaltyFamily::Additive:
        return zeta_eval(price) - w;
      case PenaltyFamily::Multiplicative: {
        double z = zeta_eval(price);
        if (!(z > 0.0)) throw DomainError("multiplicative penalty needs zeta(price) > 0");
        return z / w;
      }
      case PenaltyFamily::PowerShift:
        if (price < 0.0) throw DomainError("power_shift price must be >= 0");
        return std::pow(price, r_) - w;
      case PenaltyFamily::ExpShift:
        return std::exp(price) - w;
      case PenaltyFamily::LogShift:
        if (!(price > 0.0)) throw DomainError("log_shift price must be > 0");
        return std::log(price) - w;
    }
    throw DomainError("unknown penalty family");
  }

  // f_state(x), the price whose penalty in `state` equals x.
  double price(int state, double x) const {
    const double w = weight(state);
    switch (family_) {
      case PenaltyFamily::Additive:
        return zeta_inverse(x + w);
      case PenaltyFamily::Multiplicative: {
        double z = x * w;
        if (!(z > 0.0)) throw DomainError("multiplicative penalty must be positive");
        return zeta_inverse(z);
      }
      case PenaltyFamily::PowerShift: {
        double base = x + w;
        if (base < 0.0) throw DomainError("power_shift penalty below attainable range");
        return std::pow(base, 1.0 / r_);
      }
      case PenaltyFamily::ExpShift: {
        double base = x + w;
        if (!(base > 0.0)) throw DomainError("exp_shift penalty below attainable range");
        return std::log(base);
      }
      case PenaltyFamily::LogShift:
        return std::exp(x + w);
    }
    throw DomainError("unknown penalty family");
  }

  // Infimum of the attainable penalty range of g_state. price() is defined for
  // penalties strictly above this (and at it, for the power_shift family).
  double min_penalty(int state) const {
    const double w = weight(state);
    switch (family_) {
      case PenaltyFamily::Additive:
        return zeta_ ? zeta_->range_min() - w : -std::numeric_limits<double>::infinity();
      case PenaltyFamily::Multiplicative:
        return zeta_ ? zeta_->range_min() / w : 0.0;
      case PenaltyFamily::PowerShift:
        return -w;
      case PenaltyFamily::ExpShift:
        return -w;
      case PenaltyFamily::LogShift:
        return -std::numeric_limits<double>::infinity();
    }
    return -std::numeric_limits<double>::infinity();
  }

  double max_penalty(int state) const {
    const double w = weight(state);
    if (zeta_) {
      return family_ == PenaltyFamily::Multiplicative ? zeta_->range_max() / w
                                                      : zeta_->range_max() - w;
    }
    return std::numeric_limits<double>::infinity();
  }

  // True when g_state(price) can be evaluated.
  bool price_in_domain(int state, double price) const {
    (void)state;
    switch (family_) {
      case PenaltyFamily::Additive:
      case PenaltyFamily::Multiplicative:
        if (zeta_ && (price < zeta_->domain_min() || price > zeta_->domain_max())) return false;
        return family_ == PenaltyFamily::Additive || zeta_ || price > 0.0;
      case PenaltyFamily::PowerShift:
        return price >= 0.0;
      case PenaltyFamily::ExpShift:
        return true;
      case PenaltyFamily::LogShift:
        return price > 0.0;
    }
    return false;
  }

  // Checks, on probe grids over the working range, the assumptions the
  // equilibrium construction needs: strict monotonicity of each g_i, the
  // ordering g_i > g_j for i < j, the price-ratio condition
  // (f_j(y)-c)/(f_k(y)-c) < (f_j(x)-c)/(f_k(x)-c) for x > y > g_j(c), j < k,
  // and cap > g_1(cost). Reports the first violation instead of throwing.
  PenaltyValidation validate(double cost, double cap, int grid_size = 512) const {
    if (grid_size < 100) throw std::invalid_argument("validate grid_size must be >= 100");
    PenaltyValidation rep;
    const int n = states();

    for (int i = 1; i <= n; ++i) {
      if (!price_in_domain(i, cost))
        return fail(rep, "cost_domain", i, 0, cost, 0.0,
                    "transition cost outside the price domain of g");
    }
    double g1c;
    try {
      g1c = penalty(1, cost);
    } catch (const DomainError& e) {
      return fail(rep, "cost_domain", 1, 0, cost, 0.0, e.what());
    }
    if (!(cap > g1c))
      return fail(rep, "cap", 1, 0, cost, cap, "penalty cap must exceed g_1(cost)");
    if (cap > max_penalty(n))
      return fail(rep, "cap_range", n, 0, cap, 0.0, "penalty cap above the attainable range");

    // Price probes span [cost, f_n(cap)], the prices the equilibrium can use.
    double hi_price;
    try {
      hi_price = price(n, cap);
    } catch (const DomainError& e) {
      return fail(rep, "cap_range", n, 0, cap, 0.0, e.what());
    }
    const double lo_price = cost;
    for (int i = 1; i <= n; ++i) {
      double prev = 0.0;
      bool have_prev = false;
      for (int t = 0; t <= grid_size; ++t) {
        double p = lo_price + (hi_price - lo_price) * t / grid_size;
        if (!price_in_domain(i, p)) continue;
        double g = penalty(i, p);
        if (have_prev && !(g > prev))
          return fail(rep, "monotone", i, 0, p, prev, "g must be strictly increasing in price");
        prev = g;
        have_prev = true;
        if (i < n) {
          double gnext = penalty(i + 1, p);
          if (!(g > gnext))
            return fail(rep, "ordering", i, i + 1, p, g,
                        "g_i must exceed g_j for i < j at every price");
        }
      }
    }

    // Ratio condition, every pair j < k over (g_j(cost), cap].
    for (int j = 1; j <= n; ++j) {
      const double yj = penalty(j, cost);
      for (int k = j + 1; k <= n; ++k) {
        double prev = 0.0;
        bool have_prev = false;
        for (int t = 1; t <= grid_size; ++t) {
          double y = yj + (cap - yj) * t / grid_size;
          double num = price(j, y) - cost;
          double den = price(k, y) - cost;
          if (!(den > 0.0))
            return fail(rep, "ratio_domain", j, k, y, den,
                        "f_k(y) - cost must be positive above g_j(cost)");
          double ratio = num / den;
          if (have_prev && !(ratio > prev))
            return fail(rep, "ratio", j, k, y, ratio,
                        "(f_j - c)/(f_k - c) must be strictly increasing");
          prev = ratio;
          have_prev = true;
        }
      }
    }
    return rep;
  }

 private:
  double weight(int state) const {
    if (state < 1 || state > states())
      throw DomainError("state index out of range 1..n");
    return h_[static_cast<std::size_t>(state - 1)];
  }

  double zeta_eval(double p) const {
    if (zeta_) return zeta_->eval(p);
    return p;
  }
  double zeta_inverse(double y) const {
    if (zeta_) return zeta_->inverse(y);
    return y;
  }

  static PenaltyValidation fail(PenaltyValidation& rep, const char* check, int i, int j,
                                double y, double x, const std::string& detail) {
    rep.ok = false;
    rep.check = check;
    rep.state_i = i;
    rep.state_j = j;
    rep.at_y = y;
    rep.at_x = x;
    std::ostringstream os;
    os << check << " (state " << i;
    if (j > 0) os << " vs " << j;
    os << "): " << detail;
    rep.detail = os.str();
    return rep;
  }

  PenaltyFamily family_;
  std::vector<double> h_;
  double r_;
  std::optional<PiecewiseLinear> zeta_;
};

}  // namespace spectrum
