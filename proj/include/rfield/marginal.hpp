#pragma once
// Marginal distributions of single cells.
//
// A marginal is Y = shift + scale * X where X is one of the base kinds below.
// All tail probabilities and truncated moments are exact (closed form or a
// finite sum) for unshifted laws; shifted continuous laws fall back to
// adaptive Gauss-Kronrod quadrature.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rfield {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class MarginalKind {
  rademacher,
  bernoulli,           // {0, 1} with P(1) = prob
  centered_bernoulli,  // {-prob, 1 - prob}
  pareto,              // P(X > x) = x^-beta on [1, inf)
  exponential,
  discrete_table,
  symmetrized_pareto,  // sign * Pareto(beta)
  tabulated_tail,      // nonnegative law given by a tabulated tail function
};

inline std::string_view to_string(MarginalKind k) {
  switch (k) {
    case MarginalKind::rademacher: return "rademacher";
    case MarginalKind::bernoulli: return "bernoulli";
    case MarginalKind::centered_bernoulli: return "centered_bernoulli";
    case MarginalKind::pareto: return "pareto";
    case MarginalKind::exponential: return "exponential";
    case MarginalKind::discrete_table: return "discrete";
    case MarginalKind::symmetrized_pareto: return "symmetrized_pareto";
    case MarginalKind::tabulated_tail: return "tabulated_tail";
  }
  return "unknown";
}

/// Which half of a signed variable a one-sided quantity refers to.
enum class Side { positive, negative };

struct MarginalSpec {
  MarginalKind kind = MarginalKind::rademacher;
  double param = 0.0;  // Bernoulli probability, Pareto tail index or exponential rate
  std::vector<double> values;  // discrete_table support
  std::vector<double> probs;   // discrete_table probabilities
  std::vector<double> knots;   // tabulated_tail abscissae, knots[0] == 0
  std::vector<double> tails;   // tabulated_tail values P(X > knot)
  double shift = 0.0;
  double scale = 1.0;

  static MarginalSpec rademacher() { return {}; }
  static MarginalSpec bernoulli(double p) { return with(MarginalKind::bernoulli, p); }
  static MarginalSpec centered_bernoulli(double p) { return with(MarginalKind::centered_bernoulli, p); }
  static MarginalSpec pareto(double beta) { return with(MarginalKind::pareto, beta); }
  static MarginalSpec exponential(double rate) { return with(MarginalKind::exponential, rate); }
  static MarginalSpec symmetrized_pareto(double beta) { return with(MarginalKind::symmetrized_pareto, beta); }
  static MarginalSpec discrete(std::vector<double> v, std::vector<double> p) {
    MarginalSpec s = with(MarginalKind::discrete_table, 0.0);
    s.values = std::move(v);
    s.probs = std::move(p);
    return s;
  }
  static MarginalSpec constant(double value) { return discrete({value}, {1.0}); }
  static MarginalSpec tabulated(std::vector<double> x, std::vector<double> tail) {
    MarginalSpec s = with(MarginalKind::tabulated_tail, 0.0);
    s.knots = std::move(x);
    s.tails = std::move(tail);
    return s;
  }

  MarginalSpec shifted(double c) const {
    MarginalSpec s = *this;
    s.shift += c;
    return s;
  }
  /// Law of c * Y.
  MarginalSpec scaled(double c) const {
    MarginalSpec s = *this;
    s.shift *= c;
    s.scale *= c;
    return s;
  }

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("MarginalSpec: " + what); };
    if (!(scale > 0.0) || !std::isfinite(scale)) fail("scale must be a finite positive real");
    if (!std::isfinite(shift)) fail("shift must be finite");
    switch (kind) {
      case MarginalKind::rademacher: break;
      case MarginalKind::bernoulli:
      case MarginalKind::centered_bernoulli:
        if (!(param >= 0.0 && param <= 1.0)) fail("Bernoulli probability must lie in [0, 1]");
        break;
      case MarginalKind::pareto:
      case MarginalKind::symmetrized_pareto:
        if (!(param > 0.0) || !std::isfinite(param)) fail("Pareto tail index must be > 0");
        break;
      case MarginalKind::exponential:
        if (!(param > 0.0) || !std::isfinite(param)) fail("Exponential rate must be > 0");
        break;
      case MarginalKind::discrete_table: {
        if (values.empty() || values.size() != probs.size())
          fail("DiscreteTable needs equally many values and probabilities");
        double total = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
          if (!(probs[i] >= 0.0)) fail("DiscreteTable probabilities must be nonnegative");
          if (!std::isfinite(values[i])) fail("DiscreteTable values must be finite");
          total += probs[i];
        }
        if (std::abs(total - 1.0) > 1e-12) fail("DiscreteTable probabilities must sum to 1 within 1e-12");
        break;
      }
      case MarginalKind::tabulated_tail: {
        if (knots.size() < 2 || knots.size() != tails.size()) fail("tabulated tail needs >= 2 matching knots");
        if (knots.front() != 0.0) fail("tabulated tail must start at x = 0");
        if (shift != 0.0) fail("tabulated tail does not support a shift");
        for (std::size_t i = 0; i < knots.size(); ++i) {
          if (!(tails[i] >= 0.0 && tails[i] <= 1.0)) fail("tabulated tail values must lie in [0, 1]");
          if (i > 0 && !(knots[i] > knots[i - 1])) fail("tabulated knots must be strictly increasing");
          if (i > 0 && tails[i] > tails[i - 1]) fail("tabulated tail must be nonincreasing");
        }
        break;
      }
    }
  }

 private:
  static MarginalSpec with(MarginalKind k, double p) {
    MarginalSpec s;
    s.kind = k;
    s.param = p;
    return s;
  }
};

inline bool operator==(const MarginalSpec& a, const MarginalSpec& b) {
  return a.kind == b.kind && a.param == b.param && a.values == b.values && a.probs == b.probs &&
         a.knots == b.knots && a.tails == b.tails && a.shift == b.shift && a.scale == b.scale;
}

namespace detail {

struct Atom {
  double value;
  double prob;
};

enum class DensityKind { pareto, exponential, half_pareto, power_segment };

/// A smooth piece of the base density on [lo, hi].
struct DensityPiece {
  double lo;
  double hi;
  DensityKind kind;
  double a = 0.0;  // pareto/half_pareto: beta; exponential: rate; power_segment: coefficient
  double b = 0.0;  // power_segment: exponent of the tail

  double operator()(double x) const {
    switch (kind) {
      case DensityKind::pareto: return a * std::pow(x, -a - 1.0);
      case DensityKind::half_pareto: return 0.5 * a * std::pow(std::abs(x), -a - 1.0);
      case DensityKind::exponential: return a * std::exp(-a * x);
      case DensityKind::power_segment: return -b * a * std::pow(x, b - 1.0);
    }
    return 0.0;
  }
};

template <class F>
double integrate(F&& f, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  double err = 0.0;
  // Sliver intervals (atom edges) cannot meet a relative tolerance; one rule suffices.
  const bool sliver = std::isfinite(hi) && std::isfinite(lo) && hi - lo <= 1e-6 * std::max(std::abs(lo), std::abs(hi));
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, sliver ? 0 : 15, 1e-12, &err);
}

/// Pareto(beta) partial moments on [1, inf).
inline double pareto_lower_moment(double beta, double r, double a) {
  if (a < 1.0) return 0.0;
  if (r == beta) return beta * std::log(a);
  return beta * (std::pow(a, r - beta) - 1.0) / (r - beta);
}
inline double pareto_upper_moment(double beta, double r, double a) {
  if (r >= beta) return kInf;
  const double lo = std::max(a, 1.0);
  return beta * std::pow(lo, r - beta) / (beta - r);
}

}  // namespace detail

/// Evaluator for a validated MarginalSpec.
class MarginalLaw {
 public:
  explicit MarginalLaw(MarginalSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    build();
  }

  const MarginalSpec& spec() const noexcept { return spec_; }
  double shift() const noexcept { return spec_.shift; }
  double scale() const noexcept { return spec_.scale; }

  /// Law of c * Y for c > 0.
  MarginalLaw scaled(double c) const {
    if (!(c > 0.0)) throw std::invalid_argument("MarginalLaw::scaled: factor must be positive");
    MarginalLaw out = *this;
    out.spec_ = spec_.scaled(c);
    return out;
  }

  // ---- tails -------------------------------------------------------------

  /// P(Y > y).
  double upper_tail(double y) const { return base_upper((y - shift()) / scale()); }
  /// P(Y < y).
  double lower_tail(double y) const { return base_lower((y - shift()) / scale()); }
  /// P(|Y| > y).
  double abs_tail(double y) const {
    if (y < 0.0) return 1.0;
    return std::min(1.0, upper_tail(y) + lower_tail(-y));
  }
  /// P(Z > z) with Z = Y^+ (positive side) or Y^- (negative side).
  double side_tail(Side side, double z) const {
    if (z < 0.0) return 1.0;
    return side == Side::positive ? upper_tail(z) : lower_tail(-z);
  }

  bool nonnegative() const { return lower_tail(0.0) == 0.0; }

  // ---- sampling ----------------------------------------------------------

  /// Generalized inverse of the CDF: smallest y with P(Y <= y) >= u.
  double quantile(double u) const { return shift() + scale() * base_quantile(u); }

  // ---- moments -----------------------------------------------------------

  double mean() const {
    const double m = base_mean();
    if (std::isnan(m)) return m;
    return shift() + scale() * m;
  }

  /// Power-law index of the heavier tail; +inf for light or bounded tails.
  double tail_index() const { return tail_index_; }

  /// E[Z^r 1(Z <= a)] for Z the given side of Y, r > 0.
  double partial_moment(Side side, double r, double a) const {
    if (!(a > 0.0)) return 0.0;
    if (shift() == 0.0) {
      const double s = scale();
      return std::pow(s, r) * base_partial(side, r, a / s);
    }
    double total = 0.0;
    for (const auto& at : atoms_) {
      const double z = side_value(side, shift() + scale() * at.value);
      if (z > 0.0 && z <= a) total += at.prob * std::pow(z, r);
    }
    const auto h = [&](double y) { return std::pow(side_value(side, y), r); };
    return total + integrate_y(h, side_interval(side, 0.0, a, false), 0.0);
  }

  /// E[Z^r 1(Z > a)] for Z the given side of Y, r > 0, a >= 0.
  double upper_partial_moment(Side side, double r, double a) const {
    a = std::max(a, 0.0);
    if (shift() == 0.0) {
      const double s = scale();
      return std::pow(s, r) * base_upper_partial(side, r, a / s);
    }
    double total = 0.0;
    for (const auto& at : atoms_) {
      const double z = side_value(side, shift() + scale() * at.value);
      if (z > a) total += at.prob * std::pow(z, r);
    }
    const auto h = [&](double y) { return std::pow(side_value(side, y), r); };
    return total + integrate_y(h, side_interval(side, a, kInf, true), r);
  }

  /// E[min(Z, b)^r] for Z the given side of Y.
  double clamp_moment(Side side, double r, double b) const {
    if (!(b > 0.0)) return 0.0;
    return partial_moment(side, r, b) + std::pow(b, r) * side_tail(side, b);
  }

  /// E[|Y|^r 1(|Y| <= a)].
  double abs_truncated_moment(double r, double a) const {
    return partial_moment(Side::positive, r, a) + partial_moment(Side::negative, r, a);
  }
  /// E[|Y|^r 1(|Y| > a)].
  double abs_upper_moment(double r, double a) const {
    return upper_partial_moment(Side::positive, r, a) + upper_partial_moment(Side::negative, r, a);
  }
  /// E[Y 1(|Y| <= b)].
  double truncated_mean(double b) const {
    return partial_moment(Side::positive, 1.0, b) - partial_moment(Side::negative, 1.0, b);
  }
  /// E[clamp(Y, -b, b)].
  double signed_clamp_mean(double b) const {
    return clamp_moment(Side::positive, 1.0, b) - clamp_moment(Side::negative, 1.0, b);
  }
  /// E|clamp(Y, -b, b)|^r.
  double signed_clamp_abs_moment(double r, double b) const {
    return clamp_moment(Side::positive, r, b) + clamp_moment(Side::negative, r, b);
  }

  /// E[g(|Y|) 1(|Y| > t)] for a nonnegative g growing at most like |y|^growth
  /// (up to slowly varying factors). Returns +inf when the integral diverges,
  /// which is declared whenever growth >= tail_index().
  template <class G>
  double abs_expectation_above(G&& g, double t, double growth) const {
    t = std::max(t, 0.0);
    double total = 0.0;
    for (const auto& at : atoms_) {
      const double y = std::abs(shift() + scale() * at.value);
      if (y > t && at.prob > 0.0) total += at.prob * g(y);
    }
    const auto h = [&](double y) { return g(std::abs(y)); };
    total += integrate_y(h, {t, kInf, true}, growth);
    total += integrate_y(h, {-kInf, -t, false, true}, growth);
    return total;
  }

  /// Points where the law of |Y| has atoms or density edges.
  std::vector<double> abs_breakpoints() const {
    std::vector<double> out;
    for (const auto& at : atoms_)
      if (at.prob > 0.0) out.push_back(std::abs(shift() + scale() * at.value));
    for (const auto& p : pieces_) {
      if (std::isfinite(p.lo)) out.push_back(std::abs(shift() + scale() * p.lo));
      if (std::isfinite(p.hi)) out.push_back(std::abs(shift() + scale() * p.hi));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  bool has_continuous_part() const { return !pieces_.empty(); }

 private:
  struct YInterval {
    double lo;
    double hi;
    bool open_lo = false;  // exclude lo (for strict inequalities on atoms; no effect on densities)
    bool open_hi = false;
  };

  static double side_value(Side side, double y) {
    return side == Side::positive ? std::max(y, 0.0) : std::max(-y, 0.0);
  }

  /// y-interval on which Z = side(Y) lies in (zlo, zhi].
  static YInterval side_interval(Side side, double zlo, double zhi, bool) {
    if (side == Side::positive) return {zlo, zhi, true, false};
    return {-zhi, -zlo, false, true};
  }

  /// Integral of h(Y) against the continuous part of Y over the y-interval.
  template <class H>
  double integrate_y(H&& h, YInterval iv, double growth) const {
    double total = 0.0;
    const double c = shift(), s = scale();
    const double xlo = (iv.lo - c) / s;
    const double xhi = (iv.hi - c) / s;
    for (const auto& p : pieces_) {
      const double lo = std::max(p.lo, xlo);
      const double hi = std::min(p.hi, xhi);
      if (!(hi > lo)) continue;
      if ((std::isinf(lo) || std::isinf(hi)) && growth >= tail_index_) return kInf;
      total += detail::integrate([&](double x) { return h(c + s * x) * p(x); }, lo, hi);
    }
    return total;
  }

  void build() {
    const double q = spec_.param;
    tail_index_ = kInf;
    switch (spec_.kind) {
      case MarginalKind::rademacher: atoms_ = {{-1.0, 0.5}, {1.0, 0.5}}; break;
      case MarginalKind::bernoulli: atoms_ = {{0.0, 1.0 - q}, {1.0, q}}; break;
      case MarginalKind::centered_bernoulli: atoms_ = {{-q, 1.0 - q}, {1.0 - q, q}}; break;
      case MarginalKind::discrete_table:
        for (std::size_t i = 0; i < spec_.values.size(); ++i) atoms_.push_back({spec_.values[i], spec_.probs[i]});
        std::stable_sort(atoms_.begin(), atoms_.end(), [](auto& x, auto& y) { return x.value < y.value; });
        break;
      case MarginalKind::pareto:
        pieces_ = {{1.0, kInf, detail::DensityKind::pareto, q}};
        tail_index_ = q;
        break;
      case MarginalKind::exponential: pieces_ = {{0.0, kInf, detail::DensityKind::exponential, q}}; break;
      case MarginalKind::symmetrized_pareto:
        pieces_ = {{-kInf, -1.0, detail::DensityKind::half_pareto, q}, {1.0, kInf, detail::DensityKind::half_pareto, q}};
        tail_index_ = q;
        break;
      case MarginalKind::tabulated_tail: build_tabulated(); break;
    }
    cumulative_.clear();
    double acc = 0.0;
    for (const auto& at : atoms_) cumulative_.push_back(acc += at.prob);
  }

  // ---- tabulated tails ---------------------------------------------------
  //
  // Segment k covers [x_k, x_{k+1}). Where both ends are positive the tail is
  // interpolated linearly in log-log space; otherwise it is held at T_k and
  // drops at x_{k+1}. Past the last knot the last power-law slope continues.

  struct Segment {
    double x0, x1, t0, t1;
    bool power;
    double slope;  // d log T / d log x, <= 0
    double tail_at(double x) const { return power ? t0 * std::pow(x / x0, slope) : t0; }
  };

  void build_tabulated() {
    const auto& x = spec_.knots;
    const auto& t = spec_.tails;
    segs_.clear();
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
      Segment sg{x[k], x[k + 1], t[k], t[k + 1], false, 0.0};
      if (x[k] > 0.0 && t[k] > 0.0 && t[k + 1] > 0.0) {
        sg.power = true;
        sg.slope = std::log(t[k + 1] / t[k]) / std::log(x[k + 1] / x[k]);
      }
      segs_.push_back(sg);
    }
    last_x_ = x.back();
    last_t_ = t.back();
    tail_slope_ = 0.0;
    if (last_t_ > 0.0) {
      if (segs_.back().power && segs_.back().slope < 0.0) {
        tail_slope_ = segs_.back().slope;
      } else {
        throw std::invalid_argument("MarginalSpec: tabulated tail must end at 0 or with a decaying power law");
      }
      tail_index_ = -tail_slope_;
    }
    atoms_.clear();
    pieces_.clear();
    if (t.front() < 1.0) atoms_.push_back({0.0, 1.0 - t.front()});
    for (const auto& sg : segs_) {
      if (sg.power) {
        pieces_.push_back({sg.x0, sg.x1, detail::DensityKind::power_segment, sg.t0 * std::pow(sg.x0, -sg.slope), sg.slope});
      } else if (sg.t0 > sg.t1) {
        atoms_.push_back({sg.x1, sg.t0 - sg.t1});
      }
    }
    if (last_t_ > 0.0)
      pieces_.push_back({last_x_, kInf, detail::DensityKind::power_segment, last_t_ * std::pow(last_x_, -tail_slope_), tail_slope_});
  }

  double tab_tail(double x) const {
    if (x < 0.0) return 1.0;
    if (x >= last_x_) return last_t_ > 0.0 ? last_t_ * std::pow(x / last_x_, tail_slope_) : 0.0;
    auto it = std::upper_bound(segs_.begin(), segs_.end(), x, [](double v, const Segment& s) { return v < s.x0; });
    return std::prev(it)->tail_at(x);
  }
  /// P(X >= x), the left limit of the tail.
  double tab_tail_left(double x) const {
    if (x <= 0.0) return 1.0;
    if (x > last_x_) return tab_tail(x);
    auto it = std::lower_bound(segs_.begin(), segs_.end(), x, [](const Segment& s, double v) { return s.x0 < v; });
    const Segment& sg = *std::prev(it);  // x in (x0, x1]
    return sg.power ? sg.tail_at(x) : sg.t0;
  }
  /// Integral of r y^(r-1) T(y) over [lo, hi].
  double tab_tail_integral(double r, double lo, double hi) const {
    double total = 0.0;
    auto piece = [&](double a, double b, double t0, double x0, bool power, double slope) {
      if (!(b > a)) return;
      if (!power) {
        total += t0 * (std::pow(b, r) - std::pow(a, r));
        return;
      }
      const double c = t0 * std::pow(x0, -slope);
      const double e = r + slope;
      if (e == 0.0)
        total += c * r * std::log(b / a);
      else
        total += c * r * (std::pow(b, e) - std::pow(a, e)) / e;
    };
    for (const auto& sg : segs_) piece(std::max(lo, sg.x0), std::min(hi, sg.x1), sg.t0, sg.x0, sg.power, sg.slope);
    if (hi > last_x_ && last_t_ > 0.0) {
      if (std::isinf(hi)) {
        if (r + tail_slope_ >= 0.0) return kInf;
        const double a = std::max(lo, last_x_);
        total += -last_t_ * std::pow(last_x_, -tail_slope_) * r * std::pow(a, r + tail_slope_) / (r + tail_slope_);
      } else {
        piece(std::max(lo, last_x_), hi, last_t_, last_x_, true, tail_slope_);
      }
    }
    return total;
  }
  double tab_quantile(double u) const {
    const double target = 1.0 - u;  // find smallest x with T(x) <= target
    if (target >= spec_.tails.front()) return 0.0;
    for (const auto& sg : segs_) {
      if (sg.t1 <= target) {
        if (!sg.power) return sg.x1;
        return sg.x0 * std::pow(target / sg.t0, 1.0 / sg.slope);
      }
    }
    return last_x_ * std::pow(target / last_t_, 1.0 / tail_slope_);
  }

  // ---- base law (shift 0, scale 1) ----------------------------------------

  double atoms_upper(double x) const {
    double p = 0.0;
    for (const auto& at : atoms_)
      if (at.value > x) p += at.prob;
    return p;
  }
  double atoms_lower(double x) const {
    double p = 0.0;
    for (const auto& at : atoms_)
      if (at.value < x) p += at.prob;
    return p;
  }

  double base_upper(double x) const {
    const double q = spec_.param;
    switch (spec_.kind) {
      case MarginalKind::pareto: return x < 1.0 ? 1.0 : std::pow(x, -q);
      case MarginalKind::exponential: return x < 0.0 ? 1.0 : std::exp(-q * x);
      case MarginalKind::symmetrized_pareto:
        if (x >= 1.0) return 0.5 * std::pow(x, -q);
        if (x >= -1.0) return 0.5;
        return 1.0 - 0.5 * std::pow(-x, -q);
      case MarginalKind::tabulated_tail: return tab_tail(x);
      default: return atoms_upper(x);
    }
  }
  double base_lower(double x) const {
    const double q = spec_.param;
    switch (spec_.kind) {
      case MarginalKind::pareto: return x <= 1.0 ? 0.0 : 1.0 - std::pow(x, -q);
      case MarginalKind::exponential: return x <= 0.0 ? 0.0 : -std::expm1(-q * x);
      case MarginalKind::symmetrized_pareto:
        if (x <= -1.0) return 0.5 * std::pow(-x, -q);
        if (x <= 1.0) return 0.5;
        return 1.0 - 0.5 * std::pow(x, -q);
      case MarginalKind::tabulated_tail: return 1.0 - tab_tail_left(x);
      default: return atoms_lower(x);
    }
  }
  double base_quantile(double u) const {
    const double q = spec_.param;
    switch (spec_.kind) {
      case MarginalKind::pareto: return std::pow(1.0 - u, -1.0 / q);
      case MarginalKind::exponential: return -std::log1p(-u) / q;
      case MarginalKind::symmetrized_pareto:
        return u < 0.5 ? -std::pow(2.0 * u, -1.0 / q) : std::pow(2.0 * (1.0 - u), -1.0 / q);
      case MarginalKind::tabulated_tail: return tab_quantile(u);
      default: {
        auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
        const std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), atoms_.size() - 1);
        return atoms_[idx].value;
      }
    }
  }
  double base_mean() const {
    const double q = spec_.param;
    switch (spec_.kind) {
      case MarginalKind::pareto: return q > 1.0 ? q / (q - 1.0) : kInf;
      case MarginalKind::exponential: return 1.0 / q;
      case MarginalKind::symmetrized_pareto: return q > 1.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
      case MarginalKind::tabulated_tail: return tab_tail_integral(1.0, 0.0, kInf);
      default: {
        double m = 0.0;
        for (const auto& at : atoms_) m += at.value * at.prob;
        return m;
      }
    }
  }
  /// E[(X^side)^r 1(X^side <= a)] for the base law.
  double base_partial(Side side, double r, double a) const {
    const double q = spec_.param;
    switch (spec_.kind) {
      case MarginalKind::pareto: return side == Side::positive ? detail::pareto_lower_moment(q, r, a) : 0.0;
      case MarginalKind::symmetrized_pareto: return 0.5 * detail::pareto_lower_moment(q, r, a);
      case MarginalKind::exponential:
        return side == Side::positive ? boost::math::tgamma_lower(r + 1.0, q * a) / std::pow(q, r) : 0.0;
      case MarginalKind::tabulated_tail:
        if (side == Side::negative) return 0.0;
        return std::max(0.0, tab_tail_integral(r, 0.0, a) - std::pow(a, r) * tab_tail(a));
      default: {
        double m = 0.0;
        for (const auto& at : atoms_) {
          const double z = side_value(side, at.value);
          if (z > 0.0 && z <= a) m += at.prob * std::pow(z, r);
        }
        return m;
      }
    }
  }
  /// E[(X^side)^r 1(X^side > a)] for the base law, a >= 0.
  double base_upper_partial(Side side, double r, double a) const {
    const double q = spec_.param;
    switch (spec_.kind) {
      case MarginalKind::pareto: return side == Side::positive ? detail::pareto_upper_moment(q, r, a) : 0.0;
      case MarginalKind::symmetrized_pareto: return 0.5 * detail::pareto_upper_moment(q, r, a);
      case MarginalKind::exponential:
        return side == Side::positive ? boost::math::tgamma(r + 1.0, q * a) / std::pow(q, r) : 0.0;
      case MarginalKind::tabulated_tail: {
        if (side == Side::negative) return 0.0;
        const double rest = tab_tail_integral(r, a, kInf);
        return std::isinf(rest) ? kInf : std::pow(a, r) * tab_tail(a) + rest;
      }
      default: {
        double m = 0.0;
        for (const auto& at : atoms_) {
          const double z = side_value(side, at.value);
          if (z > a) m += at.prob * std::pow(z, r);
        }
        return m;
      }
    }
  }

  MarginalSpec spec_;
  std::vector<detail::Atom> atoms_;
  std::vector<double> cumulative_;
  std::vector<detail::DensityPiece> pieces_;
  double tail_index_ = kInf;
  std::vector<Segment> segs_;
  double last_x_ = 0.0;
  double last_t_ = 0.0;
  double tail_slope_ = 0.0;
};

}  // namespace rfield
