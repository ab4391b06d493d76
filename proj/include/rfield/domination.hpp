#pragma once
// Stochastic domination of a family of cell laws by a single law, the
// pointwise-supremum dominator, and uniform-integrability traces.

#include "rfield/marginal.hpp"
#include "rfield/model.hpp"
#include "rfield/varying.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace rfield {

struct DominationReport {
  std::vector<double> x_grid;
  std::vector<std::vector<double>> cell_tails;  // [cell][x] P(|X_cell| > x)
  std::vector<double> dominator_tail;           // pointwise sup over cells
  std::vector<double> candidate_tail;           // P(|X| > x) for the candidate
  double max_violation = 0.0;                   // max over x of sup tail - candidate tail
  MarginalSpec dominator;                       // tabulated supremum law

  bool dominated(double tol = 0.0) const { return max_violation <= tol; }
};

/// Laws of every distinct cell of a 2^m x 2^n grid under the model.
inline std::vector<MarginalLaw> family_laws(const FieldModel& model, int m, int n) {
  return cell_classes(model, std::size_t{1} << m, std::size_t{1} << n).laws;
}

inline DominationReport domination_check(std::span<const MarginalLaw> cells, const MarginalSpec& candidate,
                                         std::vector<double> x_grid = {}) {
  if (cells.empty()) throw std::invalid_argument("domination_check: empty family");
  DominationReport rep;
  const MarginalLaw cand(candidate);
  if (x_grid.empty()) {
    std::vector<MarginalLaw> all(cells.begin(), cells.end());
    all.push_back(cand);
    x_grid = adaptive_abs_grid(all);
  }
  rep.x_grid = x_grid;
  rep.dominator = dominator_model(cells);
  rep.cell_tails.assign(cells.size(), std::vector<double>(x_grid.size()));
  rep.dominator_tail.assign(x_grid.size(), 0.0);
  rep.candidate_tail.resize(x_grid.size());
  rep.max_violation = -kInf;
  for (std::size_t k = 0; k < x_grid.size(); ++k) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      rep.cell_tails[c][k] = cells[c].abs_tail(x_grid[k]);
      rep.dominator_tail[k] = std::max(rep.dominator_tail[k], rep.cell_tails[c][k]);
    }
    rep.candidate_tail[k] = cand.abs_tail(x_grid[k]);
    rep.max_violation = std::max(rep.max_violation, rep.dominator_tail[k] - rep.candidate_tail[k]);
  }
  return rep;
}

/// g(x) = x^p L(x^p).
struct PowerWeight {
  double p = 1.0;
  SlowlyVaryingFamily l = SlowlyVaryingFamily::constant();

  double operator()(double x) const {
    const double xp = std::pow(std::abs(x), p);
    return xp * l(xp);
  }

  /// Smallest t with g(y) > k for all y > t (g is nondecreasing in practice;
  /// bisection on the running maximum keeps this safe near the origin).
  double level_point(double k) const {
    if ((*this)(0.0) > k) return 0.0;
    double hi = 1.0;
    while ((*this)(hi) <= k && hi < 1e300) hi *= 2.0;
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      ((*this)(mid) <= k ? lo : hi) = mid;
      if (hi - lo <= 1e-15 * hi) break;
    }
    return lo;
  }
};

struct UiTrace {
  std::vector<double> k_grid;
  std::vector<double> values;  // sup over cells of E(g(|X|) 1(g(|X|) > K)); +inf when divergent
  bool tends_to_zero = false;  // last value is finite and at most 1e-3 of the first finite one, or exactly 0
};

inline UiTrace uniform_integrability_trace(std::span<const MarginalLaw> cells, const PowerWeight& g, std::vector<double> k_grid) {
  if (cells.empty()) throw std::invalid_argument("uniform_integrability_trace: empty family");
  std::sort(k_grid.begin(), k_grid.end());
  UiTrace out;
  out.k_grid = k_grid;
  const double growth = g.p;
  for (double k : k_grid) {
    const double t = g.level_point(k);
    double sup = 0.0;
    for (const auto& law : cells) sup = std::max(sup, law.abs_expectation_above(g, t, growth));
    out.values.push_back(sup);
  }
  // Enforce monotonicity against quadrature noise.
  for (std::size_t i = 1; i < out.values.size(); ++i) out.values[i] = std::min(out.values[i], out.values[i - 1]);
  if (!out.values.empty() && std::isfinite(out.values.back())) {
    double first = 0.0;
    for (double v : out.values)
      if (std::isfinite(v)) {
        first = v;
        break;
      }
    out.tends_to_zero = out.values.back() == 0.0 || out.values.back() <= 1e-3 * first;
  }
  return out;
}

/// Default K grid: powers of ten from 1 to 1e12.
inline std::vector<double> default_k_grid() {
  std::vector<double> k;
  for (int e = 0; e <= 12; ++e) k.push_back(std::pow(10.0, e));
  return k;
}

struct DominatorMomentReport {
  double family_moment = 0.0;     // sup E(|X|^p L(|X|^p) log_nu^(2)|X|)
  double dominator_moment = 0.0;  // E(|X|^p L(|X|^p)) for the constructed dominator
  bool family_finite = false;
  bool dominator_finite = false;
  MarginalSpec dominator;
};

/// Builds the supremum dominator and evaluates both moment conditions.
inline DominatorMomentReport dominator_moment_check(std::span<const MarginalLaw> cells, double p, const SlowlyVaryingFamily& l,
                                                    int nu, double threshold = 1e12) {
  DominatorMomentReport rep;
  const PowerWeight g{p, l};
  const auto strong = [&](double x) { return g(x) * log_nu_sq(std::abs(x), nu); };
  for (const auto& law : cells) rep.family_moment = std::max(rep.family_moment, law.abs_expectation_above(strong, 0.0, p));
  rep.family_finite = std::isfinite(rep.family_moment);
  rep.dominator = dominator_model(cells);
  const MarginalLaw dom(rep.dominator);
  rep.dominator_moment = dom.abs_expectation_above(g, 0.0, p);
  rep.dominator_finite = std::isfinite(rep.dominator_moment) && rep.dominator_moment <= threshold;
  return rep;
}

}  // namespace rfield
