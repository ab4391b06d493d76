#pragma once
// Exhaustive evaluation of the moment condition on sums of monotone transforms
// for small finite joint distributions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfield {

struct MonotoneTransform {
  enum class Kind { identity, affine, clamp, step };
  Kind kind = Kind::identity;
  double p1 = 0.0;  // affine: slope (>= 0); clamp: lower; step: threshold
  double p2 = 0.0;  // affine: intercept; clamp: upper; step: value below
  double p3 = 0.0;  // step: value at or above the threshold

  static MonotoneTransform identity() { return {}; }
  static MonotoneTransform affine(double slope, double intercept) { return {Kind::affine, slope, intercept}; }
  static MonotoneTransform clamp(double lo, double hi) { return {Kind::clamp, lo, hi}; }
  static MonotoneTransform step(double threshold, double below, double above) { return {Kind::step, threshold, below, above}; }

  double operator()(double x) const {
    switch (kind) {
      case Kind::identity: return x;
      case Kind::affine: return p1 * x + p2;
      case Kind::clamp: return std::clamp(x, p1, p2);
      case Kind::step: return x < p1 ? p2 : p3;
    }
    return x;
  }
};

/// Joint law of d variables over k outcomes: outcome o has probability
/// probs[o] and values outcomes[o][0..d).
struct H2qInstance {
  std::vector<std::vector<double>> outcomes;
  std::vector<double> probs;
  std::vector<MonotoneTransform> transforms;  // empty: identity for every variable

  std::size_t dims() const { return outcomes.empty() ? 0 : outcomes.front().size(); }

  void validate() const {
    if (outcomes.empty() || outcomes.size() > 12) throw std::invalid_argument("H2qInstance: requires 1 to 12 outcomes");
    if (probs.size() != outcomes.size()) throw std::invalid_argument("H2qInstance: one probability per outcome");
    const std::size_t d = dims();
    if (d == 0 || d > 6) throw std::invalid_argument("H2qInstance: requires 1 to 6 variables");
    double total = 0.0;
    for (std::size_t o = 0; o < outcomes.size(); ++o) {
      if (outcomes[o].size() != d) throw std::invalid_argument("H2qInstance: outcomes differ in dimension");
      if (!(probs[o] >= 0.0)) throw std::invalid_argument("H2qInstance: probabilities must be nonnegative");
      total += probs[o];
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("H2qInstance: probabilities must sum to 1");
    if (!transforms.empty() && transforms.size() != d) throw std::invalid_argument("H2qInstance: one transform per variable");
    for (std::size_t v = 0; v < transforms.size(); ++v) {
      const auto& f = transforms[v];
      if (f.kind == MonotoneTransform::Kind::affine && f.p1 < 0.0)
        throw std::invalid_argument("H2qInstance: transform " + std::to_string(v) + " is not nondecreasing (negative slope)");
      if (f.kind == MonotoneTransform::Kind::clamp && f.p1 > f.p2)
        throw std::invalid_argument("H2qInstance: transform " + std::to_string(v) + " has clamp lower bound above upper bound");
      std::vector<double> support;
      for (const auto& o : outcomes) support.push_back(o[v]);
      std::sort(support.begin(), support.end());
      for (std::size_t i = 1; i < support.size(); ++i)
        if (f(support[i]) < f(support[i - 1]))
          throw std::invalid_argument("H2qInstance: transform " + std::to_string(v) + " is not nondecreasing on the support");
    }
  }

  double transformed(std::size_t outcome, std::size_t var) const {
    const double x = outcomes[outcome][var];
    return transforms.empty() ? x : transforms[var](x);
  }
};

/// Ratio of E|sum_{I}(f - E f)|^{2q} to |I| max E|f|^{2q} + |I|^q max (E f^2)^q
/// for one subset I given as a bit mask; 0 when the left side vanishes.
inline double h2q_ratio(const H2qInstance& inst, std::uint32_t mask, double q) {
  const std::size_t d = inst.dims(), k = inst.outcomes.size();
  std::vector<double> mean(d, 0.0);
  for (std::size_t o = 0; o < k; ++o)
    for (std::size_t v = 0; v < d; ++v) mean[v] += inst.probs[o] * inst.transformed(o, v);
  double lhs = 0.0, max2q = 0.0, max2 = 0.0;
  std::size_t size = 0;
  for (std::size_t v = 0; v < d; ++v) {
    if (!(mask & (1u << v))) continue;
    ++size;
    double m2q = 0.0, m2 = 0.0;
    for (std::size_t o = 0; o < k; ++o) {
      const double f = inst.transformed(o, v);
      m2q += inst.probs[o] * std::pow(std::abs(f), 2.0 * q);
      m2 += inst.probs[o] * f * f;
    }
    max2q = std::max(max2q, m2q);
    max2 = std::max(max2, m2);
  }
  for (std::size_t o = 0; o < k; ++o) {
    double s = 0.0;
    for (std::size_t v = 0; v < d; ++v)
      if (mask & (1u << v)) s += inst.transformed(o, v) - mean[v];
    lhs += inst.probs[o] * std::pow(std::abs(s), 2.0 * q);
  }
  if (lhs <= 1e-15) return 0.0;
  const double n = static_cast<double>(size);
  const double bracket = n * max2q + std::pow(n, q) * std::pow(max2, q);
  return lhs / bracket;
}

/// Smallest C(q) for which the condition holds on every nonempty subset of
/// the instance's variables under its transforms.
inline double h2q_min_constant(const H2qInstance& inst, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("h2q_min_constant: requires q >= 1");
  inst.validate();
  const std::uint32_t full = (1u << inst.dims()) - 1;
  double best = 0.0;
  for (std::uint32_t mask = 1; mask <= full; ++mask) best = std::max(best, h2q_ratio(inst, mask, q));
  return best;
}

/// True when every pair of variables is independent (within tol).
inline bool pairwise_independent(const H2qInstance& inst, double tol = 1e-12) {
  const std::size_t d = inst.dims(), k = inst.outcomes.size();
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b)
      for (std::size_t o1 = 0; o1 < k; ++o1)
        for (std::size_t o2 = 0; o2 < k; ++o2) {
          const double x = inst.outcomes[o1][a], y = inst.outcomes[o2][b];
          double pxy = 0.0, px = 0.0, py = 0.0;
          for (std::size_t o = 0; o < k; ++o) {
            const bool ex = inst.outcomes[o][a] == x, ey = inst.outcomes[o][b] == y;
            if (ex) px += inst.probs[o];
            if (ey) py += inst.probs[o];
            if (ex && ey) pxy += inst.probs[o];
          }
          if (std::abs(pxy - px * py) > tol) return false;
        }
  return true;
}

/// The four equally likely outcomes (e1, e2, e1 e2) of two Rademacher generators.
inline H2qInstance walsh_triple() {
  H2qInstance inst;
  for (int e1 : {-1, 1})
    for (int e2 : {-1, 1}) {
      inst.outcomes.push_back({double(e1), double(e2), double(e1 * e2)});
      inst.probs.push_back(0.25);
    }
  return inst;
}

/// Two independent Rademacher variables.
inline H2qInstance independent_rademacher_pair() {
  H2qInstance inst;
  for (int e1 : {-1, 1})
    for (int e2 : {-1, 1}) {
      inst.outcomes.push_back({double(e1), double(e2)});
      inst.probs.push_back(0.25);
    }
  return inst;
}

}  // namespace rfield
