#pragma once
// Geometric weights lambda_{m,n,s,t} = 2^{a(m+n) + (alpha-a)(s+t)} and their
// totals a_{m,n}.

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rfield {

struct WeightScheme {
  double p = 1.0;
  double alpha = 1.0;
  double q = 1.0;
  double a = 0.75;

  /// Midpoint of the admissible interval for a.
  static double default_a(double p, double alpha, double q) {
    const double lo = p < 2.0 ? alpha * p / (2.0 * q) : alpha - (q - 1.0) / (2.0 * q);
    return 0.5 * (lo + alpha);
  }

  static WeightScheme with_default_a(double p, double alpha, double q) { return {p, alpha, q, default_a(p, alpha, q)}; }

  /// Throws naming the first violated constraint.
  void validate() const {
    const auto msg = [](const std::string& s) { return std::invalid_argument("WeightScheme: " + s); };
    if (!(p >= 1.0)) throw msg("requires p >= 1");
    if (!(alpha > 0.5 && alpha <= 1.0)) throw msg("requires 1/2 < alpha <= 1");
    if (!(q >= 1.0)) throw msg("requires q >= 1");
    if (p >= 2.0 && !(q > (alpha * p - 1.0) / (2.0 * alpha - 1.0))) {
      std::ostringstream os;
      os << "requires q > (alpha p - 1)/(2 alpha - 1) = " << (alpha * p - 1.0) / (2.0 * alpha - 1.0) << " when p >= 2";
      throw msg(os.str());
    }
    if (!(a > alpha * p / (2.0 * q) && a < alpha)) {
      std::ostringstream os;
      os << "requires alpha p/(2q) < a < alpha, i.e. " << alpha * p / (2.0 * q) << " < a < " << alpha;
      throw msg(os.str());
    }
  }
};

/// lambda_{m,n,s,t}. Evaluated as 2^{alpha(m+n) - (alpha-a)(m+n-s-t)} so that
/// lambda_{m,n,m,n} equals 2^{alpha(m+n)} bit-for-bit.
inline double weight(int m, int n, int s, int t, double alpha, double a) {
  if (m < 1 || n < 1 || s < 1 || t < 1 || s > m || t > n)
    throw std::out_of_range("weight: requires 1 <= s <= m and 1 <= t <= n");
  const int top = m + n, gap = m + n - s - t;
  return std::exp2(alpha * top - (alpha - a) * gap);
}

inline double weight(int m, int n, int s, int t, const WeightScheme& w) { return weight(m, n, s, t, w.alpha, w.a); }

/// a_{m,n} = sum_{s<=m, t<=n} lambda_{m,n,s,t}.
inline double weight_total(int m, int n, double alpha, double a) {
  if (m < 1 || n < 1) throw std::out_of_range("weight_total: requires m, n >= 1");
  double total = 0.0;
  // Ascending order keeps the rounding error small.
  for (int gap = m + n - 2; gap >= 0; --gap)
    for (int s = 1; s <= m; ++s) {
      const int t = m + n - gap - s;
      if (t >= 1 && t <= n) total += weight(m, n, s, t, alpha, a);
    }
  return total;
}

inline double weight_total(int m, int n, const WeightScheme& w) { return weight_total(m, n, w.alpha, w.a); }

/// Envelope constant C_1 = (2^{alpha-a} / (2^{alpha-a} - 1))^2.
inline double envelope_constant(double alpha, double a) {
  if (!(alpha > a)) throw std::invalid_argument("envelope_constant: requires a < alpha");
  const double r = std::exp2(alpha - a);
  return (r / (r - 1.0)) * (r / (r - 1.0));
}

/// (sum lambda^{2q/(2q-1)})^{2q-1}, the Hoelder factor bounded by a_{m,n}^{2q}.
inline double hoelder_factor(int m, int n, double q, double alpha, double a) {
  if (!(q >= 1.0)) throw std::invalid_argument("hoelder_factor: requires q >= 1");
  if (q == 1.0) {
    double s = 0.0;
    for (int i = 1; i <= m; ++i)
      for (int j = 1; j <= n; ++j) s += weight(m, n, i, j, alpha, a) * weight(m, n, i, j, alpha, a);
    return s;
  }
  const double e = 2.0 * q / (2.0 * q - 1.0);
  double s = 0.0;
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= n; ++j) s += std::pow(weight(m, n, i, j, alpha, a), e);
  return std::pow(s, 2.0 * q - 1.0);
}

}  // namespace rfield
