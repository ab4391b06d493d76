#pragma once
// Small statistical helpers shared by the Monte Carlo harnesses.

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace rfield {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Two-sided standard normal critical value for the given confidence level.
inline double normal_critical(double confidence) {
  boost::math::normal_distribution<> nd;
  return boost::math::quantile(nd, 0.5 + confidence / 2.0);
}

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::size_t hits, std::size_t trials, double confidence = 0.95) {
  if (trials == 0) return {0.0, 1.0};
  const double z = normal_critical(confidence);
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Sample mean with a normal-approximation confidence interval.
struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;

  Interval ci(double confidence = 0.95) const {
    const double h = normal_critical(confidence) * std_error;
    return {mean - h, mean + h};
  }
};

inline MeanEstimate estimate_mean(std::span<const double> xs) {
  MeanEstimate out;
  out.count = xs.size();
  if (xs.empty()) return out;
  CompensatedSum s;
  for (double x : xs) s.add(x);
  out.mean = s.value() / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    CompensatedSum ss;
    for (double x : xs) ss.add((x - out.mean) * (x - out.mean));
    const double var = ss.value() / static_cast<double>(xs.size() - 1);
    out.std_error = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return out;
}

enum class TrendVerdict { decreasing_to_zero, flat, increasing };

inline std::string_view to_string(TrendVerdict v) {
  switch (v) {
    case TrendVerdict::decreasing_to_zero: return "decreasing-to-zero";
    case TrendVerdict::flat: return "flat";
    case TrendVerdict::increasing: return "increasing";
  }
  return "flat";
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;
  Interval slope_ci{};
  std::size_t points = 0;
};

/// Ordinary least squares of y on x with a two-sided Student-t interval on the slope.
inline SlopeFit fit_slope(std::span<const double> x, std::span<const double> y, double confidence = 0.95) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_slope: x and y differ in length");
  SlopeFit f;
  f.points = x.size();
  if (x.size() < 2) return f;
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double sse = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      sse += r * r;
    }
    f.std_error = std::sqrt(sse / (n - 2.0) / sxx);
    boost::math::students_t_distribution<> td(n - 2.0);
    const double t = boost::math::quantile(td, 0.5 + confidence / 2.0);
    f.slope_ci = {f.slope - t * f.std_error, f.slope + t * f.std_error};
  } else {
    f.slope_ci = {f.slope, f.slope};
  }
  return f;
}

/// Classifies a positive trace by the sign of its log-scale slope at the given confidence.
inline TrendVerdict classify_slope(const SlopeFit& f) {
  if (f.points < 3) return TrendVerdict::flat;
  if (f.slope_ci.hi < 0) return TrendVerdict::decreasing_to_zero;
  if (f.slope_ci.lo > 0) return TrendVerdict::increasing;
  return TrendVerdict::flat;
}

}  // namespace rfield
