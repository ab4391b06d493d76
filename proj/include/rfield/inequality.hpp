#pragma once
// Both sides of the Rosenthal-type maximal inequality and the companion tail
// bound, with C(q) set to 1 so that the ratio of the two sides is reported as
// an implied constant.
//
// Signed marginals use the three-level clamp max(-b, min(X, b)); for
// nonnegative marginals this is the one-sided clamp min(X, b).

#include "rfield/dyadic.hpp"
#include "rfield/model.hpp"
#include "rfield/parallel.hpp"
#include "rfield/stats.hpp"
#include "rfield/weights.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rfield {

namespace detail {

/// Laws of the cells in the strict range 1 <= i < 2^m, 1 <= j < 2^n.
inline CellClasses strict_classes(const FieldModel& model, int m, int n) {
  return cell_classes(model, (std::size_t{1} << m) - 1, (std::size_t{1} << n) - 1);
}

/// sum_{s,t} 2^{m+n} lambda^{-2q} (max E|X_{s+t}|^{2q} + 2^{(s+t)(q-1)} max (E X_{s+t}^2)^q).
inline double moment_sum(const CellClasses& cls, int m, int n, const WeightScheme& w, const TruncationLadder& ladder) {
  const double q = w.q;
  CompensatedSum total;
  for (int s = 1; s <= m; ++s)
    for (int t = 1; t <= n; ++t) {
      const double b = ladder.at_pow2(s + t);
      double m2q = 0.0, m2 = 0.0;
      for (const auto& law : cls.laws) {
        m2q = std::max(m2q, law.signed_clamp_abs_moment(2.0 * q, b));
        m2 = std::max(m2, law.signed_clamp_abs_moment(2.0, b));
      }
      const double lam = weight(m, n, s, t, w);
      const double term = std::exp2(m + n) * std::pow(lam, -2.0 * q) * (m2q + std::exp2((s + t) * (q - 1.0)) * std::pow(m2, q));
      total.add(term);
    }
  return total.value();
}

/// sum_{s,t} 2^{s+t} b(2^{s+t}) max P(|X| > b(2^{s+t-2})).
inline double tail_sum(const CellClasses& cls, int m, int n, const TruncationLadder& ladder) {
  CompensatedSum total;
  for (int s = 1; s <= m; ++s)
    for (int t = 1; t <= n; ++t) {
      const double b = ladder.at_pow2(s + t - 2);
      double tail = 0.0;
      for (const auto& law : cls.laws) tail = std::max(tail, law.abs_tail(b));
      total.add(std::exp2(s + t) * ladder.at_pow2(s + t) * tail);
    }
  return total.value();
}

}  // namespace detail

/// Right side of the Rosenthal-type maximal inequality with C(q) = 1.
inline double rosenthal_rhs(const FieldModel& model, int m, int n, const WeightScheme& w, const TruncationLadder& ladder) {
  if (m < 1 || n < 1) throw std::invalid_argument("rosenthal_rhs: requires m, n >= 1");
  model.validate();
  const auto cls = detail::strict_classes(model, m, n);
  const double tail = detail::tail_sum(cls, m, n, ladder);
  const double a = weight_total(m, n, w);
  return std::pow(tail, 2.0 * w.q) + std::pow(a, 2.0 * w.q) * detail::moment_sum(cls, m, n, w, ladder);
}

/// max over 1 <= u < 2^m, 1 <= v < 2^n of |sum of centered clamped cells|^{2q}
/// for one sample, with clamp level b(2^{m+n}).
inline double rosenthal_statistic(const FieldSample& field, const CellClasses& full, double q, double cap) {
  std::vector<double> clamped(field.values.size()), means(field.values.size());
  std::vector<double> class_mean(full.laws.size());
  for (std::size_t c = 0; c < full.laws.size(); ++c) class_mean[c] = full.laws[c].signed_clamp_mean(cap);
  for (std::size_t k = 0; k < field.values.size(); ++k) {
    clamped[k] = std::max(-cap, std::min(field.values[k], cap));
    means[k] = class_mean[full.index[k]];
  }
  const PrefixSumTable t(field.rows(), field.cols(), clamped, means);
  return std::pow(max_abs_prefix(t, RangeConvention::strict), 2.0 * q);
}

/// Monte Carlo estimate of the left side of the Rosenthal-type inequality.
inline MeanEstimate rosenthal_lhs_mc(const FieldModel& model, int m, int n, double q, const TruncationLadder& ladder,
                                     std::size_t reps, std::uint64_t seed, Exec exec = {}) {
  if (m < 1 || n < 1) throw std::invalid_argument("rosenthal_lhs_mc: requires m, n >= 1");
  if (reps < 2) throw std::invalid_argument("rosenthal_lhs_mc: requires reps >= 2");
  if (!(q >= 1.0)) throw std::invalid_argument("rosenthal_lhs_mc: requires q >= 1");
  model.validate();
  const auto full = cell_classes(model, std::size_t{1} << m, std::size_t{1} << n);
  const double cap = ladder.at_pow2(m + n);
  std::vector<double> vals(reps);
  parallel_for(reps, exec, [&](std::size_t r) {
    const auto f = sample_field(model, m, n, seed, r);
    vals[r] = rosenthal_statistic(f, full, q, cap);
  });
  return estimate_mean(vals);
}

struct LedgerRow {
  int m = 0;
  int n = 0;
  double q = 1.0;
  double alpha = 1.0;
  double a = 0.0;
  double lhs = 0.0;
  Interval lhs_ci{};
  double rhs = 0.0;
  double implied_constant = 0.0;  // lhs / rhs
  bool preconditions_met = true;
};

/// Rosenthal ledger rows for square-ish sizes (m, n).
struct InequalityLedger {
  std::vector<LedgerRow> rows;
};

inline double implied_constant(double lhs, double rhs) {
  if (lhs <= 0.0) return 0.0;
  if (rhs <= 0.0) return std::numeric_limits<double>::infinity();
  return lhs / rhs;
}

inline InequalityLedger rosenthal_ledger(const FieldModel& model, const std::vector<std::pair<int, int>>& sizes, const WeightScheme& w,
                                         const TruncationLadder& ladder, std::size_t reps, std::uint64_t seed, double confidence,
                                         Exec exec = {}) {
  InequalityLedger out;
  for (const auto& [m, n] : sizes) {
    LedgerRow row;
    row.m = m;
    row.n = n;
    row.q = w.q;
    row.alpha = w.alpha;
    row.a = w.a;
    const auto est = rosenthal_lhs_mc(model, m, n, w.q, ladder, reps, derive_key(seed, m, n), exec);
    row.lhs = est.mean;
    row.lhs_ci = est.ci(confidence);
    row.rhs = rosenthal_rhs(model, m, n, w, ladder);
    row.implied_constant = implied_constant(row.lhs, row.rhs);
    out.rows.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tail bound

struct TailboundReport {
  int m = 0;
  int n = 0;
  double epsilon = 0.0;
  bool split = false;                // signed marginal: abs forms and threshold 6 a eps
  double a_mn = 0.0;
  double threshold = 0.0;            // 3 a eps (nonnegative) or 6 a eps (signed)
  double truncation_mean_term = 0.0; // sum E(|X| 1(|X| > b(2^{m+n})))
  double tail_term = 0.0;            // 6 sum 2^{s+t} b(2^{s+t}) max P(|X| > b(2^{s+t-2}))
  bool truncation_mean_ok = false;
  bool tail_ok = false;
  double exceedance_term = 0.0;      // sum P(|X| > b(2^{m+n}))
  double moment_term = 0.0;          // eps^{-2q} sum 2^{m+n} lambda^{-2q} (...)
  double rhs_bound = 0.0;
  double lhs_probability = 0.0;
  Interval lhs_ci{};
  std::size_t reps = 0;

  bool preconditions_met() const { return truncation_mean_ok && tail_ok; }
};

inline TailboundReport tailbound_check(const FieldModel& model, int m, int n, const WeightScheme& w, const TruncationLadder& ladder,
                                       double epsilon, std::size_t reps, std::uint64_t seed, double confidence = 0.95,
                                       Exec exec = {}) {
  if (m < 1 || n < 1) throw std::invalid_argument("tailbound_check: requires m, n >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("tailbound_check: requires epsilon > 0");
  model.validate();
  const std::size_t rows = std::size_t{1} << m, cols = std::size_t{1} << n;
  const auto full = cell_classes(model, rows, cols);
  const auto strict = detail::strict_classes(model, m, n);
  TailboundReport rep;
  rep.m = m;
  rep.n = n;
  rep.epsilon = epsilon;
  for (const auto& law : full.laws) {
    if (!std::isfinite(law.mean())) throw std::invalid_argument("tailbound_check: requires an integrable marginal");
    rep.split = rep.split || !law.nonnegative();
  }
  rep.a_mn = weight_total(m, n, w);
  rep.threshold = (rep.split ? 6.0 : 3.0) * rep.a_mn * epsilon;

  const double top = ladder.at_pow2(m + n);
  std::vector<std::size_t> count(full.laws.size(), 0);
  for (auto c : full.index) ++count[c];
  CompensatedSum mean_term, exceed;
  for (std::size_t c = 0; c < full.laws.size(); ++c) {
    mean_term.add(static_cast<double>(count[c]) * full.laws[c].abs_upper_moment(1.0, top));
    exceed.add(static_cast<double>(count[c]) * full.laws[c].abs_tail(top));
  }
  rep.truncation_mean_term = mean_term.value();
  rep.exceedance_term = exceed.value();
  rep.tail_term = 6.0 * detail::tail_sum(strict, m, n, ladder);
  rep.truncation_mean_ok = rep.truncation_mean_term <= epsilon * rep.a_mn;
  rep.tail_ok = rep.tail_term <= epsilon * rep.a_mn;
  rep.moment_term = std::pow(epsilon, -2.0 * w.q) * detail::moment_sum(strict, m, n, w, ladder);
  rep.rhs_bound = rep.exceedance_term + rep.moment_term;

  rep.reps = reps;
  if (reps > 0) {
    std::vector<double> class_mean(full.laws.size());
    for (std::size_t c = 0; c < full.laws.size(); ++c) class_mean[c] = full.laws[c].mean();
    std::vector<unsigned char> hit(reps, 0);
    parallel_for(reps, exec, [&](std::size_t r) {
      const auto f = sample_field(model, m, n, seed, r);
      std::vector<double> means(f.values.size());
      for (std::size_t k = 0; k < means.size(); ++k) means[k] = class_mean[full.index[k]];
      const PrefixSumTable t(rows, cols, f.values, means);
      hit[r] = max_abs_prefix(t, RangeConvention::strict) >= rep.threshold ? 1 : 0;
    });
    std::size_t hits = 0;
    for (auto h : hit) hits += h;
    rep.lhs_probability = static_cast<double>(hits) / static_cast<double>(reps);
    rep.lhs_ci = wilson_interval(hits, reps, confidence);
  }
  return rep;
}

}  // namespace rfield
