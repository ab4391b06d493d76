#pragma once
// Dyadic index arithmetic, truncation ladders, prefix-sum tables and the
// pathwise telescoping decomposition of maximal partial sums over dyadic
// scales.

#include "rfield/model.hpp"
#include "rfield/stats.hpp"
#include "rfield/varying.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfield {

/// floor(u / 2^s) * 2^s.
constexpr std::uint64_t dyadic_floor(std::uint64_t u, unsigned s) noexcept { return s >= 64 ? 0 : (u >> s) << s; }

enum class ClampMode { nonnegative, signed_three_level };

/// min(x, b) for x >= 0, or max(-b, min(x, b)) in signed mode.
inline double clamp_truncate(double x, double b, ClampMode mode = ClampMode::nonnegative) {
  if (!(b > 0.0)) throw std::invalid_argument("clamp_truncate: cap must be positive");
  if (mode == ClampMode::nonnegative) {
    if (x < 0.0) throw std::invalid_argument("clamp_truncate: negative value in nonnegative mode");
    return std::min(x, b);
  }
  return std::max(-b, std::min(x, b));
}

// ---------------------------------------------------------------------------
// Truncation ladder

class TruncationLadder {
 public:
  enum class Kind { power_alpha, power_with_conjugate };

  static TruncationLadder power_alpha(double alpha) { return TruncationLadder(alpha, std::nullopt); }

  /// b(n) = n^alpha * Lt(n^alpha), Lt the de Bruijn conjugate of L. Where
  /// x * Lt(x) is not yet increasing (small x) it is replaced by the linear
  /// continuation x * Lt(x0) so that b stays strictly increasing.
  static TruncationLadder power_with_conjugate(double alpha, const SlowlyVaryingFamily& l) {
    return TruncationLadder(alpha, l);
  }

  Kind kind() const noexcept { return family_ ? Kind::power_with_conjugate : Kind::power_alpha; }
  double alpha() const noexcept { return alpha_; }
  const std::optional<SlowlyVaryingFamily>& family() const noexcept { return family_; }
  /// Point below which the conjugate ladder is linearly continued (0 if never).
  double regularization_point() const noexcept { return x0_; }

  /// b(n) for real n >= 1.
  double operator()(double n) const {
    if (!(n > 0.0)) throw std::invalid_argument("TruncationLadder: argument must be positive");
    const double x = std::pow(n, alpha_);
    if (!family_) return x;
    if (x < x0_) return x * conj_(x0_);
    return x * conj_(x);
  }

  /// b(2^s), exact powers of two for the pure power ladder.
  double at_pow2(int s) const {
    if (!family_) return std::exp2(static_cast<double>(s) * alpha_);
    return (*this)(std::exp2(static_cast<double>(s)));
  }

  std::string name() const {
    std::string out = "power_alpha(" + std::to_string(alpha_) + ")";
    if (family_) out = "power_with_conjugate(" + std::to_string(alpha_) + "," + family_->name() + ")";
    return out;
  }

 private:
  TruncationLadder(double alpha, std::optional<SlowlyVaryingFamily> l) : alpha_(alpha), family_(std::move(l)) {
    if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw std::invalid_argument("TruncationLadder: alpha must be positive");
    if (family_) {
      family_->validate();
      conj_ = debruijn_conjugate(*family_);
      find_regularization_point();
    }
  }

  void find_regularization_point() {
    // Elasticity of x * Lt(x) is 1 + elasticity(Lt); find the last x where it is <= 0.
    auto bad = [&](double x) { return 1.0 + conj_.elasticity(x) <= 1e-9; };
    double last_bad = 0.0;
    for (int k = 0; k <= 8 * 1000; ++k) {
      const double x = std::exp2(k / 8.0);
      if (bad(x)) last_bad = x;
    }
    if (last_bad == 0.0) {
      x0_ = 0.0;
      return;
    }
    double lo = last_bad, hi = last_bad * std::exp2(1.0 / 8.0);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (bad(mid) ? lo : hi) = mid;
    }
    x0_ = hi;
  }

  double alpha_;
  std::optional<SlowlyVaryingFamily> family_;
  SlowlyVaryingFamily conj_{};
  double x0_ = 0.0;
};

/// clamp(x, b(2^s)) - clamp(x, b(2^{s-1})) for x >= 0 and s >= 1.
inline double ladder_increment(double x, int s, const TruncationLadder& ladder) {
  if (s < 1) throw std::invalid_argument("ladder_increment: s must be >= 1");
  return clamp_truncate(x, ladder.at_pow2(s)) - clamp_truncate(x, ladder.at_pow2(s - 1));
}

// ---------------------------------------------------------------------------
// Prefix sums

/// S(u, v) = sum_{i <= u, j <= v} values(i, j), 0 <= u <= rows, 0 <= v <= cols,
/// accumulated in extended precision.
class PrefixSumTable {
 public:
  PrefixSumTable() = default;

  PrefixSumTable(std::size_t rows, std::size_t cols, std::span<const double> values, std::span<const double> centering = {})
      : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1), 0.0L) {
    if (values.size() != rows * cols) throw std::invalid_argument("PrefixSumTable: value count does not match dimensions");
    if (!centering.empty() && centering.size() != values.size())
      throw std::invalid_argument("PrefixSumTable: centering does not match dimensions");
    for (std::size_t i = 0; i < rows; ++i) {
      long double row = 0.0L;
      for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t k = i * cols + j;
        row += static_cast<long double>(values[k]) - (centering.empty() ? 0.0L : static_cast<long double>(centering[k]));
        data_[(i + 1) * (cols + 1) + j + 1] = data_[i * (cols + 1) + j + 1] + row;
      }
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  long double at(std::size_t u, std::size_t v) const { return data_[u * (cols_ + 1) + v]; }
  double operator()(std::size_t u, std::size_t v) const { return static_cast<double>(at(u, v)); }

  /// Sum over rows (r0, r1] and columns (c0, c1].
  long double rect(std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1) const {
    return at(r1, c1) - at(r0, c1) - at(r1, c0) + at(r0, c0);
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<long double> data_;
};

inline PrefixSumTable prefix_sums(const FieldSample& field, std::span<const double> centering = {}) {
  if (field.values.size() != field.rows() * field.cols())
    throw std::invalid_argument("prefix_sums: sample value count does not match 2^m x 2^n");
  return PrefixSumTable(field.rows(), field.cols(), field.values, centering);
}

enum class RangeConvention {
  strict,  // 1 <= u < 2^m, 1 <= v < 2^n
  closed,  // 1 <= u <= 2^m, 1 <= v <= 2^n
};

inline std::string_view to_string(RangeConvention c) { return c == RangeConvention::strict ? "strict" : "closed"; }

/// max |S(u, v)| over the chosen index range.
inline double max_abs_prefix(const PrefixSumTable& t, RangeConvention conv = RangeConvention::closed) {
  const std::size_t ur = conv == RangeConvention::closed ? t.rows() : t.rows() - 1;
  const std::size_t vr = conv == RangeConvention::closed ? t.cols() : t.cols() - 1;
  long double best = 0.0L;
  for (std::size_t u = 1; u <= ur; ++u)
    for (std::size_t v = 1; v <= vr; ++v) best = std::max(best, std::abs(t.at(u, v)));
  return static_cast<double>(best);
}

/// max over rectangles [1..u] x [1..v] of |sum (value - centering)| / norming.
inline double max_normalized_sum(const FieldSample& field, std::span<const double> centering, double norming,
                                 RangeConvention conv = RangeConvention::closed) {
  if (!(norming > 0.0)) throw std::invalid_argument("max_normalized_sum: norming must be positive");
  return max_abs_prefix(prefix_sums(field, centering), conv) / norming;
}

/// Scalar-centering overload.
inline double max_normalized_sum(const FieldSample& field, double centering, double norming,
                                 RangeConvention conv = RangeConvention::closed) {
  std::vector<double> c(field.values.size(), centering);
  return max_normalized_sum(field, std::span<const double>(c), norming, conv);
}

// ---------------------------------------------------------------------------
// Telescoping decomposition

enum class DecompositionMode {
  automatic,    // nonnegative when the marginal has no negative mass, split otherwise
  nonnegative,  // requires every value >= 0
  split,        // X = X+ - X-, each side through the nonnegative pipeline
};

struct DecompositionReport {
  int m_exp = 0;
  int n_exp = 0;
  bool split = false;
  double max_abs_centered_sum = 0.0;         // strict range 1 <= u < 2^m, 1 <= v < 2^n
  double max_abs_centered_sum_closed = 0.0;  // closed range 1 <= u <= 2^m, 1 <= v <= 2^n
  std::array<double, 4> i_terms{};           // max over the strict range of |I_k|
  std::array<double, 4> r_terms{};
  double deterministic_tail = 0.0;
  double identity_residual = 0.0;  // max |S - (I1+I2+I3+I4)| / (1 + |S|)
  double bound_slack = 0.0;        // sum R + tail - max |S|
  double slack_scale = 1.0;

  double bound() const { return r_terms[0] + r_terms[1] + r_terms[2] + r_terms[3] + deterministic_tail; }
  bool bound_holds(double rel_tol = 1e-9) const { return bound_slack >= -rel_tol * slack_scale; }
};

namespace detail {

struct SidePipeline {
  std::vector<PrefixSumTable> level;  // level l: centered min(Z, b(2^l))
  double tail = 0.0;                  // 6 sum 2^{s+t} b(2^{s+t}) max P(Z > b(2^{s+t-2}))
  std::array<double, 4> r{};
};

inline SidePipeline run_side(const FieldSample& field, const CellClasses& classes, Side side, const TruncationLadder& ladder) {
  const int m = field.m_exp, n = field.n_exp;
  const std::size_t rows = field.rows(), cols = field.cols(), count = rows * cols;
  const int levels = m + n;
  SidePipeline out;
  out.level.reserve(static_cast<std::size_t>(levels + 1));

  std::vector<double> z(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double x = field.values[k];
    z[k] = side == Side::positive ? std::max(x, 0.0) : std::max(-x, 0.0);
  }
  std::vector<double> capped(count), means(count);
  std::vector<double> class_mean(classes.laws.size());
  for (int l = 0; l <= levels; ++l) {
    const double b = ladder.at_pow2(l);
    for (std::size_t c = 0; c < classes.laws.size(); ++c) class_mean[c] = classes.laws[c].clamp_moment(side, 1.0, b);
    for (std::size_t k = 0; k < count; ++k) {
      capped[k] = std::min(z[k], b);
      means[k] = class_mean[classes.index[k]];
    }
    out.level.emplace_back(rows, cols, capped, means);
  }

  // Tail term: the maximum runs over every cell a dyadic block can touch.
  std::vector<double> max_tail(static_cast<std::size_t>(levels + 1), 0.0);
  for (int l = 0; l <= levels; ++l) {
    const double b = ladder.at_pow2(l);
    for (const auto& law : classes.laws) max_tail[l] = std::max(max_tail[l], law.side_tail(side, b));
  }
  CompensatedSum tail;
  for (int s = 1; s <= m; ++s)
    for (int t = 1; t <= n; ++t)
      tail.add(6.0 * std::exp2(s + t) * ladder.at_pow2(s + t) * max_tail[static_cast<std::size_t>(s + t - 2)]);
  out.tail = tail.value();

  // R terms: maxima over dyadic block translates.
  for (int s = 1; s <= m; ++s) {
    const std::size_t hs = std::size_t{1} << (s - 1), fs = std::size_t{1} << s;
    for (int t = 1; t <= n; ++t) {
      const std::size_t ht = std::size_t{1} << (t - 1), ft = std::size_t{1} << t;
      const auto& p2 = out.level[static_cast<std::size_t>(s + t - 2)];
      const auto& p1 = out.level[static_cast<std::size_t>(s + t - 1)];
      const auto& p0 = out.level[static_cast<std::size_t>(s + t)];
      long double r1 = 0, r2 = 0, r3 = 0, r4 = 0;
      for (std::size_t k = 0; k < (rows >> s); ++k) {
        const std::size_t i0 = k * fs;
        for (std::size_t l = 0; l < (cols >> t); ++l) {
          const std::size_t j0 = l * ft;
          r1 = std::max(r1, std::abs(p2.rect(i0, j0, i0 + hs, j0 + ht)));
          r2 = std::max(r2, std::abs(p1.rect(i0, j0, i0 + hs, j0 + ft) - p2.rect(i0, j0, i0 + hs, j0 + ft)));
          r3 = std::max(r3, std::abs(p1.rect(i0, j0, i0 + fs, j0 + ht) - p2.rect(i0, j0, i0 + fs, j0 + ht)));
          r4 = std::max(r4, std::abs(p0.rect(i0, j0, i0 + fs, j0 + ft) - p2.rect(i0, j0, i0 + fs, j0 + ft)));
        }
      }
      out.r[0] += static_cast<double>(r1);
      out.r[1] += static_cast<double>(r2);
      out.r[2] += static_cast<double>(r3);
      out.r[3] += static_cast<double>(r4);
    }
  }
  return out;
}

/// I_1..I_4 at one (u, v) from the level tables of one side.
inline std::array<long double, 4> i_terms_at(const SidePipeline& p, int m, int n, std::size_t u, std::size_t v) {
  std::array<long double, 4> out{};
  auto P = [&](int level, std::size_t a, std::size_t b) { return p.level[static_cast<std::size_t>(level)].at(a, b); };
  for (int s = 1; s <= m; ++s) {
    const std::size_t us = dyadic_floor(u, static_cast<unsigned>(s));
    const std::size_t us1 = dyadic_floor(u, static_cast<unsigned>(s - 1));
    // T_{s-1,t',u_{s-1},y} and T*_{s,t',u,y}
    auto A = [&](int tp, std::size_t y) { return P(s - 1 + tp, us1, y) - P(s - 1 + tp, us, y); };
    auto B = [&](int tp, std::size_t y) {
      return P(s + tp, u, y) - P(s - 1 + tp, u, y) - P(s + tp, us, y) + P(s - 1 + tp, us, y);
    };
    for (int t = 1; t <= n; ++t) {
      const std::size_t vt = dyadic_floor(v, static_cast<unsigned>(t));
      const std::size_t vt1 = dyadic_floor(v, static_cast<unsigned>(t - 1));
      out[0] += A(t - 1, vt1) - A(t - 1, vt);
      out[1] += A(t, v) - A(t - 1, v) - A(t, vt) + A(t - 1, vt);
      out[2] += B(t - 1, vt1) - B(t - 1, vt);
      out[3] += B(t, v) - B(t - 1, v) - B(t, vt) + B(t - 1, vt);
    }
  }
  return out;
}

}  // namespace detail

/// Decomposes the maximal centered partial sum of the field truncated at level
/// m+n into the four telescoping terms, evaluates the block maxima R_1..R_4 and
/// the deterministic tail term, and reports the slack of the resulting bound.
inline DecompositionReport telescoping_decompose(const FieldSample& field, const FieldModel& model,
                                                 const TruncationLadder& ladder, int m_exp, int n_exp,
                                                 DecompositionMode mode = DecompositionMode::automatic) {
  if (field.m_exp != m_exp || field.n_exp != n_exp)
    throw std::invalid_argument("telescoping_decompose: sample is not 2^m x 2^n for the requested exponents");
  if (m_exp < 1 || n_exp < 1) throw std::invalid_argument("telescoping_decompose: exponents must be >= 1");
  if (m_exp + n_exp > 30) throw std::invalid_argument("telescoping_decompose: grid too large");
  if (field.values.size() != field.rows() * field.cols())
    throw std::invalid_argument("telescoping_decompose: value count is not a power-of-two grid");
  model.validate();

  const auto classes = cell_classes(model, field.rows(), field.cols());
  bool split = false;
  switch (mode) {
    case DecompositionMode::automatic:
      for (const auto& law : classes.laws) split = split || !law.nonnegative();
      for (double x : field.values) split = split || x < 0.0;
      break;
    case DecompositionMode::nonnegative:
      for (double x : field.values)
        if (x < 0.0) throw std::invalid_argument("telescoping_decompose: negative value in nonnegative mode");
      break;
    case DecompositionMode::split: split = true; break;
  }

  const int m = m_exp, n = n_exp;
  const auto pos = detail::run_side(field, classes, Side::positive, ladder);
  std::optional<detail::SidePipeline> neg;
  if (split) neg = detail::run_side(field, classes, Side::negative, ladder);

  DecompositionReport rep;
  rep.m_exp = m;
  rep.n_exp = n;
  rep.split = split;
  const std::size_t rows = field.rows(), cols = field.cols();
  const auto top = static_cast<std::size_t>(m + n);
  auto S = [&](std::size_t u, std::size_t v) {
    long double s = pos.level[top].at(u, v);
    if (neg) s -= neg->level[top].at(u, v);
    return s;
  };

  std::array<long double, 4> imax{};
  long double smax = 0, smax_closed = 0;
  double resid = 0.0;
  for (std::size_t u = 1; u <= rows; ++u)
    for (std::size_t v = 1; v <= cols; ++v) {
      const long double s = S(u, v);
      smax_closed = std::max(smax_closed, std::abs(s));
      if (u == rows || v == cols) continue;
      smax = std::max(smax, std::abs(s));
      auto it = detail::i_terms_at(pos, m, n, u, v);
      if (neg) {
        const auto in = detail::i_terms_at(*neg, m, n, u, v);
        for (int k = 0; k < 4; ++k) it[k] -= in[k];
      }
      long double total = 0;
      for (int k = 0; k < 4; ++k) {
        imax[k] = std::max(imax[k], std::abs(it[k]));
        total += it[k];
      }
      resid = std::max(resid, static_cast<double>(std::abs(s - total) / (1.0L + std::abs(s))));
    }

  rep.max_abs_centered_sum = static_cast<double>(smax);
  rep.max_abs_centered_sum_closed = static_cast<double>(smax_closed);
  for (int k = 0; k < 4; ++k) {
    rep.i_terms[k] = static_cast<double>(imax[k]);
    rep.r_terms[k] = pos.r[k] + (neg ? neg->r[k] : 0.0);
  }
  rep.deterministic_tail = pos.tail + (neg ? neg->tail : 0.0);
  rep.identity_residual = resid;
  rep.bound_slack = rep.bound() - rep.max_abs_centered_sum;
  rep.slack_scale = 1.0 + rep.bound() + rep.max_abs_centered_sum;
  return rep;
}

}  // namespace rfield
