#pragma once
// Monte Carlo experiments for complete convergence, strong and weak laws of
// large numbers and L_p convergence of maximal double sums, plus the
// max-tail ratio and moment-series diagnostics.

#include "rfield/dyadic.hpp"
#include "rfield/model.hpp"
#include "rfield/parallel.hpp"
#include "rfield/stats.hpp"
#include "rfield/varying.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfield {

namespace stream_tag {
inline constexpr std::uint64_t feller = 0x51;
inline constexpr std::uint64_t pyke_root = 0x52;
inline constexpr std::uint64_t slln = 0x53;
inline constexpr std::uint64_t lemma_ratio = 0x54;
}  // namespace stream_tag

/// Shape of a grid with 2^e cells: 2^{ceil(e/2)} x 2^{floor(e/2)}.
struct GridShape {
  int m_exp = 0;
  int n_exp = 0;
  double cells() const { return std::exp2(m_exp + n_exp); }
  std::string label() const { return std::to_string(1u << m_exp) + "x" + std::to_string(1u << n_exp); }
};

inline GridShape grid_shape(int total_exp) {
  if (total_exp < 0 || total_exp > 30) throw std::invalid_argument("grid exponent must lie in [0, 30]");
  return {(total_exp + 1) / 2, total_exp / 2};
}

struct HarnessOptions {
  Exec exec{};
  double confidence = 0.95;
  bool brute_force = false;  // direct O((mn)^2) rectangle sums instead of prefix tables
};

/// max over 1 <= u <= rows, 1 <= v <= cols (or the strict range) of
/// |sum (X - center)|, computed by direct summation of every rectangle.
inline double naive_max_abs_sum(const FieldSample& f, std::span<const double> center, RangeConvention conv) {
  const std::size_t rows = f.rows(), cols = f.cols();
  const std::size_t ur = conv == RangeConvention::closed ? rows : rows - 1;
  const std::size_t vr = conv == RangeConvention::closed ? cols : cols - 1;
  long double best = 0.0L;
  for (std::size_t u = 1; u <= ur; ++u)
    for (std::size_t v = 1; v <= vr; ++v) {
      long double s = 0.0L;
      for (std::size_t i = 0; i < u; ++i)
        for (std::size_t j = 0; j < v; ++j) s += static_cast<long double>(f.values[i * cols + j]) - center[i * cols + j];
      best = std::max(best, std::abs(s));
    }
  return static_cast<double>(best);
}

namespace detail {

inline std::vector<double> expand_centering(const CellClasses& cls, const std::vector<double>& per_class) {
  std::vector<double> out(cls.index.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = per_class[cls.index[k]];
  return out;
}

inline double max_centered(const FieldSample& f, std::span<const double> center, RangeConvention conv, bool brute) {
  if (brute) return naive_max_abs_sum(f, center, conv);
  return max_abs_prefix(PrefixSumTable(f.rows(), f.cols(), f.values, center), conv);
}

inline std::vector<double> class_means(const CellClasses& cls) {
  std::vector<double> out;
  for (const auto& law : cls.laws) {
    const double m = law.mean();
    if (!std::isfinite(m)) throw std::invalid_argument("centering requires an integrable marginal");
    out.push_back(m);
  }
  return out;
}

inline double corrected_log_prob(std::size_t hits, std::size_t reps) {
  return std::log((static_cast<double>(hits) + 0.5) / (static_cast<double>(reps) + 1.0));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dyadic series

struct SeriesRow {
  int k = 0;
  int l = 0;
  double block_weight = 0.0;  // 2^{(k+l)(alpha p - 1)}
  double threshold = 0.0;     // eps * norming(2^{k+l})
  std::size_t hits = 0;
  std::size_t reps = 0;
  double tail_prob = 0.0;
  Interval ci{};
  double weighted_term = 0.0;
  double running_sum = 0.0;
};

struct SeriesEstimate {
  double p = 0.0;
  double alpha = 0.0;
  double epsilon = 0.0;
  std::size_t reps = 0;
  int max_block = 0;
  std::string norming = "power";
  std::vector<SeriesRow> rows;  // ordered by (k+l, k)
  int fit_from = 0;             // smallest k+l used in the slope fit
  SlopeFit term_fit{};          // log(weighted term) against k+l
  TrendVerdict term_verdict = TrendVerdict::flat;
  std::vector<double> level_increments;  // sum of weighted terms per k+l, index k+l-2

  double partial_sum() const { return rows.empty() ? 0.0 : rows.back().running_sum; }
};

inline void validate_series_params(double p, double alpha, double epsilon, int max_block) {
  if (!(p >= 1.0)) throw std::invalid_argument("series: requires p >= 1");
  if (!(alpha > 0.5 && alpha <= 1.0)) throw std::invalid_argument("series: requires 1/2 < alpha <= 1");
  if (!(alpha * p >= 1.0)) throw std::invalid_argument("series: requires alpha p >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("series: requires epsilon > 0");
  if (max_block < 2 || max_block > 12) throw std::invalid_argument("series: requires 2 <= maxBlock <= 12");
}

/// Dyadic block series with a caller-supplied norming x -> threshold / eps,
/// evaluated at x = 2^{(k+l) alpha}.
template <class Norming>
SeriesEstimate dyadic_series(const FieldModel& model, double p, double alpha, double epsilon, Norming&& norming, int max_block,
                             std::size_t reps, std::uint64_t seed, const HarnessOptions& opt = {}) {
  validate_series_params(p, alpha, epsilon, max_block);
  if (reps < 1) throw std::invalid_argument("series: requires reps >= 1");
  model.validate();
  SeriesEstimate out;
  out.p = p;
  out.alpha = alpha;
  out.epsilon = epsilon;
  out.reps = reps;
  out.max_block = max_block;
  out.level_increments.assign(static_cast<std::size_t>(max_block - 1), 0.0);

  struct Block {
    int k, l;
  };
  std::vector<Block> blocks;
  for (int kl = 2; kl <= max_block; ++kl)
    for (int k = 1; k < kl; ++k) blocks.push_back({k, kl - k});

  for (const auto& bl : blocks) {
    const std::size_t rows = std::size_t{1} << bl.k, cols = std::size_t{1} << bl.l;
    const auto cls = cell_classes(model, rows, cols);
    const auto center = detail::expand_centering(cls, detail::class_means(cls));
    const double x = std::exp2((bl.k + bl.l) * alpha);
    const double threshold = epsilon * norming(x);
    const std::uint64_t block_seed = derive_key(seed, stream_tag::block, bl.k, bl.l);
    std::vector<unsigned char> hit(reps, 0);
    parallel_for(reps, opt.exec, [&](std::size_t r) {
      const auto f = sample_field(model, bl.k, bl.l, block_seed, r);
      hit[r] = detail::max_centered(f, center, RangeConvention::strict, opt.brute_force) > threshold ? 1 : 0;
    });
    SeriesRow row;
    row.k = bl.k;
    row.l = bl.l;
    row.block_weight = std::exp2((bl.k + bl.l) * (alpha * p - 1.0));
    row.threshold = threshold;
    row.reps = reps;
    for (auto h : hit) row.hits += h;
    row.tail_prob = static_cast<double>(row.hits) / static_cast<double>(reps);
    row.ci = wilson_interval(row.hits, reps, opt.confidence);
    row.weighted_term = row.block_weight * row.tail_prob;
    row.running_sum = (out.rows.empty() ? 0.0 : out.rows.back().running_sum) + row.weighted_term;
    out.level_increments[static_cast<std::size_t>(bl.k + bl.l - 2)] += row.weighted_term;
    out.rows.push_back(row);
  }

  // Slope of log weighted terms over the larger blocks.
  out.fit_from = std::max(2, max_block / 2);
  std::vector<double> xs, ys;
  bool any_hit = false;
  for (const auto& r : out.rows) {
    if (r.k + r.l < out.fit_from) continue;
    any_hit = any_hit || r.hits > 0;
    xs.push_back(r.k + r.l);
    ys.push_back(std::log(r.block_weight) + detail::corrected_log_prob(r.hits, r.reps));
  }
  out.term_fit = fit_slope(xs, ys, opt.confidence);
  out.term_verdict = any_hit ? classify_slope(out.term_fit) : TrendVerdict::decreasing_to_zero;
  return out;
}

/// Threshold eps * 2^{(k+l) alpha}.
inline SeriesEstimate baum_katz_series(const FieldModel& model, double p, double alpha, double epsilon, int max_block, std::size_t reps,
                                       std::uint64_t seed, const HarnessOptions& opt = {}) {
  auto out = dyadic_series(model, p, alpha, epsilon, [](double x) { return x; }, max_block, reps, seed, opt);
  out.norming = "power";
  return out;
}

/// Threshold eps * x Lt(x) with x = 2^{(k+l) alpha} and Lt the conjugate of L.
inline SeriesEstimate regular_norming_series(const FieldModel& model, double p, double alpha, double epsilon,
                                             const SlowlyVaryingFamily& family, int max_block, std::size_t reps, std::uint64_t seed,
                                             const HarnessOptions& opt = {}) {
  family.validate();
  const auto conj = debruijn_conjugate(family);
  auto out = dyadic_series(model, p, alpha, epsilon, [&](double x) { return x * conj(x); }, max_block, reps, seed, opt);
  out.norming = "power*conjugate(" + family.name() + ")";
  return out;
}

// ---------------------------------------------------------------------------
// Convergence traces

struct TracePoint {
  std::string grid;
  int m_exp = 0;
  int n_exp = 0;
  double cells = 0.0;
  double statistic = 0.0;
  Interval ci{};
  std::size_t hits = 0;  // probability traces only
  std::size_t reps = 0;
};

struct ConvergenceTrace {
  std::string operation;
  std::string surrogate;  // what the trace stands in for
  std::vector<TracePoint> points;
  SlopeFit fit{};
  TrendVerdict verdict = TrendVerdict::flat;
};

namespace detail {

inline void finish_value_trace(ConvergenceTrace& tr, double confidence) {
  bool all_zero = true;
  std::vector<double> xs, ys;
  for (const auto& pt : tr.points) {
    if (pt.statistic > 0.0) {
      all_zero = false;
      xs.push_back(std::log(pt.cells));
      ys.push_back(std::log(pt.statistic));
    }
  }
  if (all_zero) {
    tr.verdict = TrendVerdict::decreasing_to_zero;
    return;
  }
  tr.fit = fit_slope(xs, ys, confidence);
  tr.verdict = classify_slope(tr.fit);
}

inline void finish_probability_trace(ConvergenceTrace& tr, double confidence) {
  bool all_zero = true;
  std::vector<double> xs, ys;
  for (const auto& pt : tr.points) {
    all_zero = all_zero && pt.hits == 0;
    xs.push_back(std::log(pt.cells));
    ys.push_back(corrected_log_prob(pt.hits, pt.reps));
  }
  if (all_zero) {
    tr.verdict = TrendVerdict::decreasing_to_zero;
    return;
  }
  tr.fit = fit_slope(xs, ys, confidence);
  tr.verdict = classify_slope(tr.fit);
}

}  // namespace detail

/// One sample path on nested 2^k x 2^k grids, k = 0..max_exp; statistic is
/// the maximal centered partial sum normed by (4^k)^{1/p}.
inline ConvergenceTrace mz_slln_trace(const FieldModel& model, double p, int max_exp, std::uint64_t seed,
                                      const HarnessOptions& opt = {}) {
  if (!(p >= 1.0 && p < 2.0)) throw std::invalid_argument("slln: requires 1 <= p < 2");
  if (max_exp < 2 || max_exp > 13) throw std::invalid_argument("slln: requires 2 <= maxExp <= 13");
  model.validate();
  ConvergenceTrace tr;
  tr.operation = "slln";
  tr.surrogate = "single sample path";
  const auto f = sample_field(model, max_exp, max_exp, derive_key(seed, stream_tag::slln), 0);
  const auto cls = cell_classes(model, f.rows(), f.cols());
  const auto center = detail::expand_centering(cls, detail::class_means(cls));
  const PrefixSumTable t(f.rows(), f.cols(), f.values, center);
  // Running maximum over nested squares.
  for (int k = 0; k <= max_exp; ++k) {
    const std::size_t side = std::size_t{1} << k;
    long double best = 0.0L;
    for (std::size_t u = 1; u <= side; ++u)
      for (std::size_t v = 1; v <= side; ++v) best = std::max(best, std::abs(t.at(u, v)));
    TracePoint pt;
    pt.grid = std::to_string(side) + "x" + std::to_string(side);
    pt.m_exp = pt.n_exp = k;
    pt.cells = std::exp2(2 * k);
    pt.statistic = static_cast<double>(best) / std::pow(pt.cells, 1.0 / p);
    pt.ci = {pt.statistic, pt.statistic};
    pt.reps = 1;
    tr.points.push_back(pt);
  }
  detail::finish_value_trace(tr, opt.confidence);
  return tr;
}

inline void validate_grid_exps(const std::vector<int>& exps) {
  if (exps.size() < 1) throw std::invalid_argument("requires at least one grid");
  for (int e : exps)
    if (e < 0 || e > 24) throw std::invalid_argument("grid exponents must lie in [0, 24]");
}

/// P(max |sum (X - E X 1(|X| <= N^{1/p}))| > eps N^{1/p}) per grid of N cells.
inline ConvergenceTrace feller_wlln(const FieldModel& model, double p, const std::vector<int>& grid_exps, double epsilon,
                                    std::size_t reps, std::uint64_t seed, const HarnessOptions& opt = {}) {
  if (!(p >= 1.0 && p < 2.0)) throw std::invalid_argument("wlln: requires 1 <= p < 2");
  if (!(epsilon > 0.0)) throw std::invalid_argument("wlln: requires epsilon > 0");
  if (reps < 1) throw std::invalid_argument("wlln: requires reps >= 1");
  validate_grid_exps(grid_exps);
  model.validate();
  ConvergenceTrace tr;
  tr.operation = "wlln";
  tr.surrogate = "probability of exceedance";
  for (int e : grid_exps) {
    const auto g = grid_shape(e);
    const auto cls = cell_classes(model, std::size_t{1} << g.m_exp, std::size_t{1} << g.n_exp);
    const double norm = std::pow(g.cells(), 1.0 / p);
    std::vector<double> per_class;
    for (const auto& law : cls.laws) per_class.push_back(law.truncated_mean(norm));
    const auto center = detail::expand_centering(cls, per_class);
    const std::uint64_t grid_seed = derive_key(seed, stream_tag::feller, e);
    std::vector<unsigned char> hit(reps, 0);
    parallel_for(reps, opt.exec, [&](std::size_t r) {
      const auto f = sample_field(model, g.m_exp, g.n_exp, grid_seed, r);
      hit[r] = detail::max_centered(f, center, RangeConvention::closed, opt.brute_force) / norm > epsilon ? 1 : 0;
    });
    TracePoint pt;
    pt.grid = g.label();
    pt.m_exp = g.m_exp;
    pt.n_exp = g.n_exp;
    pt.cells = g.cells();
    pt.reps = reps;
    for (auto h : hit) pt.hits += h;
    pt.statistic = static_cast<double>(pt.hits) / static_cast<double>(reps);
    pt.ci = wilson_interval(pt.hits, reps, opt.confidence);
    tr.points.push_back(pt);
  }
  detail::finish_probability_trace(tr, opt.confidence);
  return tr;
}

/// E[(max |sum (X - E X)| / N^{1/p})^p] per grid of N cells.
inline ConvergenceTrace pyke_root_lp(const FieldModel& model, double p, const std::vector<int>& grid_exps, std::size_t reps,
                                     std::uint64_t seed, const HarnessOptions& opt = {}) {
  if (!(p >= 1.0 && p < 2.0)) throw std::invalid_argument("lp: requires 1 <= p < 2");
  if (reps < 2) throw std::invalid_argument("lp: requires reps >= 2");
  validate_grid_exps(grid_exps);
  model.validate();
  ConvergenceTrace tr;
  tr.operation = "lp";
  tr.surrogate = "Monte Carlo mean";
  for (int e : grid_exps) {
    const auto g = grid_shape(e);
    const auto cls = cell_classes(model, std::size_t{1} << g.m_exp, std::size_t{1} << g.n_exp);
    const auto center = detail::expand_centering(cls, detail::class_means(cls));
    const double norm = std::pow(g.cells(), 1.0 / p);
    const std::uint64_t grid_seed = derive_key(seed, stream_tag::pyke_root, e);
    std::vector<double> vals(reps);
    parallel_for(reps, opt.exec, [&](std::size_t r) {
      const auto f = sample_field(model, g.m_exp, g.n_exp, grid_seed, r);
      vals[r] = std::pow(detail::max_centered(f, center, RangeConvention::closed, opt.brute_force) / norm, p);
    });
    const auto est = estimate_mean(vals);
    TracePoint pt;
    pt.grid = g.label();
    pt.m_exp = g.m_exp;
    pt.n_exp = g.n_exp;
    pt.cells = g.cells();
    pt.reps = reps;
    pt.statistic = est.mean;
    pt.ci = est.ci(opt.confidence);
    tr.points.push_back(pt);
  }
  detail::finish_value_trace(tr, opt.confidence);
  return tr;
}

// ---------------------------------------------------------------------------
// Max-tail ratio

struct RatioPoint {
  std::string grid;
  double cells = 0.0;
  double level = 0.0;        // b(N) eps
  double marginal_tail = 0.0;
  std::size_t hits = 0;
  std::size_t reps = 0;
  double max_tail = 0.0;     // P(max |X| > level), exact for one cell
  double ratio = 0.0;        // N P(|X| > level) / P(max |X| > level)
  Interval ratio_ci{};
};

struct RatioTrace {
  std::vector<RatioPoint> points;
  double stable_constant = 0.0;  // max ratio over the larger half of the grids
  bool bounded = false;
};

inline RatioTrace lemma_a1_ratio(const FieldModel& model, const TruncationLadder& ladder, const std::vector<int>& grid_exps,
                                 double epsilon, std::size_t reps, std::uint64_t seed, const HarnessOptions& opt = {}) {
  if (model.modulation.kind != Modulation::Kind::none)
    throw std::invalid_argument("ratio: requires identically distributed cells (no modulation)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("ratio: requires epsilon > 0");
  validate_grid_exps(grid_exps);
  model.validate();
  const MarginalLaw law(model.marginal);
  RatioTrace out;
  for (int e : grid_exps) {
    const auto g = grid_shape(e);
    RatioPoint pt;
    pt.grid = g.label();
    pt.cells = g.cells();
    pt.level = ladder(pt.cells) * epsilon;
    pt.marginal_tail = law.abs_tail(pt.level);
    const double num = pt.cells * pt.marginal_tail;
    if (e == 0) {
      pt.max_tail = pt.marginal_tail;
      pt.ratio = pt.max_tail > 0.0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
      pt.ratio_ci = {pt.ratio, pt.ratio};
    } else {
      const std::uint64_t grid_seed = derive_key(seed, stream_tag::lemma_ratio, e);
      std::vector<unsigned char> hit(reps, 0);
      parallel_for(reps, opt.exec, [&](std::size_t r) {
        const auto f = sample_field(model, g.m_exp, g.n_exp, grid_seed, r);
        bool any = false;
        for (double x : f.values) any = any || std::abs(x) > pt.level;
        hit[r] = any ? 1 : 0;
      });
      pt.reps = reps;
      for (auto h : hit) pt.hits += h;
      pt.max_tail = static_cast<double>(pt.hits) / static_cast<double>(reps);
      const auto ci = wilson_interval(pt.hits, reps, opt.confidence);
      pt.ratio = pt.hits > 0 ? num / pt.max_tail : (num > 0.0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN());
      pt.ratio_ci = {ci.hi > 0.0 ? num / ci.hi : 0.0, ci.lo > 0.0 ? num / ci.lo : std::numeric_limits<double>::infinity()};
    }
    out.points.push_back(pt);
  }
  const std::size_t half = out.points.size() / 2;
  out.bounded = true;
  for (std::size_t i = half; i < out.points.size(); ++i) {
    const double r = out.points[i].ratio;
    if (std::isnan(r)) continue;
    out.stable_constant = std::max(out.stable_constant, r);
    out.bounded = out.bounded && std::isfinite(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Moment series

enum class SeriesClass { convergent, divergent };

inline std::string_view to_string(SeriesClass c) { return c == SeriesClass::convergent ? "convergent" : "divergent"; }

struct MomentSeriesItem {
  std::string item;            // "ii", "iii", "iv", "v"
  double partial_sum = 0.0;
  std::size_t terms = 0;       // number of (m, n) pairs summed
  std::vector<double> blocks;  // dyadic block sums (ii, iv) or per-level sums (iii, v)
  double term_exponent = 0.0;  // local log-log slope of the term at the end of the range
  double critical = 0.0;       // convergent iff term_exponent < critical - tol
  SeriesClass classification = SeriesClass::divergent;
};

struct MomentSeriesReport {
  double p = 0.0, alpha = 0.0, q = 0.0;
  double item_i = 0.0;  // E|X|^p log|X|
  bool item_i_finite = false;
  std::vector<MomentSeriesItem> items;
  bool consistent = false;  // all items agree with each other and with item (i)
};

/// Partial sums of the four equivalent series, reduced to one-dimensional
/// sums: over N = mn with divisor-count multiplicity for (ii) and (iv), over
/// K = m + n with multiplicity K - 1 for (iii) and (v).
///
/// Convergence is read off the reduced term f at the end of the range. For
/// (ii) and (iv), sum d(N) f(N) converges iff the power exponent of f is
/// below -1; for (iii) and (v), sum (K - 1) g(K) converges iff g decays
/// geometrically. Both exponents are log2 ratios of adjacent terms, and a
/// boundary exponent (within tol) counts as divergent because the divisor and
/// level multiplicities add a logarithmic factor.
inline MomentSeriesReport moment_series_check(const MarginalSpec& marginal, double p, double alpha, double q, std::size_t max_term,
                                              int max_level = 60, double tol = 1e-3) {
  if (!(p > 0.0 && p < q)) throw std::invalid_argument("moment-series: requires 0 < p < q");
  if (!(alpha > 0.0)) throw std::invalid_argument("moment-series: requires alpha > 0");
  if (max_term < 16 || max_term > (std::size_t{1} << 26)) throw std::invalid_argument("moment-series: maxTerm must lie in [16, 2^26]");
  if (max_level < 4 || static_cast<double>(max_level) * alpha > 1000.0) throw std::invalid_argument("moment-series: level cap out of range");
  if (!(tol > 0.0)) throw std::invalid_argument("moment-series: tolerance must be positive");
  const MarginalLaw law(marginal);
  MomentSeriesReport rep;
  rep.p = p;
  rep.alpha = alpha;
  rep.q = q;
  rep.item_i = law.abs_expectation_above([&](double y) { return std::pow(y, p) * std::log(std::max(y, 2.0)); }, 0.0, p);
  rep.item_i_finite = std::isfinite(rep.item_i);

  // Divisor counts d(N) = #{(m, n): mn = N}.
  std::vector<std::uint32_t> d(max_term + 1, 0);
  for (std::size_t m = 1; m <= max_term; ++m)
    for (std::size_t k = m; k <= max_term; k += m) ++d[k];

  auto classify = [&](MomentSeriesItem& it, double f_hi, double f_lo) {
    if (f_hi == 0.0) {
      it.term_exponent = -kInf;
      it.classification = SeriesClass::convergent;
      return;
    }
    it.term_exponent = f_lo > 0.0 ? std::log2(f_hi / f_lo) : kInf;
    it.classification = it.term_exponent < it.critical - tol ? SeriesClass::convergent : SeriesClass::divergent;
  };

  auto hyperbolic = [&](const std::string& name, auto&& term) {
    MomentSeriesItem it;
    it.item = name;
    it.critical = -1.0;
    CompensatedSum total;
    for (std::size_t n = 1; n <= max_term; ++n) {
      const double v = static_cast<double>(d[n]) * term(static_cast<double>(n));
      total.add(v);
      it.terms += d[n];
      const auto j = static_cast<std::size_t>(std::floor(std::log2(static_cast<double>(n))));
      if (it.blocks.size() <= j) it.blocks.resize(j + 1, 0.0);
      it.blocks[j] += v;
    }
    if ((max_term & (max_term + 1)) != 0) it.blocks.pop_back();  // drop an incomplete last block
    it.partial_sum = total.value();
    const double top = static_cast<double>(max_term);
    classify(it, term(top), term(top / 2.0));
    return it;
  };
  auto diagonal = [&](const std::string& name, auto&& term) {
    MomentSeriesItem it;
    it.item = name;
    it.critical = 0.0;
    CompensatedSum total;
    for (int k = 2; k <= max_level; ++k) {
      const double v = static_cast<double>(k - 1) * term(k);
      total.add(v);
      it.terms += static_cast<std::size_t>(k - 1);
      it.blocks.push_back(v);
    }
    it.partial_sum = total.value();
    classify(it, term(max_level), term(max_level - 1));
    return it;
  };

  rep.items.push_back(hyperbolic("ii", [&](double n) {
    return std::pow(n, alpha * p - 1.0) * law.abs_tail(std::pow(n, alpha));
  }));
  rep.items.push_back(diagonal("iii", [&](int k) {
    return std::exp2(k * alpha * p) * law.abs_tail(std::exp2(k * alpha));
  }));
  rep.items.push_back(hyperbolic("iv", [&](double n) {
    return std::pow(n, alpha * (p - q) - 1.0) * law.abs_truncated_moment(q, std::pow(n, alpha));
  }));
  rep.items.push_back(diagonal("v", [&](int k) {
    return std::exp2(k * alpha * (p - q)) * law.abs_truncated_moment(q, std::exp2(k * alpha));
  }));

  const auto expect = rep.item_i_finite ? SeriesClass::convergent : SeriesClass::divergent;
  rep.consistent = true;
  for (const auto& it : rep.items) rep.consistent = rep.consistent && it.classification == expect;
  return rep;
}

}  // namespace rfield
