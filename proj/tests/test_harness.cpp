#include "rfield/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rfield;

namespace {

FieldModel iid(MarginalSpec m) { return {std::move(m), DependenceSpec::iid(), Modulation::none()}; }

std::vector<int> range(int lo, int hi) {
  std::vector<int> out;
  for (int e = lo; e <= hi; ++e) out.push_back(e);
  return out;
}

}  // namespace

TEST(GridShape, SplitsTheExponent) {
  EXPECT_EQ(grid_shape(7).m_exp, 4);
  EXPECT_EQ(grid_shape(7).n_exp, 3);
  EXPECT_EQ(grid_shape(8).m_exp, 4);
  EXPECT_EQ(grid_shape(0).n_exp, 0);
}

TEST(Series, ConstantZeroModelIsIdenticallyZero) {
  const auto est = baum_katz_series(iid(MarginalSpec::constant(0.0)), 1.5, 2.0 / 3.0, 1.0, 6, 50, 1);
  for (const auto& r : est.rows) {
    EXPECT_EQ(r.hits, 0u);
    EXPECT_EQ(r.tail_prob, 0.0);
    EXPECT_EQ(r.weighted_term, 0.0);
  }
  EXPECT_EQ(est.partial_sum(), 0.0);
}

TEST(Series, BlockWeightsAreExactAndRowsOrdered) {
  const double p = 1.5, alpha = 1.0;  // alpha p - 1 = 1/2
  const auto est = baum_katz_series(iid(MarginalSpec::rademacher()), p, alpha, 1.0, 6, 20, 2);
  ASSERT_EQ(est.rows.size(), 15u);  // k, l >= 1 with k + l <= 6
  int prev_level = 0, prev_k = 0;
  double prev_sum = 0.0;
  for (const auto& r : est.rows) {
    EXPECT_EQ(r.block_weight, std::exp2((r.k + r.l) * 0.5));
    EXPECT_GE(r.tail_prob, 0.0);
    EXPECT_LE(r.tail_prob, 1.0);
    EXPECT_LE(r.ci.lo, r.tail_prob);
    EXPECT_GE(r.ci.hi, r.tail_prob);
    EXPECT_GE(r.running_sum, prev_sum);
    const int level = r.k + r.l;
    EXPECT_TRUE(level > prev_level || (level == prev_level && r.k > prev_k));
    prev_level = level;
    prev_k = r.k;
    prev_sum = r.running_sum;
  }
}

TEST(Series, RejectsOutOfDomainParameters) {
  const auto m = iid(MarginalSpec::rademacher());
  EXPECT_THROW(baum_katz_series(m, 1.5, 0.5, 1.0, 6, 10, 1), std::invalid_argument);
  EXPECT_THROW(baum_katz_series(m, 1.5, 0.6, 1.0, 6, 10, 1), std::invalid_argument);  // alpha p < 1
  EXPECT_THROW(baum_katz_series(m, 1.5, 1.0, 0.0, 6, 10, 1), std::invalid_argument);
  EXPECT_THROW(baum_katz_series(m, 1.5, 1.0, 1.0, 13, 10, 1), std::invalid_argument);
}

TEST(Series, ScaleEquivariance) {
  const FieldModel base{MarginalSpec::symmetrized_pareto(2.5), DependenceSpec::pairwise_walsh(3), Modulation::none()};
  FieldModel scaled = base;
  scaled.marginal = base.marginal.scaled(2.0);
  const auto a = baum_katz_series(base, 1.5, 2.0 / 3.0, 0.5, 7, 100, 9);
  const auto b = baum_katz_series(scaled, 1.5, 2.0 / 3.0, 1.0, 7, 100, 9);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].hits, b.rows[i].hits) << i;
}

TEST(Series, DeterministicAcrossThreadCounts) {
  const auto m = iid(MarginalSpec::exponential(1.0));
  HarnessOptions one, many;
  many.exec.threads = 6;
  const auto a = baum_katz_series(m, 1.5, 2.0 / 3.0, 1.0, 7, 60, 4, one);
  const auto b = baum_katz_series(m, 1.5, 2.0 / 3.0, 1.0, 7, 60, 4, many);
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].hits, b.rows[i].hits);
  EXPECT_EQ(a.partial_sum(), b.partial_sum());
}

TEST(Series, RademacherTermsDecay) {
  const auto est = baum_katz_series(iid(MarginalSpec::rademacher()), 1.5, 2.0 / 3.0, 1.0, 10, 2000, 42);
  EXPECT_LT(est.term_fit.slope_ci.hi, 0.0);
  EXPECT_EQ(est.term_verdict, TrendVerdict::decreasing_to_zero);
}

TEST(Series, HeavyTailPartialSumsKeepGrowing) {
  const auto est = baum_katz_series(iid(MarginalSpec::symmetrized_pareto(1.2)), 1.5, 2.0 / 3.0, 1.0, 10, 400, 42);
  EXPECT_NE(est.term_verdict, TrendVerdict::decreasing_to_zero);
  // The last levels still add a non-negligible share of the sum.
  ASSERT_GE(est.level_increments.size(), 2u);
  EXPECT_GT(est.level_increments.back(), 0.1 * est.partial_sum());
}

TEST(RegularNorming, ConstantFamilyMatchesBaumKatz) {
  const auto m = iid(MarginalSpec::symmetrized_pareto(3.0));
  const auto a = baum_katz_series(m, 1.5, 2.0 / 3.0, 1.0, 7, 80, 3);
  const auto b = regular_norming_series(m, 1.5, 2.0 / 3.0, 1.0, SlowlyVaryingFamily::constant(1.0), 7, 80, 3);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].threshold, b.rows[i].threshold);
    EXPECT_EQ(a.rows[i].hits, b.rows[i].hits);
  }
}

TEST(RegularNorming, LogFamilyDividesByLog) {
  const auto est = regular_norming_series(iid(MarginalSpec::rademacher()), 1.5, 2.0 / 3.0, 1.0, SlowlyVaryingFamily::log_power(1.0), 6, 10, 3);
  for (const auto& r : est.rows) {
    const double x = std::exp2((r.k + r.l) * 2.0 / 3.0);
    EXPECT_NEAR(r.threshold, x / std::log(std::max(x, 2.0)), 1e-12 * x);
  }
}

TEST(Slln, ConstantModelGivesZeroTrace) {
  const auto tr = mz_slln_trace(iid(MarginalSpec::constant(0.0)), 1.5, 6, 1);
  for (const auto& pt : tr.points) EXPECT_EQ(pt.statistic, 0.0);
  EXPECT_EQ(tr.verdict, TrendVerdict::decreasing_to_zero);
}

TEST(Slln, RademacherFallsBelowThreshold) {
  const auto tr = mz_slln_trace(iid(MarginalSpec::rademacher()), 1.5, 10, 42);
  ASSERT_EQ(tr.points.size(), 11u);
  EXPECT_LT(tr.points.back().statistic, 0.15);
  EXPECT_EQ(tr.verdict, TrendVerdict::decreasing_to_zero);
}

TEST(Slln, HeavyTailDoesNotDecrease) {
  const auto tr = mz_slln_trace(iid(MarginalSpec::symmetrized_pareto(1.2)), 1.5, 10, 42);
  EXPECT_NE(tr.verdict, TrendVerdict::decreasing_to_zero);
}

TEST(Slln, RejectsPOutsideRange) {
  EXPECT_THROW(mz_slln_trace(iid(MarginalSpec::rademacher()), 2.0, 6, 1), std::invalid_argument);
}

TEST(Feller, RademacherProbabilitiesVanish) {
  const auto tr = feller_wlln(iid(MarginalSpec::rademacher()), 1.5, range(4, 12), 1.0, 400, 42);
  EXPECT_EQ(tr.verdict, TrendVerdict::decreasing_to_zero);
  EXPECT_LT(tr.points.back().statistic, 0.05);
}

TEST(Feller, BoundaryParetoDoesNotVanish) {
  const auto tr = feller_wlln(iid(MarginalSpec::symmetrized_pareto(1.5)), 1.5, range(4, 12), 1.0, 400, 42);
  EXPECT_NE(tr.verdict, TrendVerdict::decreasing_to_zero);
  for (const auto& pt : tr.points) EXPECT_GE(pt.ci.lo, 0.05);
}

TEST(Feller, SlowDecayIsNotIncreasing) {
  // n P(|X| > n^{1/p}) = n^{-1/12} here: the limit is zero but the decay over
  // 2^4..2^12 cells is far below Monte Carlo resolution.
  const auto tr = feller_wlln(iid(MarginalSpec::symmetrized_pareto(1.3)), 1.2, range(4, 12), 1.0, 400, 42);
  EXPECT_NE(tr.verdict, TrendVerdict::increasing);
}

TEST(PykeRoot, ConstantModelIsZero) {
  const auto tr = pyke_root_lp(iid(MarginalSpec::constant(0.0)), 1.5, range(2, 6), 10, 1);
  for (const auto& pt : tr.points) EXPECT_EQ(pt.statistic, 0.0);
}

TEST(PykeRoot, RademacherDecreases) {
  const auto tr = pyke_root_lp(iid(MarginalSpec::rademacher()), 1.5, range(4, 12), 200, 42);
  EXPECT_EQ(tr.verdict, TrendVerdict::decreasing_to_zero);
  EXPECT_LT(tr.points.back().statistic, tr.points.front().statistic);
}

TEST(PykeRoot, InfinitePthMomentDoesNotDecrease) {
  const auto tr = pyke_root_lp(iid(MarginalSpec::pareto(1.2)), 1.5, range(4, 12), 200, 42);
  EXPECT_NE(tr.verdict, TrendVerdict::decreasing_to_zero);
}

TEST(BruteForce, MatchesPrefixTables) {
  for (const auto& m : {iid(MarginalSpec::symmetrized_pareto(1.8)),
                        FieldModel{MarginalSpec::exponential(1.0), DependenceSpec::gaussian_copula_negative(-0.1, 1), Modulation::radial(1, 3)}}) {
    HarnessOptions brute;
    brute.brute_force = true;
    const auto fa = feller_wlln(m, 1.5, range(2, 8), 0.3, 50, 5);
    const auto fb = feller_wlln(m, 1.5, range(2, 8), 0.3, 50, 5, brute);
    const auto la = pyke_root_lp(m, 1.5, range(2, 8), 50, 5);
    const auto lb = pyke_root_lp(m, 1.5, range(2, 8), 50, 5, brute);
    for (std::size_t i = 0; i < fa.points.size(); ++i) {
      EXPECT_EQ(fa.points[i].hits, fb.points[i].hits);
      EXPECT_NEAR(la.points[i].statistic, lb.points[i].statistic, 1e-10 * (1.0 + la.points[i].statistic));
    }
  }
}

TEST(ExceedanceRatio, SingleCellIsExactlyOne) {
  const auto tr = lemma_a1_ratio(iid(MarginalSpec::pareto(3.0)), TruncationLadder::power_alpha(1.0), {0}, 1.0, 10, 1);
  ASSERT_EQ(tr.points.size(), 1u);
  EXPECT_EQ(tr.points[0].ratio, 1.0);
}

// b(N) = N^{1/2}: P(max > b) ~ N^{-1/2} still tends to 0 yet stays observable.
TEST(ExceedanceRatio, IidRatioStaysNearOne) {
  const auto tr = lemma_a1_ratio(iid(MarginalSpec::pareto(3.0)), TruncationLadder::power_alpha(0.5), range(2, 10), 1.0, 2000, 42);
  EXPECT_TRUE(tr.bounded);
  for (std::size_t i = tr.points.size() / 2; i < tr.points.size(); ++i) {
    EXPECT_GT(tr.points[i].ratio, 0.5);
    EXPECT_LT(tr.points[i].ratio, 2.0);
  }
}

TEST(ExceedanceRatio, WalshRatioBounded) {
  const FieldModel m{MarginalSpec::pareto(3.0), DependenceSpec::pairwise_walsh(3), Modulation::none()};
  const auto tr = lemma_a1_ratio(m, TruncationLadder::power_alpha(0.5), range(2, 10), 1.0, 2000, 42);
  EXPECT_TRUE(tr.bounded);
  EXPECT_TRUE(std::isfinite(tr.stable_constant));
}

TEST(ExceedanceRatio, RejectsModulation) {
  const FieldModel m{MarginalSpec::pareto(3.0), DependenceSpec::iid(), Modulation::checkerboard(1, 2)};
  EXPECT_THROW(lemma_a1_ratio(m, TruncationLadder::power_alpha(1.0), {2}, 1.0, 10, 1), std::invalid_argument);
}

TEST(MomentSeries, BoundedMarginalConverges) {
  const auto rep = moment_series_check(MarginalSpec::rademacher(), 1.5, 2.0 / 3.0, 2.0, 1 << 16);
  EXPECT_TRUE(rep.item_i_finite);
  for (const auto& it : rep.items) EXPECT_EQ(it.classification, SeriesClass::convergent) << it.item;
  EXPECT_TRUE(rep.consistent);
}

TEST(MomentSeries, ParetoTwoConverges) {
  const auto rep = moment_series_check(MarginalSpec::pareto(2.0), 1.5, 2.0 / 3.0, 2.0, 1 << 20);
  EXPECT_TRUE(rep.item_i_finite);
  ASSERT_EQ(rep.items.size(), 4u);
  for (const auto& it : rep.items) EXPECT_EQ(it.classification, SeriesClass::convergent) << it.item;
  EXPECT_TRUE(rep.consistent);
}

TEST(MomentSeries, BoundaryParetoDiverges) {
  const auto rep = moment_series_check(MarginalSpec::pareto(1.5), 1.5, 2.0 / 3.0, 2.0, 1 << 20);
  EXPECT_FALSE(rep.item_i_finite);
  for (const auto& it : rep.items) EXPECT_EQ(it.classification, SeriesClass::divergent) << it.item;
  EXPECT_TRUE(rep.consistent);
}

TEST(MomentSeries, PairsAgreeAcrossTailIndices) {
  for (double beta : {1.1, 1.3, 1.45, 1.5, 1.55, 1.8, 2.5, 3.0, 8.0}) {
    const auto rep = moment_series_check(MarginalSpec::pareto(beta), 1.5, 2.0 / 3.0, 2.0, 1 << 20);
    ASSERT_EQ(rep.items.size(), 4u);
    EXPECT_EQ(rep.items[0].classification, rep.items[1].classification) << beta;
    EXPECT_EQ(rep.items[2].classification, rep.items[3].classification) << beta;
    EXPECT_TRUE(rep.consistent) << beta;
    for (const auto& it : rep.items) EXPECT_GE(it.partial_sum, 0.0);
  }
}
