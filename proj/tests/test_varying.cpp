#include "rfield/domination.hpp"
#include "rfield/varying.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace rfield;

namespace {

const double kE = std::exp(1.0);

std::vector<MarginalLaw> laws_of(const FieldModel& m) { return family_laws(m, 3, 3); }

}  // namespace

TEST(LogNu, Values) {
  EXPECT_DOUBLE_EQ(log_nu(kE, 1), 1.0);
  EXPECT_NEAR(log_nu(0.0, 1), 0.6931, 1e-4);
  EXPECT_DOUBLE_EQ(log_nu(0.0, 1), std::log(2.0));
  EXPECT_NEAR(log_nu(std::exp(kE), 2), kE, 1e-12);
  EXPECT_THROW(log_nu(3.0, 0), std::invalid_argument);
}

TEST(LogNuSq, Values) {
  EXPECT_DOUBLE_EQ(log_nu_sq(kE, 1), 1.0);
  EXPECT_NEAR(log_nu_sq(std::exp(kE), 2), kE, 1e-12);
}

TEST(LogNu, Factorizations) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> lx(0.0, 40.0);
  for (int i = 0; i < 200; ++i) {
    const double x = std::exp(lx(gen));
    for (int nu = 1; nu <= 4; ++nu) {
      const auto f = iterated_logs(x, nu);
      EXPECT_NEAR(log_nu_sq(x, nu) / log_nu(x, nu), f.back(), 1e-12 * f.back());
      if (nu >= 2) EXPECT_NEAR(log_nu(x, nu) / log_nu(x, nu - 1), f.back(), 1e-12 * f.back());
    }
  }
}

TEST(SlowlyVarying, PositiveAndLogPowerNondecreasingAfterE) {
  const std::vector<SlowlyVaryingFamily> fams{SlowlyVaryingFamily::constant(2.0), SlowlyVaryingFamily::log_power(1.5),
                                              SlowlyVaryingFamily::log_power(-1.0), SlowlyVaryingFamily::loglog_power(1.0),
                                              SlowlyVaryingFamily::iterated_log_product(2), SlowlyVaryingFamily::iterated_log_product_sq(3)};
  for (const auto& f : fams)
    for (double x = 0.0; x < 1e9; x = x * 3.0 + 0.5) EXPECT_GT(f(x), 0.0) << f.name();
  const auto l = SlowlyVaryingFamily::log_power(2.0);
  double prev = l(kE);
  for (double x = kE; x < 1e12; x *= 1.7) {
    EXPECT_GE(l(x), prev);
    prev = l(x);
  }
}

TEST(Conjugate, ClosedForms) {
  const auto c = debruijn_conjugate(SlowlyVaryingFamily::constant(4.0));
  EXPECT_EQ(c.kind, SlowlyVaryingFamily::Kind::constant);
  EXPECT_DOUBLE_EQ(c(123.0), 0.25);
  const auto l2 = debruijn_conjugate(SlowlyVaryingFamily::log_power(2.0));
  for (double x : {10.0, 1e5, 1e10}) EXPECT_NEAR(l2(x), 1.0 / std::pow(std::log(x), 2.0), 1e-15);
  const auto ll = debruijn_conjugate(SlowlyVaryingFamily::loglog_power(1.0));
  for (double x : {1e3, 1e8}) EXPECT_NEAR(ll(x), 1.0 / std::log(std::log(x)), 1e-15);
  EXPECT_THROW(debruijn_conjugate(SlowlyVaryingFamily::iterated_log_product(2)), std::invalid_argument);
}

TEST(Residual, ConstantIsExactlyZero) {
  for (double x = 2.0; x < 1e13; x *= 10.0) {
    EXPECT_EQ(debruijn_residual(SlowlyVaryingFamily::constant(1.0), x), 0.0);
    EXPECT_EQ(debruijn_residual_swapped(SlowlyVaryingFamily::constant(1.0), x), 0.0);
  }
}

TEST(Residual, LogAtMillion) {
  const double x = 1e6, l = std::log(x);
  const double direct = std::abs(l / std::log(x * l) - 1.0);
  EXPECT_NEAR(debruijn_residual(SlowlyVaryingFamily::log_power(1.0), x), direct, 1e-14);
  EXPECT_NEAR(direct, 0.16, 0.005);
  EXPECT_LT(debruijn_residual(SlowlyVaryingFamily::log_power(1.0), 1e12), direct);
  EXPECT_THROW(debruijn_residual(SlowlyVaryingFamily::log_power(1.0), 1.0), std::invalid_argument);
}

TEST(Residual, NonincreasingAlongPowersOfTen) {
  for (const auto& f : {SlowlyVaryingFamily::log_power(1.0), SlowlyVaryingFamily::log_power(2.0), SlowlyVaryingFamily::log_power(-1.0),
                        SlowlyVaryingFamily::loglog_power(1.0)}) {
    double prev = 1e300, prev_sw = 1e300;
    for (int k = 3; k <= 12; ++k) {
      const double x = std::pow(10.0, k);
      const double r = debruijn_residual(f, x), s = debruijn_residual_swapped(f, x);
      EXPECT_LE(r, prev) << f.name() << " k=" << k;
      EXPECT_LE(s, prev_sw) << f.name() << " k=" << k;
      prev = r;
      prev_sw = s;
    }
  }
}

TEST(Domination, SameMarginalIsDominatedWithEquality) {
  const FieldModel m{MarginalSpec::pareto(2.5), DependenceSpec::iid(), Modulation::none()};
  const auto rep = domination_check(laws_of(m), MarginalSpec::pareto(2.5));
  EXPECT_LE(rep.max_violation, 0.0);
  EXPECT_GE(rep.max_violation, -1e-15);
}

TEST(Domination, ModulatedFamilyIsDominatedByScaledBase) {
  const FieldModel m{MarginalSpec::pareto(3.0), DependenceSpec::iid(), Modulation::checkerboard(1.0, 2.0)};
  EXPECT_LE(domination_check(laws_of(m), MarginalSpec::pareto(3.0).scaled(2.0)).max_violation, 0.0);
  const FieldModel r{MarginalSpec::symmetrized_pareto(2.0), DependenceSpec::iid(), Modulation::radial(1.0, 2.0)};
  EXPECT_LE(domination_check(laws_of(r), MarginalSpec::symmetrized_pareto(2.0).scaled(2.0)).max_violation, 0.0);
}

TEST(Domination, LighterCandidateIsFlagged) {
  const FieldModel m{MarginalSpec::pareto(2.0), DependenceSpec::iid(), Modulation::none()};
  const auto rep = domination_check(laws_of(m), MarginalSpec::pareto(3.0));
  EXPECT_GT(rep.max_violation, 0.0);
  EXPECT_FALSE(rep.dominated());
}

TEST(Domination, ConstructedDominatorAlwaysDominates) {
  for (const auto& m : {FieldModel{MarginalSpec::pareto(3.0), DependenceSpec::iid(), Modulation::checkerboard(1.0, 2.0)},
                        FieldModel{MarginalSpec::exponential(0.5), DependenceSpec::iid(), Modulation::radial(0.5, 4.0)},
                        FieldModel{MarginalSpec::discrete({-2, 1, 3}, {0.2, 0.5, 0.3}), DependenceSpec::iid(), Modulation::checkerboard(1, 3)}}) {
    const auto laws = laws_of(m);
    const auto rep = domination_check(laws, dominator_model(laws));
    EXPECT_LE(rep.max_violation, 0.0);
  }
}

TEST(UiTrace, BoundedCellsHitZero) {
  const FieldModel m{MarginalSpec::rademacher(), DependenceSpec::iid(), Modulation::checkerboard(1.0, 2.0)};
  const auto tr = uniform_integrability_trace(laws_of(m), PowerWeight{2.0, SlowlyVaryingFamily::constant()}, default_k_grid());
  EXPECT_EQ(tr.values.back(), 0.0);
  EXPECT_TRUE(tr.tends_to_zero);
  for (std::size_t i = 1; i < tr.values.size(); ++i) EXPECT_LE(tr.values[i], tr.values[i - 1]);
}

TEST(UiTrace, ParetoThreeSquareIntegrableTendsToZero) {
  const FieldModel m{MarginalSpec::pareto(3.0), DependenceSpec::iid(), Modulation::none()};
  const auto tr = uniform_integrability_trace(laws_of(m), PowerWeight{2.0, SlowlyVaryingFamily::constant()}, default_k_grid());
  EXPECT_TRUE(tr.tends_to_zero);
  // E X^2 1(X^2 > K) = 3 K^{-1/2} for K >= 1.
  for (std::size_t i = 0; i < tr.k_grid.size(); ++i)
    EXPECT_NEAR(tr.values[i], 3.0 / std::sqrt(tr.k_grid[i]), 1e-6 * tr.values[i]);
}

TEST(UiTrace, ParetoTwoStaysAwayFromZero) {
  const FieldModel m{MarginalSpec::pareto(2.0), DependenceSpec::iid(), Modulation::none()};
  const auto tr = uniform_integrability_trace(laws_of(m), PowerWeight{2.0, SlowlyVaryingFamily::constant()}, default_k_grid());
  EXPECT_FALSE(tr.tends_to_zero);
  for (double v : tr.values) EXPECT_GT(v, 1.0);
}

TEST(UiTrace, NonincreasingForModulatedHeavyTails) {
  const FieldModel m{MarginalSpec::symmetrized_pareto(2.5), DependenceSpec::iid(), Modulation::radial(1.0, 3.0)};
  const auto tr = uniform_integrability_trace(laws_of(m), PowerWeight{2.0, SlowlyVaryingFamily::log_power(1.0)}, default_k_grid());
  for (std::size_t i = 1; i < tr.values.size(); ++i) EXPECT_LE(tr.values[i], tr.values[i - 1]);
}

TEST(DominatorMoment, StrongMomentGivesFiniteDominatorMoment) {
  const FieldModel m{MarginalSpec::pareto(3.0), DependenceSpec::iid(), Modulation::checkerboard(1.0, 2.0)};
  const auto rep = dominator_moment_check(laws_of(m), 2.0, SlowlyVaryingFamily::constant(), 1);
  EXPECT_TRUE(rep.family_finite);
  EXPECT_TRUE(rep.dominator_finite);
  EXPECT_GT(rep.dominator_moment, 0.0);
}

TEST(DominatorMoment, BoundaryFamilyIsInfinite) {
  const FieldModel m{MarginalSpec::pareto(2.0), DependenceSpec::iid(), Modulation::checkerboard(1.0, 2.0)};
  const auto rep = dominator_moment_check(laws_of(m), 2.0, SlowlyVaryingFamily::constant(), 1);
  EXPECT_FALSE(rep.family_finite);
  EXPECT_FALSE(rep.dominator_finite);
}
