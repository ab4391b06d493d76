#include "rfield/model.hpp"
#include "rfield/parallel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace rfield;

namespace {

FieldModel iid(MarginalSpec m) { return {std::move(m), DependenceSpec::iid(), Modulation::none()}; }

// Kolmogorov-Smirnov distance between a sample and a law, handling atoms.
double ks_distance(std::vector<double> xs, const MarginalLaw& law) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size();) {
    std::size_t j = i;
    while (j < xs.size() && xs[j] == xs[i]) ++j;
    const double cdf = 1.0 - law.upper_tail(xs[i]);  // P(X <= x)
    const double left = law.lower_tail(xs[i]);       // P(X < x)
    d = std::max({d, std::abs(static_cast<double>(j) / n - cdf), std::abs(static_cast<double>(i) / n - left)});
    i = j;
  }
  return d;
}

}  // namespace

TEST(SampleField, SingleRademacherCellIsASign) {
  const auto f = sample_field(iid(MarginalSpec::rademacher()), 0, 0, 1, 0);
  ASSERT_EQ(f.values.size(), 1u);
  EXPECT_TRUE(f.values[0] == 1.0 || f.values[0] == -1.0);
}

TEST(SampleField, ParetoSupportStartsAtOne) {
  const auto f = sample_field(iid(MarginalSpec::pareto(2.0)), 5, 4, 99, 3);
  for (double x : f.values) EXPECT_GE(x, 1.0);
}

TEST(SampleField, SameInputsSameField) {
  const FieldModel m{MarginalSpec::symmetrized_pareto(2.5), DependenceSpec::gaussian_copula_negative(-0.05, 1),
                     Modulation::checkerboard(1.0, 3.0)};
  const auto a = sample_field(m, 4, 5, 1234, 7);
  const auto b = sample_field(m, 4, 5, 1234, 7);
  EXPECT_EQ(a.values, b.values);
  const auto c = sample_field(m, 4, 5, 1234, 8);
  EXPECT_NE(a.values, c.values);
}

TEST(SampleField, ParallelSamplingMatchesSequential) {
  for (const auto& dep : {DependenceSpec::iid(), DependenceSpec::pairwise_walsh(3), DependenceSpec::gaussian_copula_negative(-0.1, 1),
                          DependenceSpec::moving_average(3)}) {
    const FieldModel m{MarginalSpec::exponential(1.0), dep, Modulation::none()};
    std::vector<std::vector<double>> seq(16), par(16);
    parallel_for(16, Exec{1}, [&](std::size_t r) { seq[r] = sample_field(m, 4, 4, 5, r).values; });
    parallel_for(16, Exec{8}, [&](std::size_t r) { par[r] = sample_field(m, 4, 4, 5, r).values; });
    EXPECT_EQ(seq, par) << dep.name();
  }
}

TEST(Walsh, TwoGeneratorsGiveTheProductTriple) {
  for (int e1 : {-1, 1})
    for (int e2 : {-1, 1}) {
      const std::vector<int> signs{e1, e2};
      std::multiset<int> got, want{e1, e2, e1 * e2};
      for (std::uint64_t pos = 1; pos <= 3; ++pos) got.insert(walsh_cell_sign(signs, pos));
      EXPECT_EQ(got, want);
    }
}

TEST(Walsh, ExhaustiveEnumerationIsPairwiseIndependent) {
  for (int g : {2, 3, 4}) {
    const std::uint64_t tile = (1u << g) - 1;
    const int outcomes = 1 << g;
    std::vector<std::vector<int>> cells(tile, std::vector<int>(outcomes));
    for (int o = 0; o < outcomes; ++o) {
      std::vector<int> signs(g);
      for (int b = 0; b < g; ++b) signs[b] = (o >> b) & 1 ? 1 : -1;
      for (std::uint64_t pos = 1; pos <= tile; ++pos) cells[pos - 1][o] = walsh_cell_sign(signs, pos);
    }
    for (std::uint64_t a = 0; a < tile; ++a) {
      int sum = 0;
      for (int v : cells[a]) {
        EXPECT_EQ(std::abs(v), 1);
        sum += v;
      }
      EXPECT_EQ(sum, 0) << "cell " << a << " is not Rademacher";
      for (std::uint64_t b = a + 1; b < tile; ++b) {
        int cov = 0;
        for (int o = 0; o < outcomes; ++o) cov += cells[a][o] * cells[b][o];
        EXPECT_EQ(cov, 0) << "cells " << a << ", " << b;
      }
    }
  }
}

TEST(Walsh, SampledWordsMatchTheSignConstruction) {
  // The top bit of each generator word decides its sign.
  const std::vector<std::uint64_t> words{0x8000000000000000ULL, 0x1ULL, 0xF000000000000000ULL};
  std::vector<int> signs;
  for (auto w : words) signs.push_back(word_to_unit(w) < 0.5 ? -1 : 1);
  for (std::uint64_t pos = 1; pos <= 7; ++pos) {
    const int from_word = word_to_unit(walsh_cell_word(words, pos)) < 0.5 ? -1 : 1;
    EXPECT_EQ(from_word, walsh_cell_sign(signs, pos)) << pos;
  }
}

TEST(TailProb, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(tail_prob(iid(MarginalSpec::pareto(2.0)), 0, 0, 10.0), 0.01);
  EXPECT_DOUBLE_EQ(tail_prob(iid(MarginalSpec::rademacher()), 0, 0, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(tail_prob(iid(MarginalSpec::centered_bernoulli(0.3)), 0, 0, -1e300), 1.0);
}

TEST(TailProb, NonincreasingAndRightContinuous) {
  for (const auto& spec : {MarginalSpec::rademacher(), MarginalSpec::pareto(1.5), MarginalSpec::discrete({0, 1, 3}, {0.5, 0.3, 0.2}),
                           MarginalSpec::symmetrized_pareto(2.0), MarginalSpec::exponential(2.0)}) {
    const MarginalLaw law(spec);
    double prev = 1.0;
    for (double x = -5.0; x <= 5.0; x += 0.125) {
      const double t = law.upper_tail(x);
      EXPECT_LE(t, prev);
      EXPECT_NEAR(law.upper_tail(x + 1e-12), t, 1e-9);
      prev = t;
    }
  }
}

TEST(TruncatedMoment, ClosedFormValues) {
  const auto rad = iid(MarginalSpec::rademacher());
  EXPECT_DOUBLE_EQ(truncated_moment(rad, 0, 0, 2.0, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(truncated_moment(rad, 0, 0, 2.0, 2.0), 1.0);
  const double v = truncated_moment(iid(MarginalSpec::pareto(3.0)), 0, 0, 2.0, 4.0);
  EXPECT_NEAR(v, 2.25, 1e-12);
  const double quad = boost::math::quadrature::gauss_kronrod<double, 61>::integrate([](double x) { return 3.0 / (x * x); }, 1.0, 4.0);
  EXPECT_NEAR(v, quad, 1e-10);
}

TEST(TruncatedMoment, NondecreasingInLevel) {
  const auto m = iid(MarginalSpec::symmetrized_pareto(1.7));
  double prev = 0.0;
  for (double a = 0.5; a < 1e4; a *= 1.7) {
    const double v = truncated_moment(m, 0, 0, 1.5, a);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Marginal, EmpiricalCdfMatchesWithinKolmogorovDistance) {
  const std::vector<MarginalSpec> specs{MarginalSpec::rademacher(),
                                        MarginalSpec::bernoulli(0.3),
                                        MarginalSpec::centered_bernoulli(0.7),
                                        MarginalSpec::pareto(1.5),
                                        MarginalSpec::symmetrized_pareto(2.5),
                                        MarginalSpec::exponential(0.5),
                                        MarginalSpec::discrete({-2.0, 0.0, 5.0}, {0.25, 0.5, 0.25}),
                                        MarginalSpec::pareto(3.0).scaled(2.0).shifted(-1.0)};
  for (const auto& spec : specs) {
    // 2^17 cells is just over 10^5 samples.
    const auto f = sample_field(iid(spec), 9, 8, 2024, 0);
    EXPECT_LE(ks_distance(f.values, MarginalLaw(spec)), 0.01) << to_string(spec.kind);
  }
}

TEST(Marginal, DependentSamplersKeepTheMarginal) {
  const auto spec = MarginalSpec::pareto(2.0);
  for (const auto& dep : {DependenceSpec::pairwise_walsh(5), DependenceSpec::gaussian_copula_negative(-0.1, 1),
                          DependenceSpec::moving_average(2)}) {
    std::vector<double> all;
    for (std::uint64_t r = 0; r < 8; ++r) {
      const auto f = sample_field({spec, dep, Modulation::none()}, 7, 7, 77, r);
      all.insert(all.end(), f.values.begin(), f.values.end());
    }
    EXPECT_LE(ks_distance(all, MarginalLaw(spec)), 0.02) << dep.name();
  }
}

TEST(Dependence, RejectsNonPsdCopula) {
  EXPECT_THROW(DependenceSpec::gaussian_copula_negative(-0.2, 1).validate(), std::invalid_argument);
  EXPECT_NO_THROW(DependenceSpec::gaussian_copula_negative(-0.125, 1).validate());
  EXPECT_THROW(DependenceSpec::gaussian_copula_negative(0.1, 1).validate(), std::invalid_argument);
}

TEST(Dependence, CopulaNeighboursAreNegativelyCorrelated) {
  const FieldModel m{MarginalSpec::exponential(1.0), DependenceSpec::gaussian_copula_negative(-0.1, 1), Modulation::none()};
  double cross = 0.0, count = 0.0;
  for (std::uint64_t r = 0; r < 50; ++r) {
    const auto f = sample_field(m, 5, 5, 3, r);
    for (std::size_t i = 0; i < f.rows(); ++i)
      for (std::size_t j = 0; j + 1 < f.cols(); ++j) {
        cross += (f.at(i, j) - 1.0) * (f.at(i, j + 1) - 1.0);
        count += 1.0;
      }
  }
  EXPECT_LT(cross / count, -0.02);
}

TEST(Modulation, ParsesPresets) {
  const auto m = Modulation::parse("checkerboard(1, 2)");
  EXPECT_EQ(m.kind, Modulation::Kind::checkerboard);
  EXPECT_DOUBLE_EQ(m.scale_at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.scale_at(0, 1), 2.0);
  EXPECT_EQ(Modulation::parse("none").kind, Modulation::Kind::none);
  EXPECT_THROW(Modulation::parse("stripes(1,2)"), std::invalid_argument);
  EXPECT_THROW(Modulation::parse("radial(2,1)"), std::invalid_argument);
}

TEST(DominatorModel, SingleLawReproducesItsTail) {
  const std::vector<MarginalLaw> one{MarginalLaw(MarginalSpec::pareto(2.5))};
  const MarginalLaw dom(dominator_model(one));
  for (double x : {0.5, 1.0, 1.5, 3.0, 10.0, 100.0}) EXPECT_NEAR(dom.abs_tail(x), one[0].abs_tail(x), 1e-12 + 1e-9 * one[0].abs_tail(x));
}

TEST(DominatorModel, HeavierParetoDominates) {
  const std::vector<MarginalLaw> laws{MarginalLaw(MarginalSpec::pareto(2.0)), MarginalLaw(MarginalSpec::pareto(3.0))};
  const MarginalLaw dom(dominator_model(laws));
  for (double x : {1.0, 1.5, 2.0, 7.0, 40.0, 1e3}) EXPECT_NEAR(dom.abs_tail(x), std::pow(x, -2.0), 1e-9 * std::pow(x, -2.0));
}

TEST(DominatorModel, ModulatedRademacherGivesTwiceTheSign) {
  const FieldModel m{MarginalSpec::rademacher(), DependenceSpec::iid(), Modulation::checkerboard(1.0, 2.0)};
  const auto cls = cell_classes(m, 4, 4);
  const MarginalLaw dom(dominator_model(cls.laws));
  const MarginalLaw twice(MarginalSpec::rademacher().scaled(2.0));
  for (double x : {0.0, 0.5, 1.0, 1.5, 1.999, 2.0, 2.5}) EXPECT_DOUBLE_EQ(dom.abs_tail(x), twice.abs_tail(x)) << x;
}

TEST(DominatorModel, TailDominatesEveryInput) {
  const std::vector<MarginalLaw> laws{MarginalLaw(MarginalSpec::symmetrized_pareto(1.5)), MarginalLaw(MarginalSpec::exponential(0.2)),
                                      MarginalLaw(MarginalSpec::discrete({-3, 4}, {0.5, 0.5}))};
  const auto grid = adaptive_abs_grid(laws);
  const MarginalLaw dom(dominator_model(laws, grid));
  for (double x : grid)
    for (const auto& l : laws) EXPECT_GE(dom.abs_tail(x), l.abs_tail(x) - 1e-15) << x;
}
