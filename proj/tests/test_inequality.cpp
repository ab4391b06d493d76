#include "rfield/h2q.hpp"
#include "rfield/inequality.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace rfield;

namespace {

FieldModel iid(MarginalSpec m) { return {std::move(m), DependenceSpec::iid(), Modulation::none()}; }

// E max_{u<2,v<2} |sum (clamp(X) - E clamp(X))|^{2q} on a 2x2 grid by
// enumerating every joint outcome of four i.i.d. discrete cells.
double enumerate_lhs_2x2(const std::vector<double>& vals, const std::vector<double>& probs, double q, double cap) {
  double mean = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) mean += probs[i] * std::clamp(vals[i], -cap, cap);
  const std::size_t k = vals.size();
  double total = 0.0;
  for (std::size_t o = 0; o < k * k * k * k; ++o) {
    double grid[2][2];
    double pr = 1.0;
    for (std::size_t c = 0, code = o; c < 4; ++c, code /= k) {
      grid[c / 2][c % 2] = std::clamp(vals[code % k], -cap, cap) - mean;
      pr *= probs[code % k];
    }
    double best = 0.0;
    for (int u = 1; u < 2; ++u)
      for (int v = 1; v < 2; ++v) {
        double s = 0.0;
        for (int i = 0; i < u; ++i)
          for (int j = 0; j < v; ++j) s += grid[i][j];
        best = std::max(best, std::abs(s));
      }
    total += pr * std::pow(best, 2.0 * q);
  }
  return total;
}

H2qInstance walsh_six() {
  // Eight outcomes of three Rademacher generators and six of their products.
  H2qInstance inst;
  for (int o = 0; o < 8; ++o) {
    const int e1 = o & 1 ? 1 : -1, e2 = o & 2 ? 1 : -1, e3 = o & 4 ? 1 : -1;
    inst.outcomes.push_back({double(e1), double(e2), double(e3), double(e1 * e2), double(e1 * e3), double(e1 * e2 * e3)});
    inst.probs.push_back(0.125);
  }
  return inst;
}

}  // namespace

TEST(Weight, Values) {
  EXPECT_DOUBLE_EQ(weight(1, 1, 1, 1, 1.0, 0.5), 4.0);
  EXPECT_NEAR(weight(2, 1, 1, 1, 1.0, 0.5), std::pow(2.0, 2.5), 1e-12);
  EXPECT_NEAR(weight(2, 1, 1, 1, 1.0, 0.5), 5.6569, 1e-4);
  for (int m = 1; m <= 8; ++m)
    for (int n = 1; n <= 8; ++n) EXPECT_EQ(weight(m, n, m, n, 1.0, 0.6), std::ldexp(1.0, m + n));
  EXPECT_THROW(weight(2, 2, 3, 1, 1.0, 0.5), std::out_of_range);
  EXPECT_THROW(weight(2, 2, 0, 1, 1.0, 0.5), std::out_of_range);
}

TEST(Weight, SeparableInIndexSums) {
  EXPECT_DOUBLE_EQ(weight(4, 3, 1, 3, 0.8, 0.5), weight(4, 3, 2, 2, 0.8, 0.5));
  EXPECT_DOUBLE_EQ(weight(4, 3, 2, 1, 0.8, 0.5) / weight(5, 2, 2, 1, 0.8, 0.5), 1.0);
}

TEST(WeightTotal, Values) {
  EXPECT_DOUBLE_EQ(weight_total(1, 1, 0.75, 0.5), std::exp2(1.5));
  const double v = weight_total(2, 2, 1.0, 0.5);
  EXPECT_NEAR(v, 4.0 * std::pow(std::sqrt(2.0) + 2.0, 2.0), 1e-9);
  EXPECT_NEAR(v, 46.627, 1e-3);
  EXPECT_NEAR(v / 16.0, 2.914, 1e-3);
  EXPECT_NEAR(envelope_constant(1.0, 0.5), 11.6569, 1e-4);
}

TEST(WeightTotal, EnvelopeBounds) {
  for (auto [alpha, a] : {std::pair{1.0, 0.5}, std::pair{0.75, 0.6}, std::pair{2.0 / 3.0, 0.55}}) {
    const double c1 = envelope_constant(alpha, a);
    for (int m = 1; m <= 10; ++m)
      for (int n = 1; n <= 10; ++n) {
        const double b = std::exp2(alpha * (m + n));
        const double tot = weight_total(m, n, alpha, a);
        EXPECT_GE(tot, b * (1 - 1e-12));
        EXPECT_LE(tot, c1 * b);
      }
  }
}

TEST(HoelderFactor, BoundedByPowerOfTotal) {
  for (double q : {1.0, 1.5, 3.0})
    for (int m = 1; m <= 6; ++m)
      for (int n = 1; n <= 6; ++n) EXPECT_LE(hoelder_factor(m, n, q, 0.8, 0.6), std::pow(weight_total(m, n, 0.8, 0.6), 2.0 * q) * (1 + 1e-12));
}

TEST(WeightScheme, Validation) {
  EXPECT_NO_THROW((WeightScheme{1.5, 2.0 / 3.0, 1.0, 0.6}.validate()));
  EXPECT_THROW((WeightScheme{1.5, 0.4, 1.0, 0.3}.validate()), std::invalid_argument);
  try {
    WeightScheme{2.0, 1.0, 1.0, 0.9}.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("requires q > (alpha p - 1)/(2 alpha - 1)"), std::string::npos);
  }
  const double a = WeightScheme::default_a(1.5, 2.0 / 3.0, 1.0);
  EXPECT_NO_THROW((WeightScheme{1.5, 2.0 / 3.0, 1.0, a}.validate()));
}

TEST(RosenthalRhs, ConstantModelIsZero) {
  const WeightScheme w{1.5, 2.0 / 3.0, 1.0, 0.6};
  EXPECT_EQ(rosenthal_rhs(iid(MarginalSpec::constant(0.0)), 3, 3, w, TruncationLadder::power_alpha(w.alpha)), 0.0);
}

TEST(RosenthalRhs, BernoulliSingleTerm) {
  // (s,t) = (1,1): no tail above b(1) = 1; E X^2 = E X^{2q} = 1/2; lambda = 4; a_{1,1} = 4.
  // 4^2 * (2^2 * 4^-2 * (1/2 + 1/2)) = 4.
  const WeightScheme w{1.0, 1.0, 1.0, 0.75};
  EXPECT_DOUBLE_EQ(rosenthal_rhs(iid(MarginalSpec::bernoulli(0.5)), 1, 1, w, TruncationLadder::power_alpha(1.0)), 4.0);
}

TEST(RosenthalLhs, ConstantModelIsExactlyZero) {
  const auto est = rosenthal_lhs_mc(iid(MarginalSpec::constant(3.0)), 3, 3, 1.0, TruncationLadder::power_alpha(1.0), 50, 1);
  EXPECT_EQ(est.mean, 0.0);
  EXPECT_EQ(est.ci().lo, 0.0);
  EXPECT_EQ(est.ci().hi, 0.0);
}

TEST(RosenthalLhs, MatchesEnumerationForBernoulli) {
  const auto ladder = TruncationLadder::power_alpha(1.0);
  const double exact = enumerate_lhs_2x2({0.0, 1.0}, {0.5, 0.5}, 1.0, ladder.at_pow2(2));
  EXPECT_DOUBLE_EQ(exact, 0.25);
  const auto est = rosenthal_lhs_mc(iid(MarginalSpec::bernoulli(0.5)), 1, 1, 1.0, ladder, 10000, 3);
  const auto ci = est.ci(0.99);
  EXPECT_LE(ci.lo, exact);
  EXPECT_GE(ci.hi, exact);
}

TEST(RosenthalLhs, MatchesEnumerationForThreeValuedLaw) {
  const std::vector<double> vals{-1.0, 0.5, 3.0}, probs{0.3, 0.5, 0.2};
  const auto ladder = TruncationLadder::power_alpha(0.75);
  const double exact = enumerate_lhs_2x2(vals, probs, 1.5, ladder.at_pow2(2));
  const auto est = rosenthal_lhs_mc(iid(MarginalSpec::discrete(vals, probs)), 1, 1, 1.5, ladder, 10000, 9);
  const auto ci = est.ci(0.99);
  EXPECT_LE(ci.lo, exact);
  EXPECT_GE(ci.hi, exact);
}

TEST(RosenthalLhs, DeterministicInSeedAndThreads) {
  const auto model = iid(MarginalSpec::pareto(3.0));
  const auto ladder = TruncationLadder::power_alpha(2.0 / 3.0);
  const auto a = rosenthal_lhs_mc(model, 3, 3, 1.0, ladder, 64, 5, Exec{1});
  const auto b = rosenthal_lhs_mc(model, 3, 3, 1.0, ladder, 64, 5, Exec{4});
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(RosenthalLedger, ImpliedConstantIsFiniteForBernoulli) {
  const WeightScheme w{1.5, 2.0 / 3.0, 1.0, WeightScheme::default_a(1.5, 2.0 / 3.0, 1.0)};
  const auto ledger = rosenthal_ledger(iid(MarginalSpec::bernoulli(0.5)), {{2, 2}, {3, 3}, {4, 4}, {5, 5}}, w,
                                       TruncationLadder::power_alpha(w.alpha), 200, 17, 0.95);
  ASSERT_EQ(ledger.rows.size(), 4u);
  for (const auto& r : ledger.rows) {
    EXPECT_GT(r.rhs, 0.0);
    EXPECT_GT(r.implied_constant, 0.0);
    EXPECT_LT(r.implied_constant, 1.0);
  }
}

TEST(Tailbound, BoundedModelHasNoMassAboveTruncation) {
  const WeightScheme w{1.5, 2.0 / 3.0, 1.0, 0.6};
  const auto rep = tailbound_check(iid(MarginalSpec::bernoulli(0.3)), 3, 3, w, TruncationLadder::power_alpha(w.alpha), 1.0, 0, 1);
  EXPECT_EQ(rep.truncation_mean_term, 0.0);
  EXPECT_TRUE(rep.truncation_mean_ok);
  EXPECT_FALSE(rep.split);
  EXPECT_DOUBLE_EQ(rep.threshold, 3.0 * rep.a_mn);
}

TEST(Tailbound, SignedModelUsesTheDoubledThreshold) {
  const WeightScheme w{1.5, 2.0 / 3.0, 1.0, 0.6};
  const auto rep = tailbound_check(iid(MarginalSpec::rademacher()), 2, 2, w, TruncationLadder::power_alpha(w.alpha), 1.0, 0, 1);
  EXPECT_TRUE(rep.split);
  EXPECT_DOUBLE_EQ(rep.threshold, 6.0 * rep.a_mn);
}

TEST(Tailbound, ParetoPreconditionsEventuallyHold) {
  const double p = 1.5, alpha = 1.0 / p;
  const WeightScheme w{p, alpha, 1.0, WeightScheme::default_a(p, alpha, 1.0)};
  const auto ladder = TruncationLadder::power_alpha(alpha);
  bool seen_false = false, last = false;
  for (int total = 2; total <= 16; ++total) {
    const int m = (total + 1) / 2, n = total / 2;
    const auto rep = tailbound_check(iid(MarginalSpec::pareto(3.0)), m, n, w, ladder, 1.0, 0, 1);
    seen_false = seen_false || !rep.preconditions_met();
    last = rep.preconditions_met();
  }
  EXPECT_TRUE(seen_false);
  EXPECT_TRUE(last);
}

TEST(Tailbound, HugeEpsilonGivesZeroProbability) {
  const WeightScheme w{1.5, 2.0 / 3.0, 1.0, 0.6};
  const auto rep = tailbound_check(iid(MarginalSpec::pareto(3.0)), 3, 3, w, TruncationLadder::power_alpha(w.alpha), 1e12, 200, 1);
  EXPECT_EQ(rep.lhs_probability, 0.0);
  EXPECT_TRUE(rep.preconditions_met());
}

TEST(H2q, WalshTripleIsOneHalf) {
  EXPECT_TRUE(pairwise_independent(walsh_triple()));
  EXPECT_DOUBLE_EQ(h2q_ratio(walsh_triple(), 0b111, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(h2q_min_constant(walsh_triple(), 1.0), 0.5);
}

TEST(H2q, IndependentPairWithQTwoIsFourThirds) {
  EXPECT_DOUBLE_EQ(h2q_ratio(independent_rademacher_pair(), 0b11, 2.0), 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(h2q_min_constant(independent_rademacher_pair(), 2.0), 4.0 / 3.0);
}

TEST(H2q, SingleVariableIsAtMostOneHalf) {
  H2qInstance inst;
  inst.outcomes = {{-2.0}, {0.0}, {5.0}};
  inst.probs = {0.2, 0.5, 0.3};
  for (const auto& f : {MonotoneTransform::identity(), MonotoneTransform::affine(2.0, 1.0), MonotoneTransform::clamp(-1.0, 1.0),
                        MonotoneTransform::step(1.0, -1.0, 3.0)}) {
    inst.transforms = {f};
    EXPECT_LE(h2q_min_constant(inst, 1.0), 0.5);
  }
}

TEST(H2q, RandomPairwiseIndependentInstancesStayBelowOne) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_int_distribution<int> pick(0, 3);
  auto base = walsh_six();
  ASSERT_TRUE(pairwise_independent(base));
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = base;
    inst.transforms.clear();
    for (std::size_t v = 0; v < inst.dims(); ++v) {
      const double x = u(gen), y = u(gen);
      switch (pick(gen)) {
        case 0: inst.transforms.push_back(MonotoneTransform::identity()); break;
        case 1: inst.transforms.push_back(MonotoneTransform::affine(std::abs(x), y)); break;
        case 2: inst.transforms.push_back(MonotoneTransform::clamp(std::min(x, y), std::max(x, y))); break;
        default: inst.transforms.push_back(MonotoneTransform::step(0.0, std::min(x, y), std::max(x, y))); break;
      }
    }
    EXPECT_LE(h2q_min_constant(inst, 1.0), 1.0);
  }
}

TEST(H2q, RejectsNonMonotoneTransforms) {
  auto inst = walsh_triple();
  inst.transforms = {MonotoneTransform::identity(), MonotoneTransform::affine(-1.0, 0.0), MonotoneTransform::identity()};
  EXPECT_THROW(h2q_min_constant(inst, 1.0), std::invalid_argument);
  inst.transforms = {MonotoneTransform::identity(), MonotoneTransform::step(0.0, 2.0, 1.0), MonotoneTransform::identity()};
  EXPECT_THROW(h2q_min_constant(inst, 1.0), std::invalid_argument);
}
