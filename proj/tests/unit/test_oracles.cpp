#include <cmath>

#include <gtest/gtest.h>

#include "fracwave/oracles.hpp"

using namespace fracwave;
using namespace fracwave::oracles;

TEST(Verdict, ClassifiesSyntheticSequences) {
  std::vector<double> geo, lin, flat;
  double s = 0.0;
  for (int k = 0; k < 6; ++k) {
    s += std::pow(0.5, k);
    geo.push_back(s);
    lin.push_back(1.0 + 0.5 * k * k);
    flat.push_back(1.0 + 1e-3 * k);
  }
  EXPECT_EQ(classify(geo), Verdict::Converged);
  EXPECT_EQ(classify(lin), Verdict::Diverging);
  EXPECT_EQ(classify(flat), Verdict::Inconclusive);
  EXPECT_EQ(classify({1.0, 2.0, 3.0}), Verdict::Inconclusive);
  EXPECT_STREQ(to_string(Verdict::Diverging), "diverging");
}

TEST(FirstOrder, VerdictsAroundTheThreshold) {
  const HurstTriple h(0.4, 0.4, 0.35);
  const double a0 = 1.5 - h.sum();
  const auto c = truncation_study("first", {}, 4, 9, [&](double R) { return integral_first_order(h, a0 + 0.1, R); });
  const auto d = truncation_study("first", {}, 4, 9, [&](double R) { return integral_first_order(h, a0 - 0.2, R); });
  EXPECT_EQ(c.verdict, Verdict::Converged);
  EXPECT_EQ(d.verdict, Verdict::Diverging);
  // Tail ratio of a power law r^{-2 delta} under doubling.
  EXPECT_NEAR(c.ratios.back(), std::pow(2.0, -0.2), 0.01);
}

TEST(FirstOrder, QuadrantsContributeEqually) {
  const HurstTriple h(0.4, 0.4, 0.35);
  const double full = integral_first_order(h, 0.4, 64.0);
  for (int q = 0; q < 4; ++q) EXPECT_NEAR(integral_first_order_quadrant(h, 0.4, 64.0, q), full / 4.0, 1e-8 * full);
}

TEST(FirstOrder, EnlargingRadiusNeverFlipsVerdict) {
  const HurstTriple h(0.45, 0.45, 0.35);
  auto f = [&](double R) { return integral_first_order(h, 0.4, R); };
  for (int top = 8; top <= 11; ++top) EXPECT_EQ(truncation_study("first", {}, 3, top, f).verdict, Verdict::Converged);
}

TEST(JIntegrals, FirstFactorizes) {
  const HurstTriple h(0.45, 0.45, 0.35);
  for (double R : {16.0, 64.0}) {
    const double b = integral_first_order_box(h, 0.45, R);
    EXPECT_NEAR(integral_J(1, h, h, 0.45, R), b * b, 1e-5 * b * b);
  }
}

TEST(JIntegrals, ConvergeInsideLemmaRegion) {
  const HurstTriple h(0.45, 0.45, 0.35);
  EXPECT_TRUE(check_lemma_parameters(h, h, 0.45).ok());
  for (int w : {1, 2}) {
    const auto r = truncation_study("J", {}, 3, 8, [&](double R) { return integral_J(w, h, h, 0.45, R); });
    EXPECT_EQ(r.verdict, Verdict::Converged) << w;
  }
  EXPECT_FALSE(check_lemma_parameters(HurstTriple(0.3, 0.3, 0.3), h, 0.45).ok());
  EXPECT_THROW(integral_J(5, h, h, 0.45, 8.0), ValidationError);
}

// The reflected form integrates the same function in the other order.
TEST(JIntegrals, FourthIsIndependentOfIntegrationOrder) {
  const HurstTriple h(0.45, 0.45, 0.35);
  for (double R : {8.0, 32.0}) {
    const double a = integral_J(4, h, h, 0.45, R, J4Form::Printed);
    const double b = integral_J(4, h, h, 0.45, R, J4Form::Reflected);
    EXPECT_NEAR(a, b, 1e-5 * a);
  }
}

TEST(KernelL2, VerdictsAndMonotonicity) {
  auto study = [](const HurstTriple& h) {
    return truncation_study("kl2", {}, 4, 9, [&](double R) { return k_l2_norm(h, R); }).verdict;
  };
  EXPECT_EQ(study(HurstTriple(0.5, 0.5, 0.5)), Verdict::Converged);
  EXPECT_EQ(study(HurstTriple(0.3, 0.8, 0.4)), Verdict::Diverging);
  double prev = INFINITY;
  for (double h0 : {0.3, 0.4, 0.5, 0.6, 0.7}) {
    const double v = k_l2_norm(HurstTriple(h0, 0.5, 0.5), 256.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(ConvBound, StableUnderGridDoubling) {
  const auto a = conv_bound_check(0.4, 0.1, 8);
  const auto b = conv_bound_check(0.4, 0.1, 9, 4, 2);
  EXPECT_TRUE(std::isfinite(a.ratios.front()));
  EXPECT_GT(a.ratios.front(), 0.0);
  EXPECT_LE(std::abs(b.max_ratio - a.max_ratio), 0.05 * a.max_ratio);
  EXPECT_THROW(conv_bound_check(0.6, 0.1, 4), ValidationError);
}

TEST(ConvBound, GrowsWithoutEpsilon) {
  const auto z = conv_bound_check(0.4, 0.0, 10);
  // The tail of the ratios keeps increasing.
  for (std::size_t i = z.ratios.size() - 8; i < z.ratios.size(); ++i) EXPECT_GT(z.ratios[i], z.ratios[i - 1]);
  EXPECT_GT(z.max_ratio, 1.05 * conv_bound_check(0.4, 0.0, 8).max_ratio);
}
