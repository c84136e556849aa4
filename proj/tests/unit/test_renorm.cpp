#include <cmath>

#include <gtest/gtest.h>

#include "fracwave/renorm.hpp"

using namespace fracwave;
using namespace fracwave::renorm;

TEST(SigmaExact, VanishesAtTimeZeroAndGrowsWithLevel) {
  const HurstTriple h(0.45, 0.45, 0.35);
  EXPECT_EQ(sigma_exact(h, 4, 0.0), 0.0);
  EXPECT_EQ(sigma_exact(h, 0, 1.0), 0.0);
  double prev = 0.0;
  for (int n = 1; n <= 6; ++n) {
    const double v = sigma_exact(h, n, 0.8);
    EXPECT_GT(v, prev);
    prev = v;
  }
  EXPECT_THROW(sigma_exact(h, 3, 1.5), ValidationError);
}

// Two independent quadratures of the same integral: polar/angular versus the
// closed-form Beta factor.
TEST(SigmaExact, AgreesWithCovarianceQuadrature) {
  for (auto h : {HurstTriple(0.45, 0.45, 0.35), HurstTriple(0.3, 0.6, 0.4)}) {
    const double s = sigma_exact(h, 4, 0.75);
    const double c = analysis::covariance_psi_quadrature({0.2, -0.1}, {0.2, -0.1}, 0.75, 0.75, 4, h);
    EXPECT_NEAR(c, s, 1e-4 * s);
  }
}

TEST(SigmaExact, MatchesLatticeVariance) {
  for (auto h : {HurstTriple(0.45, 0.45, 0.35), HurstTriple(0.4, 0.4, 0.35)})
    for (int n : {3, 5})
      for (double t : {0.5, 1.0}) {
        const noise::ModeSet m(h, n, 8.0, 0, 0.25, 1);
        const double s = sigma_exact(h, n, t);
        EXPECT_NEAR(objects::lattice_variance(m, t), s, 0.01 * s) << n << " " << t;
      }
}

TEST(SigmaTableTest, RowsAndLookup) {
  const HurstTriple h(0.45, 0.45, 0.35);
  const auto tab = sigma_table(h, {2, 3}, {0.5, 1.0}, 2);
  ASSERT_EQ(tab.rows.size(), 4u);
  EXPECT_EQ(tab.at(3, 1.0), sigma_exact(h, 3, 1.0));
  EXPECT_LT(tab.at(2, 1.0), tab.at(3, 1.0));
  EXPECT_THROW(tab.at(4, 1.0), Error);
}

TEST(SlopeFit, ReportsLawDiagnostics) {
  const HurstTriple h(0.45, 0.45, 0.35);
  const auto f = sigma_slope_fit(h, 1.0, {3, 4, 5, 6});
  EXPECT_DOUBLE_EQ(f.expected, 0.5);
  EXPECT_LE(f.ci_low, f.slope);
  EXPECT_GE(f.ci_high, f.slope);
  EXPECT_GT(f.slope, 0.0);
  EXPECT_GT(f.t_ratio, 1.5);
  EXPECT_LT(f.t_ratio, 2.5);
  EXPECT_NEAR(f.difference_slope, 0.5, 0.1);
  EXPECT_THROW(sigma_slope_fit(h, 1.0, {3, 4, 5}), ValidationError);
  EXPECT_THROW(sigma_slope_fit(HurstTriple(0.5, 0.5, 0.5), 1.0, {3, 4, 5, 6}), ValidationError);
}

TEST(Divergence, LevelZeroAndPairedIncrements) {
  RunConfig c;
  c.hurst = HurstTriple(0.3, 0.35, 0.3);
  c.grid.level = 3;
  c.grid.nx = 32;
  c.grid.nt = 4;
  c.sobolev.alpha = 0.55;
  const auto st = divergence_study(c, {0, 1, 2, 3}, 1.0, 8);
  ASSERT_EQ(st.rows.size(), 4u);
  EXPECT_EQ(st.rows[0].moment.mean, 0.0);
  for (std::size_t i = 1; i < st.rows.size(); ++i) {
    EXPECT_GT(st.rows[i].moment.mean, 0.0);
    EXPECT_NEAR(st.rows[i].increment.mean, st.rows[i].moment.mean - st.rows[i - 1].moment.mean,
                1e-9 * st.rows[i].moment.mean);
  }
  EXPECT_THROW(divergence_study(c, {1, 2}, 1.0, 4), ValidationError);
  const auto again = divergence_study(c, {0, 1, 2, 3}, 1.0, 8, 3);
  for (std::size_t i = 0; i < st.rows.size(); ++i) EXPECT_EQ(again.rows[i].moment.mean, st.rows[i].moment.mean);
}
