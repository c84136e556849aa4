#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fracwave/solver.hpp"

using namespace fracwave;
using namespace fracwave::solver;

namespace {

RunConfig small_config(int nt = 32) {
  RunConfig c;
  c.hurst = HurstTriple(0.45, 0.45, 0.35);
  c.grid.level = 3;
  c.grid.nx = 32;
  c.grid.nt = nt;
  c.sobolev.alpha = default_alpha(c.hurst);
  c.solver.t0 = 1.0;
  c.solver.tol = 1e-8;
  return c;
}

InitialData data_with(const GridSpec& g, double a0, double a1) {
  InitialDataSpec s;
  s.phi0 = {{1, 0, a0, 0.0}, {0, 2, 0.6 * a0, 0.4}};
  s.phi1 = {{1, 1, a1, 0.1}};
  return make_initial_data(g, s);
}

double max_abs_diff(const std::vector<double>& a, const double* b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

} // namespace

TEST(CutoffRho, BumpShape) {
  EXPECT_EQ(cutoff_rho({0.5, 0.0}), 1.0);
  EXPECT_EQ(cutoff_rho({0.0, 1.0}), 1.0);
  EXPECT_EQ(cutoff_rho({3.0, 0.0}), 0.0);
  EXPECT_EQ(cutoff_rho({1.5, 1.5}), 0.0);
  double prev = 1.0;
  for (double r = 1.0; r <= 2.0; r += 0.01) {
    const double v = cutoff_rho({r * 0.6, r * 0.8});
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(LinearFlow, InitialSliceAndModeEnergy) {
  const auto c = small_config();
  const auto d = data_with(c.grid, 0.7, 0.0);
  EXPECT_LT(max_abs_diff(linear_flow(d, 0.0), d.phi0.data()), 1e-14);

  // Single mode with phi1 = 0: |a|^2 + |a_t / lam|^2 is constant.
  InitialDataSpec s;
  s.phi0 = {{3, -1, 1.0, 0.0}};
  const auto one = make_initial_data(c.grid, s);
  const double lam = c.grid.eta_step() * std::sqrt(10.0);
  for (double t : {0.1, 0.4, 0.9}) {
    const auto f = linear_flow(one, t);
    const double h = 1e-5;
    const auto fp = linear_flow(one, t + h), fm = linear_flow(one, t - h);
    const std::size_t m = 5 * c.grid.nx + 11;
    const double a = f[m], at = (fp[m] - fm[m]) / (2.0 * h);
    const double x1 = -c.grid.period + 5 * c.grid.dx(), x2 = -c.grid.period + 11 * c.grid.dx();
    const double a0 = std::cos(c.grid.eta_step() * (3 * x1 - x2));
    EXPECT_NEAR(a * a + at * at / (lam * lam), a0 * a0, 1e-8);
  }
  EXPECT_THROW(linear_flow(d, 1.5), ValidationError);
}

// Per mode the flow multiplier is bounded by sqrt 2 in the W^{1/2} / W^{-1/2} pairing.
TEST(LinearFlow, StrichartzTypeBoundOnData) {
  const auto c = small_config();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    InitialDataSpec s;
    for (int j = 0; j < 3; ++j) {
      s.phi0.push_back({int(rng() % 9) - 4, int(rng() % 9) - 4, n01(rng), n01(rng)});
      s.phi1.push_back({int(rng() % 9) - 4, int(rng() % 9) - 4, n01(rng), n01(rng)});
    }
    const auto d = make_initial_data(c.grid, s);
    for (double t : {0.25, 0.5, 1.0}) {
      const auto f = linear_flow(d, t);
      worst = std::max(worst, slice_norm(f.data(), c.grid, 0.5) / (d.norm0 + d.norm1));
    }
  }
  EXPECT_GT(worst, 0.1);
  EXPECT_LE(worst, M_SQRT2);
}

TEST(GammaMap, TrivialCases) {
  const auto c = small_config();
  const auto zp = objects::zero_path(c.grid, c.grid.nt + 1, c.sobolev.alpha);
  const auto z = zero_data(c.grid);
  const Field w0("w", 0, c.grid, c.grid.nt + 1);
  for (double v : gamma_map(w0, zp, z, 1.0).data) EXPECT_EQ(v, 0.0);

  const auto d = data_with(c.grid, 0.5, 0.0);
  const auto g = gamma_map(w0, zp, d, 1.0);
  const auto lin = linear_flow_field(d, c.grid, c.grid.nt + 1);
  for (std::size_t i = 0; i < g.data.size(); ++i) EXPECT_EQ(g.data[i], lin.data[i]);

  const auto p = objects::build_enhanced_path(c, 3, 4);
  const auto gp = gamma_map(lin, p, d, 1.0);
  EXPECT_LT(max_abs_diff(d.phi0, gp.slice(0)), 1e-13);

  const Field half("w", 0, restricted_grid(c.grid, 17), 17);
  EXPECT_NO_THROW(gamma_map(half, p, d, 0.5));
  EXPECT_THROW(gamma_map(half, p, d, 1.0), ValidationError);
  EXPECT_THROW(gamma_map(half, p, d, 0.51), ValidationError);
  auto other = c;
  other.grid.nx = 48;
  EXPECT_THROW(gamma_map(w0, p, zero_data(other.grid), 1.0), ValidationError);
}

TEST(Picard, ZeroPathSmallData) {
  const auto c = small_config();
  const auto zp = objects::zero_path(c.grid, c.grid.nt + 1, c.sobolev.alpha);
  const auto r = picard_solve(zp, data_with(c.grid, 1e-4, 1e-4), c.solver);
  EXPECT_LE(r.diag.iterations, 3);
  EXPECT_TRUE(r.diag.converged);
  EXPECT_LE(r.diag.residual, c.solver.tol);

  const auto big = picard_solve(zp, data_with(c.grid, 1.0, 0.5), c.solver);
  EXPECT_LE(big.diag.residual, 1e-8);
  EXPECT_LT(big.diag.contraction_ratio, 1.0);
}

TEST(Picard, ContractionShrinksWithT0) {
  auto c = small_config(40);
  const auto p = objects::build_enhanced_path(c, 3, 5);
  const auto d = data_with(c.grid, 0.3, 0.1);
  const auto a = picard_iterate(p, d, 0.1, c.solver);
  EXPECT_LT(a.diag.contraction_ratio, 0.5);
  double prev = INFINITY;
  for (double T : {0.8, 0.4, 0.2}) {
    const auto r = picard_iterate(p, d, T, c.solver);
    EXPECT_LE(r.diag.residual, c.solver.tol);
    EXPECT_LT(r.diag.contraction_ratio, prev);
    prev = r.diag.contraction_ratio;
  }
}

TEST(Picard, HalvesT0OnNoContraction) {
  auto c = small_config();
  const auto zp = objects::zero_path(c.grid, c.grid.nt + 1, c.sobolev.alpha);
  const auto d = data_with(c.grid, 40.0, 0.0);
  const auto r = picard_solve(zp, d, c.solver);
  EXPECT_GT(r.diag.halvings, 0);
  EXPECT_LT(r.diag.t0, 1.0);
  EXPECT_LE(r.diag.residual, c.solver.tol);

  c.solver.max_halvings = 0;
  try {
    picard_solve(zp, d, c.solver);
    FAIL() << "expected NoContraction";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.kind(), "NoContraction");
    EXPECT_NE(e.diagnostics().find("updates"), std::string::npos);
  }
  c.solver.max_iter = 2;
  c.solver.max_halvings = 6;
  try {
    picard_solve(zp, data_with(c.grid, 1.0, 0.0), c.solver);
    FAIL() << "expected MaxIterExceeded";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.kind(), "MaxIterExceeded");
  }
}

TEST(Picard, TwoStartsGiveOneFixedPoint) {
  const auto c = small_config();
  const auto p = objects::build_enhanced_path(c, 3, 6);
  const auto d = data_with(c.grid, 0.5, 0.2);
  const auto a = picard_iterate(p, d, 0.5, c.solver);
  const Field zero("w", 0, restricted_grid(c.grid, 17), 17);
  const auto b = picard_iterate(p, d, 0.5, c.solver, &zero);
  EXPECT_LE(sup_half_norm(difference(a.w, b.w)), 10.0 * c.solver.tol);
}

TEST(Picard, LipschitzInThePath) {
  const auto c = small_config();
  const auto p = objects::build_enhanced_path(c, 3, 5);
  const auto d = data_with(c.grid, 0.5, 0.0);
  const auto base = picard_iterate(p, d, 0.5, c.solver);
  const SobolevSpec spec{c.sobolev.alpha, 4, Window::Bump};
  std::vector<double> consts;
  for (double delta : {1e-2, 1e-3}) {
    auto q = p;
    for (int k = 0; k < 4; ++k)
      for (auto& v : q.component(k).data) v *= 1.0 + delta;
    const auto r = picard_iterate(q, d, 0.5, c.solver);
    EnhancedPath diff = restrict_path(p, 17);
    const auto qr = restrict_path(q, 17);
    for (int k = 0; k < 4; ++k)
      for (std::size_t i = 0; i < diff.component(k).data.size(); ++i)
        diff.component(k).data[i] = qr.component(k).data[i] - diff.component(k).data[i];
    const auto nd = analysis::epath_norm(diff, spec);
    const double dp = *std::max_element(nd.values.begin(), nd.values.end());
    consts.push_back(sup_half_norm(difference(r.w, base.w)) / dp);
  }
  EXPECT_GT(consts[0], 0.0);
  EXPECT_NEAR(consts[1], consts[0], 0.05 * consts[0]);
}

TEST(Reconstruct, Additivity) {
  const auto c = small_config();
  const auto p = objects::build_enhanced_path(c, 3, 8);
  const Field w0("w", 0, c.grid, c.grid.nt + 1);
  const auto u0 = reconstruct_u(p, w0);
  for (std::size_t i = 0; i < u0.data.size(); ++i) EXPECT_EQ(u0.data[i], p.psi.data[i] + p.ipsi2.data[i]);

  const auto zp = objects::zero_path(c.grid, c.grid.nt + 1, c.sobolev.alpha);
  const auto w = linear_flow_field(data_with(c.grid, 0.5, 0.2), c.grid, c.grid.nt + 1);
  const auto uz = reconstruct_u(zp, w);
  for (std::size_t i = 0; i < uz.data.size(); ++i) EXPECT_EQ(uz.data[i], w.data[i]);
  const auto u = reconstruct_u(p, w);
  for (std::size_t i = 0; i < u.data.size(); ++i) EXPECT_EQ(u.data[i], p.psi.data[i] + p.ipsi2.data[i] + w.data[i]);
}

TEST(DirectIntegrator, LinearRegimeIsExact) {
  const auto c = small_config();
  const auto d = data_with(c.grid, 0.5, 0.3);
  DirectOptions lin;
  lin.nonlinear = false;
  lin.noise = false;
  const auto z = integrate_renormalized_pde(c, 3, 1, zero_data(c.grid), 1.0, lin);
  for (double v : z.data) EXPECT_EQ(v, 0.0);

  const auto u = integrate_renormalized_pde(c, 3, 1, d, 1.0, lin);
  const auto flow = linear_flow_field(d, c.grid, c.grid.nt + 1);
  EXPECT_LT(relative_l2(u, flow), 1e-10);

  // With noise the linear solution is the flow plus Psi^n exactly.
  lin.noise = true;
  const auto un = integrate_renormalized_pde(c, 3, 9, d, 1.0, lin);
  const auto psi = objects::build_psi(noise::sample_modes(c, 3, 9), c.grid);
  for (std::size_t i = 0; i < flow.data.size(); ++i) EXPECT_NEAR(un.data[i], flow.data[i] + psi.data[i], 1e-10);
}

TEST(DirectIntegrator, AgreesWithDecomposition) {
  const auto c = small_config();
  const auto d = data_with(c.grid, 0.5, 0.2);
  for (std::uint64_t seed : {1u, 2u}) {
    const auto p = objects::build_enhanced_path(c, 3, seed);
    const auto r = picard_solve(p, d, c.solver);
    const auto u = reconstruct_u(p, r.w);
    const auto direct = integrate_renormalized_pde(c, 3, seed, d, r.diag.t0);
    EXPECT_LT(relative_l2(direct, u), 1e-2);
  }
}

TEST(DirectIntegrator, StabilityAndBlowUp) {
  auto c = small_config(8);
  EXPECT_THROW(integrate_renormalized_pde(c, 3, 1, zero_data(c.grid), 1.0), ValidationError);
  c = small_config();
  DirectOptions opt;
  opt.noise = false;
  opt.blowup = 1e6;
  InitialDataSpec s;
  s.phi0 = {{0, 0, 2e3, 0.0}};
  try {
    integrate_renormalized_pde(c, 3, 1, make_initial_data(c.grid, s), 1.0, opt);
    FAIL() << "expected BlowUp";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.kind(), "BlowUp");
  }
}

TEST(Strichartz, RatioBoundedAndStableInTime) {
  GridSpec g;
  g.level = 3;
  g.nx = 32;
  g.nt = 32;
  const auto a = strichartz_sweep(g, 50, 7);
  g.nt = 64;
  const auto b = strichartz_sweep(g, 50, 7, 2);
  EXPECT_EQ(a.ratios.size(), 50u);
  for (double r : a.ratios) EXPECT_GT(r, 0.0);
  EXPECT_LE(std::abs(b.max_ratio - a.max_ratio), 0.1 * a.max_ratio);
}
