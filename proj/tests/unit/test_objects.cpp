#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fracwave/objects.hpp"

using namespace fracwave;
using namespace fracwave::objects;

namespace {

RunConfig small_config(int level = 3, int nx = 32, int nt = 4) {
  RunConfig c;
  c.hurst = HurstTriple(0.4, 0.4, 0.35);
  c.grid.level = level;
  c.grid.period = 4.0;
  c.grid.nx = nx;
  c.grid.nt = nt;
  c.grid.horizon = 1.0;
  c.sobolev.alpha = default_alpha(c.hurst);
  return c;
}

double x_of(const GridSpec& g, int m) { return -g.period + m * g.dx(); }

// Direct sum over the full mode lattice at one point; independent of the FFT path.
double psi_bruteforce(const noise::ModeSet& top, int level_lo, int level_hi, double t, double x1, double x2) {
  cplx s = 0.0;
  for (const auto& e : top.etas())
    for (const auto& x : top.xis()) {
      const int lv = std::max(e.shell, x.shell);
      if (lv <= level_lo || lv > level_hi) continue;
      const cplx term = top.coeff(x, e) * top.weight(x, e) * kernels::gamma(x.xi, e.rho, t) *
                        std::polar(1.0, M_PI / top.period() * (e.k1 * x1 + e.k2 * x2));
      if (e.k1 == 0 && e.k2 == 0) s += term;
      else s += 2.0 * std::real(term);
    }
  return s.real();
}

} // namespace

TEST(Psi, LevelZeroAndInitialSliceVanish) {
  auto c = small_config();
  auto z = build_psi(noise::sample_modes(c, 0), c.grid);
  for (double v : z.data) ASSERT_EQ(v, 0.0);
  auto p = build_psi(noise::sample_modes(c, 3), c.grid);
  for (std::size_t m = 0; m < p.plane(); ++m) ASSERT_EQ(p.slice(0)[m], 0.0);
}

TEST(Psi, MatchesDirectModeSum) {
  auto c = small_config();
  auto top = noise::sample_modes(c, 3, 5);
  auto fields = build_psi_levels(top, c.grid, {2, 3}, c.grid.nt + 1);
  for (int i : {1, 4})
    for (auto [m1, m2] : {std::pair{0, 0}, std::pair{5, 17}, std::pair{31, 2}}) {
      const double t = i * c.grid.dt(), x1 = x_of(c.grid, m1), x2 = x_of(c.grid, m2);
      EXPECT_NEAR(fields[1].at(i, m1, m2), psi_bruteforce(top, 0, 3, t, x1, x2), 1e-10);
      EXPECT_NEAR(fields[0].at(i, m1, m2), psi_bruteforce(top, 0, 2, t, x1, x2), 1e-10);
      // level difference uses only annulus modes
      EXPECT_NEAR(fields[1].at(i, m1, m2) - fields[0].at(i, m1, m2), psi_bruteforce(top, 2, 3, t, x1, x2), 1e-10);
    }
}

TEST(Psi, NestedSynthesisMatchesSeparateBuild) {
  auto c = small_config(4, 48, 4);
  auto top = noise::sample_modes(c, 4, 3);
  auto both = build_psi_levels(top, c.grid, {2, 4}, c.grid.nt + 1);
  auto lo = build_psi(noise::sample_modes(c, 2, 3), c.grid);
  for (std::size_t k = 0; k < lo.data.size(); ++k) ASSERT_NEAR(both[0].data[k], lo.data[k], 1e-12);
}

TEST(Psi, SynthesizedFieldIsReal) {
  auto c = small_config();
  auto top = noise::sample_modes(c, 3, 11);
  auto spec = synthesize_spectra(top, {3}, {0.5, 1.0});
  std::vector<double> out(c.grid.nx * c.grid.nx);
  fracwave::detail::CBuffer buf;
  spectrum_to_grid(top, spec.values[0][1], c.grid.nx, out.data(), buf);
  double amp = 0, im = 0;
  for (auto v : buf) {
    amp = std::max(amp, std::abs(v.real()));
    im = std::max(im, std::abs(v.imag()));
  }
  EXPECT_GT(amp, 0.0);
  EXPECT_LE(im, 1e-10 * amp);
}

TEST(LatticeVariance, BasicProperties) {
  auto c = small_config(5, 96, 4);
  auto top = noise::sample_modes(c, 5);
  EXPECT_EQ(lattice_variance(top, 0.0), 0.0);
  double prev = 0.0;
  for (int n = 1; n <= 5; ++n) {
    const double v = lattice_variance(noise::sample_modes(c, n), 1.0);
    EXPECT_GT(v, prev);
    prev = v;
  }
  auto tab = variance_table(top, {2, 5}, {0.3, 1.0});
  EXPECT_NEAR(tab[0][1], lattice_variance(noise::sample_modes(c, 2), 1.0), 1e-12 * tab[0][1]);
  EXPECT_NEAR(tab[1][0], lattice_variance(top, 0.3), 1e-12 * tab[1][0]);
}

TEST(LatticeVariance, MatchesDirectModeSum) {
  auto c = small_config(2, 32, 4);
  auto m = noise::sample_modes(c, 2);
  double s = 0;
  for (const auto& e : m.etas())
    for (const auto& x : m.xis()) {
      const double w2 = m.weight(x, e) * m.weight(x, e) * kernels::gamma_abs2(x.xi, e.rho, 0.7);
      s += (e.k1 == 0 && e.k2 == 0) ? w2 : 2.0 * w2;
    }
  EXPECT_NEAR(lattice_variance(m, 0.7), s, 1e-12 * s);
}

TEST(Psi, PointwiseVarianceMatchesLatticeVariance) {
  auto c = small_config(3, 32, 2);
  auto modes0 = noise::sample_modes(c, 3);
  const double var = lattice_variance(modes0, 1.0);
  std::vector<double> x;
  for (int s = 0; s < 600; ++s) {
    auto p = build_psi(noise::sample_modes(c, 3, 1000 + s), c.grid);
    const double v = p.at(2, c.grid.nx / 2, c.grid.nx / 2);
    x.push_back(v * v);
  }
  auto ms = fracwave::detail::mean_se(x);
  EXPECT_NEAR(ms.mean, var, 3.0 * ms.se);
}

TEST(WickSquare, CenteringAndFourthMomentIdentity) {
  auto c = small_config(3, 32, 2);
  const int S = 512;
  const int pts[5][4] = {{16, 16, 16, 16}, {16, 16, 17, 16}, {16, 16, 18, 19}, {3, 7, 5, 9}, {10, 20, 22, 12}};
  std::vector<double> a(S), b(S), prod(S), cov(5 * S), sq(5 * S);
  std::vector<std::vector<double>> pp(5, std::vector<double>(S)), ww(5, std::vector<double>(S)), wm(S);
  for (int s = 0; s < S; ++s) {
    auto modes = noise::sample_modes(c, 3, 7000 + s);
    auto psi = build_psi(modes, c.grid);
    auto w = wick_square(psi, modes);
    wm[s] = {w.at(2, 16, 16)};
    for (int k = 0; k < 5; ++k) {
      pp[k][s] = psi.at(2, pts[k][0], pts[k][1]) * psi.at(2, pts[k][2], pts[k][3]);
      ww[k][s] = w.at(2, pts[k][0], pts[k][1]) * w.at(2, pts[k][2], pts[k][3]);
    }
  }
  std::vector<double> m0(S);
  for (int s = 0; s < S; ++s) m0[s] = wm[s][0];
  auto mean = fracwave::detail::mean_se(m0);
  EXPECT_LE(std::abs(mean.mean), 3.0 * mean.se);
  for (int k = 0; k < 5; ++k) {
    auto cpsi = fracwave::detail::mean_se(pp[k]);
    auto cw = fracwave::detail::mean_se(ww[k]);
    const double target = 2.0 * cpsi.mean * cpsi.mean;
    // delta-method SE of the target combined with the SE of the direct estimate
    const double se = std::hypot(cw.se, 4.0 * std::abs(cpsi.mean) * cpsi.se);
    EXPECT_NEAR(cw.mean, target, 3.0 * se) << "pair " << k;
  }
}

TEST(Duhamel, ZeroSourceAndZeroMode) {
  auto c = small_config(2, 16, 8);
  Field z("f", 2, c.grid, c.grid.nt + 1);
  auto out = duhamel_convolve(z);
  for (double v : out.data) ASSERT_EQ(v, 0.0);
  Field k = z;
  std::fill(k.data.begin(), k.data.end(), 2.5);
  auto o2 = duhamel_convolve(k);
  for (int i = 0; i <= c.grid.nt; ++i) {
    const double t = i * c.grid.dt();
    EXPECT_NEAR(o2.at(i, 3, 5), 2.5 * t * t / 2.0, 1e-13);
  }
}

namespace {

double single_mode_error(int nt) {
  RunConfig c = small_config(2, 16, nt);
  Field f("f", 2, c.grid, nt + 1);
  const int k1 = 2, k2 = 1;
  const double eta = M_PI / c.grid.period * std::sqrt(double(k1 * k1 + k2 * k2));
  for (int i = 0; i <= nt; ++i)
    for (int a = 0; a < 16; ++a)
      for (int b = 0; b < 16; ++b) {
        const double x1 = -4.0 + a * c.grid.dx(), x2 = -4.0 + b * c.grid.dx();
        f.at(i, a, b) = std::cos(M_PI / 4.0 * (k1 * x1 + k2 * x2));
      }
  auto out = duhamel_convolve(f);
  double err = 0;
  for (int i = 0; i <= nt; ++i) {
    const double t = i * c.grid.dt(), amp = (1.0 - std::cos(t * eta)) / (eta * eta);
    for (int a = 0; a < 16; ++a)
      for (int b = 0; b < 16; ++b)
        err = std::max(err, std::abs(out.at(i, a, b) - amp * f.at(0, a, b)));
  }
  return err;
}

} // namespace

TEST(Duhamel, SecondOrderInTime) {
  const double e1 = single_mode_error(8), e2 = single_mode_error(16), e3 = single_mode_error(32);
  EXPECT_LT(e1, 1e-2);
  EXPECT_GE(e1 / e2, 3.5);
  EXPECT_GE(e2 / e3, 3.5);
}

TEST(Product, ZeroAndCommutation) {
  auto c = small_config(2, 16, 2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Field a("a", 2, c.grid, 3), b("b", 2, c.grid, 3), z("z", 2, c.grid, 3);
  for (auto& v : a.data) v = g(rng);
  for (auto& v : b.data) v = g(rng);
  auto ab = dealiased_product(a, b, "ab"), ba = dealiased_product(b, a, "ba"), az = dealiased_product(a, z, "az");
  for (std::size_t i = 0; i < ab.data.size(); ++i) {
    ASSERT_NEAR(ab.data[i], ba.data[i], 1e-13);
    ASSERT_EQ(az.data[i], 0.0);
  }
}

TEST(Product, SingleModesAreExactAndHighSumsAreRemoved) {
  const int nx = 16, P = nx * nx;
  using fracwave::detail::bin_of;
  for (auto [k, kp] : {std::pair{std::array{1, 2}, std::array{3, -4}}, std::pair{std::array{-7, 0}, std::array{2, 5}},
                       std::pair{std::array{5, 5}, std::array{4, 1}}}) {
    fracwave::detail::CBuffer a(P, 0.0), b(P, 0.0), o(P);
    a[bin_of(k[0], nx) * nx + bin_of(k[1], nx)] = 1.0;
    b[bin_of(kp[0], nx) * nx + bin_of(kp[1], nx)] = 1.0;
    dealiased_product_spectrum(a.data(), b.data(), nx, o.data());
    const int s1 = k[0] + kp[0], s2 = k[1] + kp[1];
    const bool resolvable = std::abs(s1) < nx / 2 && std::abs(s2) < nx / 2;
    for (int i = 0; i < P; ++i) {
      const bool target = resolvable && i == bin_of(s1, nx) * nx + bin_of(s2, nx);
      ASSERT_NEAR(std::abs(o[i]), target ? 1.0 : 0.0, 1e-13) << i;
    }
  }
}

TEST(Product, ThirdOrderLevelCheck) {
  auto c = small_config(2, 16, 2);
  Field a("ipsi2", 2, c.grid, 3), b("psi", 3, c.grid, 3);
  EXPECT_THROW(third_order(a, b), ValidationError);
}

TEST(EnhancedPath, LevelZeroAndDeterminism) {
  auto c = small_config(3, 32, 4);
  auto z = build_enhanced_path(c, 0, 1);
  for (int k = 0; k < 4; ++k)
    for (double v : z.component(k).data) ASSERT_EQ(v, 0.0);
  auto p1 = build_enhanced_path(c, 3, 17), p2 = build_enhanced_path(c, 3, 17, 3);
  for (int k = 0; k < 4; ++k) ASSERT_EQ(p1.component(k).data, p2.component(k).data);
  for (std::size_t m = 0; m < p1.psi.plane(); ++m) {
    ASSERT_EQ(p1.psi.slice(0)[m], 0.0);
    ASSERT_EQ(p1.ipsi2.slice(0)[m], 0.0);
  }
}

TEST(EnhancedPath, NestedBuildMatchesSingleBuilds) {
  auto c = small_config(3, 32, 4);
  auto both = build_enhanced_paths(c, {2, 3}, 21);
  auto single = build_enhanced_path(c, 2, 21);
  for (int k = 0; k < 4; ++k)
    for (std::size_t i = 0; i < single.component(k).data.size(); ++i)
      ASSERT_NEAR(both[0].component(k).data[i], single.component(k).data[i], 1e-11);
}

TEST(FieldSnapshot, RoundTrip) {
  auto c = small_config(2, 16, 2);
  auto p = build_psi(noise::sample_modes(c, 2, 4), c.grid);
  const auto bytes = encode_field_snapshot(p);
  EXPECT_EQ(bytes.substr(0, 4), "FWAV");
  auto q = decode_field_snapshot(bytes);
  EXPECT_EQ(q.label, "psi");
  EXPECT_EQ(q.data, p.data);
  EXPECT_EQ(q.grid.nx, 16);
}
