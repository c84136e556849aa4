#ifndef FRACWAVE_SOLVER_HPP
#define FRACWAVE_SOLVER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "core.hpp"
#include "detail/fft.hpp"
#include "detail/parallel.hpp"
#include "kernels.hpp"
#include "noise.hpp"
#include "objects.hpp"

namespace fracwave::solver {

using cplx = std::complex<double>;
using fracwave::detail::CBuffer;
using fracwave::detail::Fft2;
using objects::EnhancedPath;
using objects::Field;

// Radial bump: 1 on |x| <= 1, 0 on |x| >= 2.
inline double cutoff_rho(std::array<double, 2> x) { return 1.0 - analysis::smooth_step(std::hypot(x[0], x[1]) - 1.0); }

inline std::vector<double> cutoff_plane(const GridSpec& g) {
  std::vector<double> r(std::size_t(g.nx) * g.nx);
  for (int m1 = 0; m1 < g.nx; ++m1)
    for (int m2 = 0; m2 < g.nx; ++m2)
      r[std::size_t(m1) * g.nx + m2] =
          cutoff_rho({analysis::detail::grid_coord(g, m1), analysis::detail::grid_coord(g, m2)});
  return r;
}

// ---------------------------------------------------------------------------
// Spectral helpers on one slice.

inline CBuffer to_spectrum(const double* f, int nx) {
  const std::size_t P = std::size_t(nx) * nx;
  CBuffer b(P);
  const double norm = 1.0 / double(P);
  for (std::size_t i = 0; i < P; ++i) b[i] = f[i] * norm;
  Fft2::get(nx).forward(b.data());
  return b;
}

inline void from_spectrum(CBuffer b, int nx, double* out) {
  Fft2::get(nx).backward(b.data());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = b[i].real();
}

// Norm in W^{order,2} of the periodic cell (no spatial window).
inline double slice_norm(const double* f, const GridSpec& g, double order) {
  return analysis::sobolev_norm(f, g, order, 2, Window::One);
}

// ---------------------------------------------------------------------------
// Initial data.

struct InitialData {
  GridSpec grid;
  std::vector<double> phi0, phi1;
  double norm0 = 0.0;  // W^{1/2,2}
  double norm1 = 0.0;  // W^{-1/2,2}
};

inline InitialData make_initial_data(const GridSpec& g, std::vector<double> phi0, std::vector<double> phi1) {
  const std::size_t P = std::size_t(g.nx) * g.nx;
  if (phi0.empty()) phi0.assign(P, 0.0);
  if (phi1.empty()) phi1.assign(P, 0.0);
  if (phi0.size() != P || phi1.size() != P) throw ValidationError(IssueCode::InvalidGrid, "initial data: wrong slice size");
  InitialData d;
  d.grid = g;
  d.phi0 = std::move(phi0);
  d.phi1 = std::move(phi1);
  d.norm0 = slice_norm(d.phi0.data(), g, 0.5);
  d.norm1 = slice_norm(d.phi1.data(), g, -0.5);
  if (!std::isfinite(d.norm0) || !std::isfinite(d.norm1))
    throw ValidationError(IssueCode::InvalidConfig, "initial data: norms are not finite");
  return d;
}

inline std::vector<double> modes_to_plane(const std::vector<InitialMode>& modes, const GridSpec& g) {
  std::vector<double> f(std::size_t(g.nx) * g.nx, 0.0);
  const double de = g.eta_step();
  for (const auto& m : modes) {
    if (2 * std::abs(m.k1) >= g.nx || 2 * std::abs(m.k2) >= g.nx)
      throw ValidationError(IssueCode::NyquistViolation, "initial data: mode above the grid Nyquist frequency");
    for (int m1 = 0; m1 < g.nx; ++m1)
      for (int m2 = 0; m2 < g.nx; ++m2) {
        const double x1 = analysis::detail::grid_coord(g, m1), x2 = analysis::detail::grid_coord(g, m2);
        f[std::size_t(m1) * g.nx + m2] += m.amp * std::cos(de * (m.k1 * x1 + m.k2 * x2) + m.phase);
      }
  }
  return f;
}

inline InitialData make_initial_data(const GridSpec& g, const InitialDataSpec& spec) {
  return make_initial_data(g, modes_to_plane(spec.phi0, g), modes_to_plane(spec.phi1, g));
}

inline InitialData zero_data(const GridSpec& g) { return make_initial_data(g, {}, {}); }

// cos(t|lam|) phi0-hat + sin(t|lam|)/|lam| phi1-hat, per mode.
inline std::vector<double> linear_flow(const InitialData& data, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ValidationError(IssueCode::InvalidConfig, "linear_flow: t must lie in [0, 1]");
  const int nx = data.grid.nx;
  auto a = to_spectrum(data.phi0.data(), nx);
  const auto b = to_spectrum(data.phi1.data(), nx);
  for (int i1 = 0; i1 < nx; ++i1)
    for (int i2 = 0; i2 < nx; ++i2) {
      const std::size_t k = std::size_t(i1) * nx + i2;
      const double lam = objects::bin_radius(i1, i2, nx, data.grid.period);
      a[k] = std::cos(t * lam) * a[k] + kernels::wave_multiplier(t, lam) * b[k];
    }
  std::vector<double> out(a.size());
  from_spectrum(std::move(a), nx, out.data());
  return out;
}

// ---------------------------------------------------------------------------
// Time restriction: the solver works on [0, T0] with the grid's time step.

inline int slices_for(const GridSpec& g, double T) {
  const double k = T / g.dt();
  const int ks = int(std::lround(k));
  if (!(T > 0.0) || T > g.horizon * (1.0 + 1e-12) || std::abs(k - ks) > 1e-9 * std::max(1.0, k) || ks < 1)
    throw ValidationError(IssueCode::InvalidGrid, "time " + std::to_string(T) + " is not a positive multiple of dt within the horizon");
  return ks + 1;
}

// Largest lattice time <= T (at least one step).
inline double snap_time(const GridSpec& g, double T) {
  const int k = std::max(1, int(std::floor(T / g.dt() + 1e-9)));
  return std::min(k * g.dt(), g.horizon);
}

inline GridSpec restricted_grid(const GridSpec& g, int slices) {
  GridSpec r = g;
  r.horizon = (slices - 1) * g.dt();
  r.nt = slices - 1;
  return r;
}

inline Field restrict_field(const Field& f, int slices) {
  if (slices > f.slices) throw ValidationError(IssueCode::InvalidGrid, "restrict_field: not enough slices");
  Field out(f.label, f.level, restricted_grid(f.grid, slices), slices);
  std::copy(f.data.begin(), f.data.begin() + std::ptrdiff_t(slices * f.plane()), out.data.begin());
  return out;
}

inline EnhancedPath restrict_path(const EnhancedPath& p, int slices) {
  EnhancedPath out;
  out.alpha = p.alpha;
  out.norms = p.norms;
  for (int c = 0; c < 4; ++c) out.component(c) = restrict_field(p.component(c), slices);
  out.variance.assign(p.variance.begin(), p.variance.begin() + std::min<std::ptrdiff_t>(slices, p.variance.size()));
  return out;
}

inline Field linear_flow_field(const InitialData& data, const GridSpec& g, int slices) {
  Field f("linear", 0, g, slices);
  for (int i = 0; i < slices; ++i) {
    const auto s = linear_flow(data, i * g.dt());
    std::copy(s.begin(), s.end(), f.slice(i));
  }
  return f;
}

// sup over slices of the W^{1/2,2} norm.
inline double sup_half_norm(const Field& f, int threads = 1) {
  std::vector<double> v(f.slices);
  fracwave::detail::parallel_for(std::size_t(f.slices), threads,
                                 [&](std::size_t i) { v[i] = slice_norm(f.slice(int(i)), f.grid, 0.5); });
  double m = 0.0;
  for (double x : v) m = std::max(m, std::isfinite(x) ? x : INFINITY);
  return m;
}

inline Field difference(const Field& a, const Field& b) {
  objects::require_same_grid(a, b, "difference");
  Field d = Field::zeros_like(a, "difference");
  for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] = a.data[i] - b.data[i];
  return d;
}

// ---------------------------------------------------------------------------
// The map Gamma.

inline void check_solver_grid(const GridSpec& a, const GridSpec& b, const char* who) {
  if (a.nx != b.nx || a.period != b.period) throw ValidationError(IssueCode::InvalidGrid, std::string(who) + ": grid mismatch");
}

// Nonlinear source rho^2 [(w + I Psi2)^2 + 2 w Psi + 2 Psi I Psi2]; products dealiased.
inline Field gamma_source(const Field& w, const EnhancedPath& p, int threads = 1) {
  Field out = Field::zeros_like(w, "source");
  const auto r = cutoff_plane(w.grid);
  const int nx = w.nx();
  const std::size_t P = w.plane();
  fracwave::detail::parallel_for(std::size_t(w.slices), threads, [&](std::size_t i) {
    const double* ws = w.slice(int(i));
    const double* is = p.ipsi2.slice(int(i));
    const double* ps = p.psi.slice(int(i));
    const double* ts = p.psi_ipsi2.slice(int(i));
    std::vector<double> v(P), sq(P), cross(P);
    for (std::size_t m = 0; m < P; ++m) v[m] = ws[m] + is[m];
    objects::dealiased_product(v.data(), v.data(), nx, sq.data());
    objects::dealiased_product(ws, ps, nx, cross.data());
    double* o = out.slice(int(i));
    for (std::size_t m = 0; m < P; ++m) o[m] = r[m] * r[m] * (sq[m] + 2.0 * cross[m] + 2.0 * ts[m]);
  });
  return out;
}

// Gamma(w) on [0, T]: linear flow plus the Duhamel integral of the source.
// w must live on the grid restricted to [0, T].
inline Field gamma_map(const Field& w, const EnhancedPath& path, const InitialData& data, double T, int threads = 1) {
  check_solver_grid(w.grid, path.psi.grid, "gamma_map");
  check_solver_grid(w.grid, data.grid, "gamma_map");
  const int ns = slices_for(path.psi.grid, T);
  if (w.slices != ns) throw ValidationError(IssueCode::InvalidGrid, "gamma_map: w does not cover [0, T]");
  const auto p = restrict_path(path, ns);
  objects::require_same_grid(w, p.psi, "gamma_map");
  auto out = objects::duhamel_convolve(gamma_source(w, p, threads), threads);
  const auto lin = linear_flow_field(data, w.grid, ns);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += lin.data[i];
  out.label = "gamma";
  return out;
}

// ---------------------------------------------------------------------------
// Picard iteration.

struct PicardDiagnostics {
  int iterations = 0;
  std::vector<double> updates;  // ||w_{k+1} - w_k|| in L^inf_T W^{1/2,2}
  std::vector<double> ratios;   // updates[k] / updates[k-1]
  double contraction_ratio = 0.0;
  double residual = 0.0;  // ||w - Gamma(w)||
  double t0 = 0.0;
  int halvings = 0;
  bool converged = false;

  nlohmann::json to_json() const {
    return {{"iterations", iterations}, {"updates", updates},     {"ratios", ratios},
            {"contraction_ratio", contraction_ratio},             {"residual", residual},
            {"t0", t0},                 {"halvings", halvings},   {"converged", converged}};
  }
};

struct PicardResult {
  Field w;
  PicardDiagnostics diag;
};

inline constexpr int kNoContractionRun = 3;

// Fixed-point iteration at fixed T0 from `start` (default: the linear flow).
inline PicardResult picard_iterate(const EnhancedPath& path, const InitialData& data, double T0, const SolverOptions& opt,
                                   const Field* start = nullptr, int threads = 1) {
  const int ns = slices_for(path.psi.grid, T0);
  const GridSpec g = restricted_grid(path.psi.grid, ns);
  PicardResult res;
  res.diag.t0 = T0;
  Field w = start ? *start : linear_flow_field(data, g, ns);
  if (w.slices != ns) throw ValidationError(IssueCode::InvalidGrid, "picard: starting iterate does not cover [0, T0]");
  int run = 0;
  for (int k = 1; k <= opt.max_iter; ++k) {
    Field next = gamma_map(w, path, data, T0, threads);
    const double d = sup_half_norm(difference(next, w), threads);
    res.diag.iterations = k;
    res.diag.updates.push_back(d);
    if (res.diag.updates.size() >= 2) {
      const double prev = res.diag.updates[res.diag.updates.size() - 2];
      const double r = prev > 0.0 ? d / prev : 0.0;
      res.diag.ratios.push_back(r);
      res.diag.contraction_ratio = std::max(res.diag.contraction_ratio, r);
      run = r >= 1.0 ? run + 1 : 0;
    }
    if (!std::isfinite(d) || run >= kNoContractionRun)
      throw NumericalError("NoContraction", "Picard updates stopped contracting at T0 = " + std::to_string(T0),
                           res.diag.to_json().dump());
    w = std::move(next);
    if (d <= opt.tol) {
      res.diag.residual = sup_half_norm(difference(w, gamma_map(w, path, data, T0, threads)), threads);
      res.diag.converged = true;
      res.w = std::move(w);
      res.w.label = "w";
      return res;
    }
  }
  throw NumericalError("MaxIterExceeded", "Picard iteration did not reach tol in " + std::to_string(opt.max_iter) + " steps",
                       res.diag.to_json().dump());
}

// Picard iteration with T0 halved on NoContraction, up to opt.max_halvings times.
inline PicardResult picard_solve(const EnhancedPath& path, const InitialData& data, const SolverOptions& opt, int threads = 1) {
  double T0 = snap_time(path.psi.grid, opt.t0);
  for (int h = 0;; ++h) {
    try {
      auto r = picard_iterate(path, data, T0, opt, nullptr, threads);
      r.diag.halvings = h;
      return r;
    } catch (const NumericalError& e) {
      if (e.kind() != "NoContraction" || h >= opt.max_halvings) throw;
      const double next = snap_time(path.psi.grid, 0.5 * T0);
      if (next >= T0) throw;
      T0 = next;
    }
  }
}

// u = Psi + I Psi2 + w on the slices covered by w.
inline Field reconstruct_u(const EnhancedPath& path, const Field& w) {
  check_solver_grid(w.grid, path.psi.grid, "reconstruct_u");
  const auto p = restrict_path(path, w.slices);
  objects::require_same_grid(w, p.psi, "reconstruct_u");
  Field u = Field::zeros_like(w, "u");
  u.level = p.psi.level;
  for (std::size_t i = 0; i < u.data.size(); ++i) u.data[i] = p.psi.data[i] + p.ipsi2.data[i] + w.data[i];
  return u;
}

// ---------------------------------------------------------------------------
// Direct integrator for the renormalized equation
//   u_tt - Lap u = rho^2 u^2 - sigma^n + (1 - rho^2) Psi^2 + noise.
// Two-step Gautschi scheme per Fourier mode; the noise enters through exact
// increments of Psi^n between steps.

struct DirectOptions {
  bool nonlinear = true;
  bool noise = true;
  double blowup = 1e8;  // abort when sup |u| exceeds this
};

inline Field integrate_renormalized_pde(const RunConfig& cfg, int n, std::uint64_t seed, const InitialData& data, double T,
                                       const DirectOptions& opt = {}, int threads = 1) {
  const GridSpec& g = cfg.grid;
  check_solver_grid(g, data.grid, "integrate_renormalized_pde");
  const double h = g.dt();
  if (h * std::ldexp(1.0, n) > 0.5 + 1e-12)
    throw ValidationError(IssueCode::InvalidGrid, "integrate_renormalized_pde: dt * 2^n = " +
                                                      std::to_string(h * std::ldexp(1.0, n)) + " exceeds 1/2");
  const int ns = slices_for(g, T), nx = g.nx;
  const std::size_t P = std::size_t(nx) * nx;
  const GridSpec rg = restricted_grid(g, ns);

  Field psi("psi", n, rg, ns);
  std::vector<double> sigma(ns, 0.0);
  if (opt.noise && n > 0) {
    const auto modes = noise::sample_modes(cfg, n, seed);
    psi = restrict_field(objects::build_psi(modes, g, threads), ns);
    psi.level = n;
    sigma = objects::lattice_variance_slices(modes, n, rg, ns);
  }
  const auto psi_hat = objects::forward_slices(psi, threads);
  const auto r = cutoff_plane(g);

  std::vector<double> lam(P), c(P), gw(P), g0(P);
  for (int i1 = 0; i1 < nx; ++i1)
    for (int i2 = 0; i2 < nx; ++i2) {
      const std::size_t k = std::size_t(i1) * nx + i2;
      lam[k] = objects::bin_radius(i1, i2, nx, g.period);
      c[k] = std::cos(h * lam[k]);
      const double s = kernels::detail::sinc(0.5 * h * lam[k]);
      gw[k] = h * h * s * s;  // 2 (1 - cos(h lam)) / lam^2
      g0[k] = 0.5 * gw[k];    // (1 - cos(h lam)) / lam^2
    }

  // Spectrum of the right side at slice i from the grid values of u.
  std::vector<double> psq(P), usq(P);
  auto rhs = [&](const double* u, int i) {
    CBuffer out(P, cplx(0.0));
    if (!opt.nonlinear) return out;
    std::vector<double> f(P);
    objects::dealiased_product(u, u, nx, usq.data());
    objects::dealiased_product(psi.slice(i), psi.slice(i), nx, psq.data());
    for (std::size_t m = 0; m < P; ++m) f[m] = r[m] * r[m] * usq[m] + (1.0 - r[m] * r[m]) * psq[m] - sigma[i];
    return to_spectrum(f.data(), nx);
  };

  Field u("u", n, rg, ns);
  std::copy(data.phi0.begin(), data.phi0.end(), u.slice(0));
  auto check = [&](int i) {
    double m = 0.0;
    for (std::size_t k = 0; k < P; ++k) m = std::max(m, std::abs(u.slice(i)[k]));
    if (!(m <= opt.blowup)) {
      nlohmann::json d{{"step", i}, {"time", i * h}, {"sup", std::isfinite(m) ? m : -1.0}, {"threshold", opt.blowup}};
      throw NumericalError("BlowUp", "direct integrator: field norm above threshold at t = " + std::to_string(i * h), d.dump());
    }
  };

  CBuffer prev = to_spectrum(data.phi0.data(), nx), cur(P);
  {
    const auto p1 = to_spectrum(data.phi1.data(), nx);
    const auto N = rhs(u.slice(0), 0);
    for (std::size_t k = 0; k < P; ++k)
      cur[k] = c[k] * prev[k] + kernels::wave_multiplier(h, lam[k]) * p1[k] + g0[k] * N[k] + psi_hat[1][k] - psi_hat[0][k];
    from_spectrum(cur, nx, u.slice(1));
    check(1);
  }
  for (int i = 1; i + 1 < ns; ++i) {
    const auto N = rhs(u.slice(i), i);
    CBuffer next(P);
    for (std::size_t k = 0; k < P; ++k)
      next[k] = 2.0 * c[k] * cur[k] - prev[k] + gw[k] * N[k] +
                (psi_hat[i + 1][k] - 2.0 * c[k] * psi_hat[i][k] + psi_hat[i - 1][k]);
    from_spectrum(next, nx, u.slice(i + 1));
    check(i + 1);
    prev = std::move(cur);
    cur = std::move(next);
  }
  return u;
}

// Relative L^2 distance over all slices.
inline double relative_l2(const Field& a, const Field& b) {
  objects::require_same_grid(a, b, "relative_l2");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    num += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    den += b.data[i] * b.data[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// ---------------------------------------------------------------------------
// Strichartz-type ratio ||G * f||_{L^inf W^{1/2,2}} / ||f||_{L^1 W^{-1/2,2}}.

inline double strichartz_ratio(const Field& f, int threads = 1) {
  const auto Gf = objects::duhamel_convolve(f, threads);
  std::vector<double> nf(f.slices);
  fracwave::detail::parallel_for(std::size_t(f.slices), threads,
                                 [&](std::size_t i) { nf[i] = slice_norm(f.slice(int(i)), f.grid, -0.5); });
  double l1 = 0.0;
  for (int i = 1; i < f.slices; ++i) l1 += 0.5 * f.dt() * (nf[i - 1] + nf[i]);
  if (!(l1 > 0.0)) throw NumericalError("DegenerateSource", "strichartz_ratio: source has zero norm");
  return sup_half_norm(Gf, threads) / l1;
}

struct SourceMode {
  int k1 = 0, k2 = 0;
  double amp = 0.0, phase = 0.0, omega = 0.0, tphase = 0.0;
};

// Random source: a few spatial modes, each with a cos(omega t + theta) time profile.
// The draw depends only on the seed, so the same source can be sampled on any grid.
inline std::vector<SourceMode> random_source(std::uint64_t seed, int kmax, double omega_max) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(1, 4), kd(-kmax, kmax);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> n01;
  std::vector<SourceMode> s(count(rng));
  for (auto& m : s) {
    m.k1 = kd(rng);
    m.k2 = kd(rng);
    m.amp = n01(rng);
    m.phase = 2.0 * M_PI * u01(rng);
    m.omega = omega_max * u01(rng);
    m.tphase = 2.0 * M_PI * u01(rng);
  }
  return s;
}

inline Field source_field(const std::vector<SourceMode>& modes, const GridSpec& g) {
  Field f("source", 0, g, g.nt + 1);
  const double de = g.eta_step();
  for (int i = 0; i < f.slices; ++i) {
    const double t = i * g.dt();
    for (const auto& m : modes) {
      const double a = m.amp * std::cos(m.omega * t + m.tphase);
      for (int m1 = 0; m1 < g.nx; ++m1)
        for (int m2 = 0; m2 < g.nx; ++m2)
          f.at(i, m1, m2) += a * std::cos(de * (m.k1 * analysis::detail::grid_coord(g, m1) +
                                                m.k2 * analysis::detail::grid_coord(g, m2)) +
                                          m.phase);
    }
  }
  return f;
}

struct StrichartzSweep {
  std::vector<double> ratios;
  double max_ratio = 0.0;
};

inline StrichartzSweep strichartz_sweep(const GridSpec& g, int count, std::uint64_t seed, int threads = 1) {
  const int kmax = g.nx / 4;
  const double omega_max = 2.0 * g.eta_step() * kmax * M_SQRT2;
  StrichartzSweep s;
  s.ratios.assign(count, 0.0);
  fracwave::detail::parallel_for(std::size_t(count), threads, [&](std::size_t i) {
    const auto modes = random_source(analysis::sample_seed(seed, i), kmax, omega_max);
    s.ratios[i] = strichartz_ratio(source_field(modes, g));
  });
  for (double r : s.ratios) s.max_ratio = std::max(s.max_ratio, r);
  return s;
}

} // namespace fracwave::solver

#endif
