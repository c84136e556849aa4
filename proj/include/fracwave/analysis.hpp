#ifndef FRACWAVE_ANALYSIS_HPP
#define FRACWAVE_ANALYSIS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "core.hpp"
#include "detail/fft.hpp"
#include "detail/parallel.hpp"
#include "detail/quadrature.hpp"
#include "kernels.hpp"
#include "noise.hpp"
#include "objects.hpp"

namespace fracwave::analysis {

using cplx = std::complex<double>;
using fracwave::detail::CBuffer;
using fracwave::detail::Fft2;
using fracwave::detail::MeanSe;
using objects::EnhancedPath;
using objects::Field;
using objects::NormRecord;

// C-infinity step: 0 for u <= 0, 1 for u >= 1.
inline double smooth_step(double u) {
  auto f = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
  const double a = f(u), b = f(1.0 - u);
  return a / (a + b);
}

// Radial window: 1 on |x| <= 2, 0 on |x| >= 3.
inline double window_value(double r, Window w) {
  if (w == Window::One) return 1.0;
  return 1.0 - smooth_step(r - 2.0);
}

inline constexpr double kWindowSupport = 3.0;

namespace detail {

inline double grid_coord(const GridSpec& g, int m) { return -g.period + m * g.dx(); }

inline void check_norm_args(const GridSpec& g, int p, Window w) {
  if (p != 2 && p != 4) throw ValidationError(IssueCode::InvalidSobolev, "sobolev_norm: p must be 2 or 4");
  if (w == Window::Bump && g.period < kWindowSupport)
    throw ValidationError(IssueCode::InvalidGrid, "sobolev_norm: window support exceeds the periodization cell");
}

// Normalized spectrum of a real slice times the Bessel multiplier (1+|lambda|^2)^{order/2}.
inline void weighted_spectrum(const double* f, const GridSpec& g, double order, Window w, CBuffer& buf) {
  const int nx = g.nx;
  const std::size_t P = std::size_t(nx) * nx;
  buf.resize(P);
  const double norm = 1.0 / double(P);
  for (int m1 = 0; m1 < nx; ++m1) {
    const double x1 = grid_coord(g, m1);
    for (int m2 = 0; m2 < nx; ++m2) {
      const double chi = window_value(std::hypot(x1, grid_coord(g, m2)), w);
      buf[std::size_t(m1) * nx + m2] = chi * f[std::size_t(m1) * nx + m2] * norm;
    }
  }
  Fft2::get(nx).forward(buf.data());
  if (order == 0.0) return;
  for (int i1 = 0; i1 < nx; ++i1)
    for (int i2 = 0; i2 < nx; ++i2) {
      const double lam = objects::bin_radius(i1, i2, nx, g.period);
      buf[std::size_t(i1) * nx + i2] *= std::pow(1.0 + lam * lam, 0.5 * order);
    }
}

} // namespace detail

// || F^{-1}((1+|lambda|^2)^{order/2} F(chi f)) ||_{L^p} on the periodization cell.
inline double sobolev_norm(const double* slice, const GridSpec& g, double order, int p, Window w = Window::Bump) {
  detail::check_norm_args(g, p, w);
  CBuffer buf;
  detail::weighted_spectrum(slice, g, order, w, buf);
  Fft2::get(g.nx).backward(buf.data());
  double sum = 0.0;
  for (const auto& v : buf) {
    const double a = std::abs(v.real());
    sum += p == 2 ? a * a : (a * a) * (a * a);
  }
  const double cell = g.dx() * g.dx();
  return std::pow(sum * cell, 1.0 / p);
}

inline double sobolev_norm(const std::vector<double>& slice, const GridSpec& g, double order, int p,
                           Window w = Window::Bump) {
  if (slice.size() != std::size_t(g.nx) * g.nx) throw Error("sobolev_norm: slice size does not match the grid");
  return sobolev_norm(slice.data(), g, order, p, w);
}

// Per component: max over time slices of the Sobolev norm at the component's order.
inline NormRecord epath_norm(const EnhancedPath& path, const SobolevSpec& spec, int threads = 1) {
  NormRecord r;
  r.alpha = spec.alpha;
  r.p = spec.p;
  r.orders = objects::component_orders(spec.alpha);
  for (int c = 0; c < 4; ++c) {
    const Field& f = path.component(c);
    std::vector<double> vals(f.slices, 0.0);
    fracwave::detail::parallel_for(std::size_t(f.slices), threads, [&](std::size_t i) {
      vals[i] = sobolev_norm(f.slice(int(i)), f.grid, r.orders[c], spec.p, spec.window);
    });
    for (double v : vals) r.values[c] = std::max(r.values[c], v);
  }
  r.filled = true;
  return r;
}

// ---------------------------------------------------------------------------
// Monte-Carlo moments of level/time increments.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Seed of the i-th Monte-Carlo sample drawn from a base seed.
inline std::uint64_t sample_seed(std::uint64_t base, std::uint64_t i) { return splitmix64(splitmix64(base) + i); }

enum class Estimator {
  Point,        // value at the grid point nearest x
  SpatialMean,  // average over the cell; same expectation by stationarity, lower variance
};

struct IncrementRow {
  int component = 0;
  int n = 0, m = 0;
  double s = 0.0, t = 0.0;
  MeanSe estimate;
};

namespace detail {

inline int slice_index(const GridSpec& g, double t) {
  const double q = t / g.dt();
  const int i = int(std::lround(q));
  if (i < 0 || i > g.nt || std::abs(q - i) > 1e-9)
    throw ValidationError(IssueCode::InvalidGrid, "time " + std::to_string(t) + " is not on the time lattice");
  return i;
}

inline int point_index(const GridSpec& g, double x) {
  const int m = int(std::lround((x + g.period) / g.dx()));
  return ((m % g.nx) + g.nx) % g.nx;
}

// Per component and level: the slice difference tau^n_t - tau^n_s.
using Increments = std::vector<std::array<std::vector<double>, 4>>;

inline Increments level_increments(const RunConfig& cfg, const std::vector<int>& levels, int is, int it,
                                   std::uint64_t seed) {
  const std::size_t P = std::size_t(cfg.grid.nx) * cfg.grid.nx;
  Increments out(levels.size());
  std::vector<int> positive;
  for (int n : levels)
    if (n > 0) positive.push_back(n);
  if (!positive.empty()) {
    const int slices = it + 1;
    const auto top = noise::sample_modes(cfg, positive.back(), seed);
    const auto times = objects::grid_times(cfg.grid, slices);
    const auto spec = objects::synthesize_spectra(top, positive, times, 1);
    const auto var = objects::variance_table(top, positive, times);
    GridSpec g = cfg.grid;
    for (std::size_t b = 0; b < positive.size(); ++b) {
      Field psi("psi", positive[b], g, slices);
      CBuffer buf;
      for (int i = 0; i < slices; ++i) objects::spectrum_to_grid(top, spec.values[b][i], g.nx, psi.slice(i), buf);
      const auto path = objects::assemble_path(std::move(psi), var[b], cfg.sobolev.alpha, 1);
      const std::size_t slot = std::size_t(std::find(levels.begin(), levels.end(), positive[b]) - levels.begin());
      for (int c = 0; c < 4; ++c) {
        const Field& f = path.component(c);
        auto& d = out[slot][c];
        d.resize(P);
        for (std::size_t k = 0; k < P; ++k) d[k] = f.slice(it)[k] - f.slice(is)[k];
      }
    }
  }
  for (auto& lv : out)
    for (auto& d : lv)
      if (d.empty()) d.assign(P, 0.0);
  return out;
}

inline double weighted_square(const std::vector<double>& d, const GridSpec& g, double order, Estimator est, int xi1,
                              int xi2, CBuffer& buf) {
  weighted_spectrum(d.data(), g, order, Window::One, buf);
  if (est == Estimator::SpatialMean) {
    double s = 0.0;
    for (const auto& v : buf) s += std::norm(v);
    return s;
  }
  Fft2::get(g.nx).backward(buf.data());
  const double v = buf[std::size_t(xi1) * g.nx + xi2].real();
  return v * v;
}

} // namespace detail

// E|F^{-1}((1+|.|^2)^{|tau|/2} F(tau^{n,m}_{s,t}))(x)|^2 for every component and
// every (n, m) pair, estimated from `samples` seeds shared by all levels.
inline std::vector<IncrementRow> mc_increment_table(const RunConfig& cfg, const std::vector<std::pair<int, int>>& pairs,
                                                    double s, double t, std::array<double, 2> x, int samples,
                                                    int threads = 1, Estimator est = Estimator::SpatialMean) {
  if (samples < 8) throw ValidationError(IssueCode::InvalidSamples, "Monte-Carlo estimates need at least 8 samples");
  for (const auto& [n, m] : pairs)
    if (n < 0 || n > m || m > cfg.grid.level)
      throw ValidationError(IssueCode::InvalidGrid, "increment levels must satisfy 0 <= n <= m <= grid.level");
  if (s > t) std::swap(s, t);
  const int is = detail::slice_index(cfg.grid, s), it = detail::slice_index(cfg.grid, t);
  std::vector<int> levels;
  for (const auto& [n, m] : pairs) {
    levels.push_back(n);
    levels.push_back(m);
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const auto orders = objects::component_orders(cfg.sobolev.alpha);
  const int xi1 = detail::point_index(cfg.grid, x[0]), xi2 = detail::point_index(cfg.grid, x[1]);
  const std::size_t nrow = 4 * pairs.size();

  std::vector<std::vector<double>> per(nrow, std::vector<double>(samples, 0.0));
  if (is != it) {
    fracwave::detail::parallel_for(std::size_t(samples), fracwave::detail::resolve_threads(threads), [&](std::size_t k) {
      const auto inc = detail::level_increments(cfg, levels, is, it, sample_seed(cfg.seed, k));
      CBuffer buf;
      std::vector<double> diff;
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [n, m] = pairs[p];
        if (n == m) continue;
        const std::size_t a = std::find(levels.begin(), levels.end(), n) - levels.begin();
        const std::size_t b = std::find(levels.begin(), levels.end(), m) - levels.begin();
        for (int c = 0; c < 4; ++c) {
          diff.resize(inc[b][c].size());
          for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = inc[b][c][i] - inc[a][c][i];
          per[4 * p + c][k] = detail::weighted_square(diff, cfg.grid, orders[c], est, xi1, xi2, buf);
        }
      }
    });
  }
  std::vector<IncrementRow> rows;
  for (std::size_t p = 0; p < pairs.size(); ++p)
    for (int c = 0; c < 4; ++c) {
      IncrementRow r;
      r.component = c;
      r.n = pairs[p].first;
      r.m = pairs[p].second;
      r.s = s;
      r.t = t;
      r.estimate = fracwave::detail::mean_se(per[4 * p + c]);
      rows.push_back(r);
    }
  return rows;
}

inline MeanSe mc_moment_increment(const RunConfig& cfg, int tau, int n, int m, double s, double t,
                                  std::array<double, 2> x, int samples, int threads = 1,
                                  Estimator est = Estimator::SpatialMean) {
  if (tau < 0 || tau > 3) throw Error("mc_moment_increment: component id must be 0..3");
  return mc_increment_table(cfg, {{n, m}}, s, t, x, samples, threads, est)[std::size_t(tau)].estimate;
}

// ---------------------------------------------------------------------------
// Covariance of Psi^n by quadrature.

namespace detail {

// int_0^{2 pi} |cos th|^{a1} |sin th|^{a2} cos(r <d, e_th>) d th.
inline double angular_factor(double r, double d1, double d2, double a1, double a2, double rel_tol) {
  double total = 0.0;
  for (int q = 0; q < 4; ++q) total += kernels::angular_quadrant(q, r, d1, d2, a1, a2, rel_tol);
  return total;
}

} // namespace detail

// E[Psi^n_s(y) Psi^n_t(ytilde)] = int_{|eta| <= 2^n} e^{i eta.(y - ytilde)} L^{H,(n,n)}_{s,t}(eta) d eta
// with c_H = 1, in polar coordinates.
inline double covariance_psi_quadrature(std::array<double, 2> y, std::array<double, 2> yt, double s, double t, int n,
                                        const HurstTriple& h, double rel_tol = 1e-7) {
  if (s <= 0.0 || t <= 0.0 || n <= 0) return 0.0;
  const double a1 = 1.0 - 2.0 * h.h1(), a2 = 1.0 - 2.0 * h.h2(), top = std::ldexp(1.0, n);
  const double d1 = y[0] - yt[0], d2 = y[1] - yt[1];
  const double qtol = std::min(1e-9, 0.01 * rel_tol);
  const bool same = d1 == 0.0 && d2 == 0.0;
  const double a_zero = same ? detail::angular_factor(0.0, 0.0, 0.0, a1, a2, qtol) : 0.0;
  auto g = [&](double r) {
    const double ang = same ? a_zero : detail::angular_factor(r, d1, d2, a1, a2, qtol);
    return ang * kernels::cross_gamma(r, s, t, h.h0(), 0.0, top, rel_tol);
  };
  const double e = 1.0 + a1 + a2;
  const double c0 = std::min(top, 1.0);
  double total = fracwave::detail::integrate_power_origin(g, e, c0, rel_tol, 1e-300).value;
  std::vector<double> pts{c0};
  for (double p = 2.0 * c0; p < top; p *= 2.0) pts.push_back(p);
  pts.push_back(top);
  auto f = [&](double r) { return std::pow(r, e) * g(r); };
  if (top > c0) total += fracwave::detail::integrate_pieces(f, pts, rel_tol, 1e-300).value;
  return total;
}

// ---------------------------------------------------------------------------
// Kernel bound for level/time increments of the covariance.

inline HurstTriple lowered(const HurstTriple& h, int i, double eps) {
  double v[3] = {h.h0(), h.h1(), h.h2()};
  v[i] -= eps;
  return HurstTriple(v[0], v[1], v[2]);
}

// L^{H,((n,m),m)}_{(s,t),t}(eta): integral of gamma_{s,t} conj(gamma_t) |xi|^{1-2H0}
// over the xi-section of D^m \ D^n at eta, times |eta1|^{1-2H1} |eta2|^{1-2H2}.
inline double l_increment(const HurstTriple& h, int n, int m, double s, double t, double eta1, double eta2,
                          double rel_tol = 1e-7) {
  const double rho = std::hypot(eta1, eta2), tn = std::ldexp(1.0, n), tm = std::ldexp(1.0, m);
  if (rho > tm || n >= m || t <= 0.0) return 0.0;
  const double lo = rho <= tn ? tn : 0.0;
  auto sym = [&](double xi) {
    const cplx gt = kernels::gamma(xi, rho, t), gs = kernels::gamma(xi, rho, s);
    return 2.0 * std::real((gt - gs) * std::conj(gt));
  };
  const double v = kernels::integrate_xi(sym, rho, 1.0 - 2.0 * h.h0(), lo, tm, std::min(1e-9, 0.01 * rel_tol));
  return v * std::pow(std::abs(eta1), 1.0 - 2.0 * h.h1()) * std::pow(std::abs(eta2), 1.0 - 2.0 * h.h2());
}

// |L| / (2^{-n eps} |t-s|^eps sum_i K^{H_{eps,i}}(eta)).
inline double kernel_bound_ratio(const HurstTriple& h, double eps, int n, int m, double s, double t, double eta1,
                                 double eta2) {
  if (s == t) return 0.0;
  double k = 0.0;
  for (int i = 0; i < 3; ++i) k += kernels::k_kernel(eta1, eta2, lowered(h, i, eps));
  const double scale = std::pow(2.0, -n * eps) * std::pow(std::abs(t - s), eps);
  return std::abs(l_increment(h, n, m, s, t, eta1, eta2)) / (scale * k);
}

struct KernelBoundDraw {
  int n = 0, m = 1;
  double s = 0.0, t = 1.0;
};

// Off-axis eta lattice: radii 2^{k/per_octave} up to 2^max_exp, `angles` directions
// strictly inside the first quadrant plus their reflections.
inline std::vector<std::array<double, 2>> kernel_bound_lattice(int max_exp, int per_octave, int angles) {
  std::vector<std::array<double, 2>> out;
  for (int k = -per_octave; k <= max_exp * per_octave; ++k) {
    const double r = std::pow(2.0, double(k) / per_octave);
    for (int j = 0; j < angles; ++j) {
      const double th = (j + 0.5) * (M_PI / 2.0) / angles;
      out.push_back({r * std::cos(th), r * std::sin(th)});
      out.push_back({-r * std::cos(th), r * std::sin(th)});
    }
  }
  return out;
}

inline std::vector<KernelBoundDraw> kernel_bound_draws(std::uint64_t seed, int count, int max_level) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<KernelBoundDraw> out;
  for (int i = 0; i < count; ++i) {
    KernelBoundDraw d;
    d.n = int(rng() % std::uint64_t(max_level));
    d.m = d.n + 1 + int(rng() % std::uint64_t(max_level - d.n));
    d.s = u(rng);
    d.t = u(rng);
    out.push_back(d);
  }
  return out;
}

inline double kernel_bound_max(const HurstTriple& h, double eps, const std::vector<std::array<double, 2>>& etas,
                               const std::vector<KernelBoundDraw>& draws, int threads = 1) {
  std::vector<double> best(draws.size(), 0.0);
  fracwave::detail::parallel_for(draws.size(), threads, [&](std::size_t i) {
    const auto& d = draws[i];
    for (const auto& e : etas) best[i] = std::max(best[i], kernel_bound_ratio(h, eps, d.n, d.m, d.s, d.t, e[0], e[1]));
  });
  double r = 0.0;
  for (double b : best) r = std::max(r, b);
  return r;
}

} // namespace fracwave::analysis

#endif
