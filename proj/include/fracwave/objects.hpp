#ifndef FRACWAVE_OBJECTS_HPP
#define FRACWAVE_OBJECTS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include "core.hpp"
#include "detail/fft.hpp"
#include "detail/io.hpp"
#include "detail/parallel.hpp"
#include "kernels.hpp"
#include "noise.hpp"

namespace fracwave::objects {

using cplx = std::complex<double>;
using fracwave::detail::CBuffer;
using fracwave::detail::Fft2;

// Real field on (slices) x nx x nx, row-major (t, x1, x2). Slice i sits at t = i*dt,
// and x_m = -L + m*dx on each axis.
struct Field {
  std::string label;
  int level = 0;
  GridSpec grid;
  int slices = 0;
  std::vector<double> data;

  Field() = default;
  Field(std::string lbl, int lvl, const GridSpec& g, int ns)
      : label(std::move(lbl)), level(lvl), grid(g), slices(ns), data(std::size_t(ns) * g.nx * g.nx, 0.0) {}

  static Field zeros_like(const Field& f, std::string lbl) { return Field(std::move(lbl), f.level, f.grid, f.slices); }

  int nx() const { return grid.nx; }
  std::size_t plane() const { return std::size_t(grid.nx) * grid.nx; }
  double dt() const { return grid.dt(); }
  double time(int i) const { return i * grid.dt(); }
  double* slice(int i) { return data.data() + i * plane(); }
  const double* slice(int i) const { return data.data() + i * plane(); }
  double& at(int i, int m1, int m2) { return data[i * plane() + std::size_t(m1) * grid.nx + m2]; }
  double at(int i, int m1, int m2) const { return data[i * plane() + std::size_t(m1) * grid.nx + m2]; }
};

inline bool same_grid(const GridSpec& a, const GridSpec& b) {
  return a.nx == b.nx && a.period == b.period && a.nt == b.nt && a.horizon == b.horizon;
}

inline void require_same_grid(const Field& a, const Field& b, const char* who) {
  if (!same_grid(a.grid, b.grid) || a.slices != b.slices)
    throw ValidationError(IssueCode::InvalidGrid, std::string(who) + ": grid mismatch");
}

// ---------------------------------------------------------------------------
// Spectral synthesis of Psi^n for several nested levels in one pass.

// Psi-hat on the canonical spatial modes of the top mode set, for each
// requested level and time: values[b][i][e].
struct PsiSpectra {
  std::vector<int> levels;
  std::vector<double> times;
  std::vector<std::vector<std::vector<cplx>>> values;
};

namespace detail {

inline constexpr double kResonance = 0.1;

inline std::vector<int> bucket_table(const std::vector<int>& levels, int top) {
  // bucket_of[l] = index of the first requested level >= l, or -1.
  std::vector<int> t(top + 2, -1);
  for (int l = 0; l <= top + 1; ++l)
    for (std::size_t b = 0; b < levels.size(); ++b)
      if (levels[b] >= l) {
        t[l] = int(b);
        break;
      }
  return t;
}

} // namespace detail

// `top` must have level >= max(levels). Each mode (xi, eta) contributes to the
// smallest requested level containing it; values are then accumulated upward.
inline PsiSpectra synthesize_spectra(const noise::ModeSet& top, std::vector<int> levels, const std::vector<double>& times,
                                     int threads = 1) {
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  PsiSpectra out;
  out.levels = levels;
  out.times = times;
  const std::size_t nb = levels.size(), nt = times.size(), ne = top.etas().size();
  out.values.assign(nb, std::vector<std::vector<cplx>>(nt, std::vector<cplx>(ne, 0.0)));
  if (ne == 0 || nb == 0) return out;
  if (levels.back() > top.level()) throw Error("synthesize_spectra: level above the mode set");

  const auto bucket_of = detail::bucket_table(levels, top.level());
  const auto& xis = top.xis();
  const std::size_t nq = xis.size();
  std::vector<cplx> etab(nq * nt);
  std::vector<double> sqm(nq);
  for (std::size_t j = 0; j < nq; ++j) {
    sqm[j] = std::sqrt(xis[j].mass);
    for (std::size_t i = 0; i < nt; ++i) etab[j * nt + i] = std::polar(1.0, xis[j].xi * times[i]);
  }

  const std::size_t chunk = 256, nchunks = (ne + chunk - 1) / chunk;
  fracwave::detail::parallel_for(nchunks, threads, [&](std::size_t c) {
    std::vector<cplx> acc(nb * nt), a(nb), bb(nb);
    for (std::size_t e = c * chunk; e < std::min(ne, (c + 1) * chunk); ++e) {
      const auto& em = top.etas()[e];
      const double rho = em.rho, sw = std::sqrt(em.mass);
      const bool zero = em.k1 == 0 && em.k2 == 0;
      std::fill(acc.begin(), acc.end(), cplx(0.0));
      std::fill(a.begin(), a.end(), cplx(0.0));
      std::fill(bb.begin(), bb.end(), cplx(0.0));
      for (std::size_t j = 0; j < nq; ++j) {
        const auto& xm = xis[j];
        if (zero && xm.q < 0) continue;  // eta = 0: pair (q, -q) handled as 2 Re
        const int b = bucket_of[std::max(xm.shell, em.shell)];
        if (b < 0) continue;
        cplx z = top.coeff(xm, em) * (sw * sqm[j]);
        cplx* s = &acc[b * nt];
        const double xi = xm.xi;
        if (zero) {
          for (std::size_t i = 0; i < nt; ++i) s[i] += 2.0 * std::real(z * kernels::gamma(xi, 0.0, times[i]));
          continue;
        }
        if (std::abs(rho - std::abs(xi)) < detail::kResonance) {
          for (std::size_t i = 0; i < nt; ++i) s[i] += z * kernels::gamma(xi, rho, times[i]);
          continue;
        }
        const double A = -0.5 / (rho * (rho - xi)), B = -0.5 / (rho * (rho + xi)), C = 1.0 / ((rho - xi) * (rho + xi));
        a[b] += z * A;
        bb[b] += z * B;
        const cplx zc = z * C;
        const cplx* et = &etab[j * nt];
        for (std::size_t i = 0; i < nt; ++i) s[i] += zc * et[i];
      }
      cplx run_a = 0.0, run_b = 0.0;
      std::vector<cplx> run(nt, 0.0);
      for (std::size_t b = 0; b < nb; ++b) {
        run_a += a[b];
        run_b += bb[b];
        for (std::size_t i = 0; i < nt; ++i) {
          run[i] += acc[b * nt + i];
          const cplx ep = std::polar(1.0, rho * times[i]);
          out.values[b][i][e] = run_a * ep + run_b * std::conj(ep) + run[i];
        }
      }
    }
  });
  // t = 0 is exactly zero (gamma_0 = 0); remove rounding residue of A + B + C.
  for (std::size_t i = 0; i < nt; ++i)
    if (times[i] == 0.0)
      for (auto& lv : out.values) std::fill(lv[i].begin(), lv[i].end(), cplx(0.0));
  return out;
}

// Inverse transform of canonical-mode spectral values onto the spatial grid.
inline void spectrum_to_grid(const noise::ModeSet& top, const std::vector<cplx>& vals, int nx, double* out,
                             CBuffer& buf) {
  using fracwave::detail::bin_of;
  buf.assign(std::size_t(nx) * nx, cplx(0.0));
  const auto& etas = top.etas();
  for (std::size_t e = 0; e < etas.size(); ++e) {
    const auto& em = etas[e];
    const double sgn = ((em.k1 + em.k2) & 1) ? -1.0 : 1.0;  // e^{i eta.x} at x = -L + m dx
    const cplx v = sgn * vals[e];
    buf[std::size_t(bin_of(em.k1, nx)) * nx + bin_of(em.k2, nx)] += v;
    if (em.k1 != 0 || em.k2 != 0) buf[std::size_t(bin_of(-em.k1, nx)) * nx + bin_of(-em.k2, nx)] += std::conj(v);
  }
  Fft2::get(nx).backward(buf.data());
  for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i].real();
}

inline std::vector<double> grid_times(const GridSpec& g, int slices) {
  std::vector<double> t(slices);
  for (int i = 0; i < slices; ++i) t[i] = i * g.dt();
  return t;
}

// Psi^n fields for each requested level on the grid's time lattice.
inline std::vector<Field> build_psi_levels(const noise::ModeSet& top, const GridSpec& grid, const std::vector<int>& levels,
                                           int slices, int threads = 1) {
  std::vector<int> lv = levels;
  std::sort(lv.begin(), lv.end());
  lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
  const auto times = grid_times(grid, slices);
  const auto spec = synthesize_spectra(top, lv, times, threads);
  std::vector<Field> out;
  for (std::size_t b = 0; b < lv.size(); ++b) {
    Field f("psi", lv[b], grid, slices);
    fracwave::detail::parallel_for(std::size_t(slices), threads, [&](std::size_t i) {
      CBuffer buf;
      spectrum_to_grid(top, spec.values[b][i], grid.nx, f.slice(int(i)), buf);
    });
    out.push_back(std::move(f));
  }
  return out;
}

inline Field build_psi(const noise::ModeSet& modes, const GridSpec& grid, int threads = 1) {
  if (modes.level() == 0) return Field("psi", 0, grid, grid.nt + 1);
  return build_psi_levels(modes, grid, {modes.level()}, grid.nt + 1, threads).front();
}

// Exact lattice variances sum_modes w^2 |gamma_t|^2 for nested levels and a
// list of times: table[b][i] for the sorted, deduplicated levels.
inline std::vector<std::vector<double>> variance_table(const noise::ModeSet& top, std::vector<int> levels,
                                                       const std::vector<double>& times) {
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const std::size_t nb = levels.size(), nt = times.size();
  std::vector<std::vector<double>> out(nb, std::vector<double>(nt, 0.0));
  if (top.empty() || nb == 0) return out;
  const auto bucket_of = detail::bucket_table(levels, top.level());
  // Group spatial modes by |k|^2: the full lattice carries eta and -eta.
  struct Group {
    double rho = 0.0, mass = 0.0;
    int shell = 1;
  };
  std::map<long, Group> groups;
  for (const auto& e : top.etas()) {
    auto& g = groups[long(e.k1) * e.k1 + long(e.k2) * e.k2];
    g.rho = e.rho;
    g.shell = e.shell;
    g.mass += (e.k1 == 0 && e.k2 == 0) ? e.mass : 2.0 * e.mass;
  }
  std::vector<const noise::XiMode*> pos;
  for (const auto& x : top.xis())
    if (x.q > 0) pos.push_back(&x);
  std::vector<cplx> etab(pos.size() * nt), ep(nt);
  for (std::size_t j = 0; j < pos.size(); ++j)
    for (std::size_t i = 0; i < nt; ++i) etab[j * nt + i] = std::polar(1.0, pos[j]->xi * times[i]);
  std::vector<double> bucket(nb * nt, 0.0);
  for (const auto& [key, g] : groups) {
    const double rho = g.rho;
    for (std::size_t i = 0; i < nt; ++i) ep[i] = std::polar(1.0, rho * times[i]);
    for (std::size_t j = 0; j < pos.size(); ++j) {
      const auto& x = *pos[j];
      const int b = bucket_of[std::max(x.shell, g.shell)];
      if (b < 0) continue;
      const double w = 2.0 * x.mass * g.mass;  // |gamma(-xi)| = |gamma(xi)|
      double* acc = &bucket[b * nt];
      if (rho == 0.0 || std::abs(rho - x.xi) < detail::kResonance) {
        for (std::size_t i = 0; i < nt; ++i) acc[i] += w * kernels::gamma_abs2(x.xi, rho, times[i]);
        continue;
      }
      const double xi = x.xi;
      const double A = -0.5 / (rho * (rho - xi)), B = -0.5 / (rho * (rho + xi)), C = 1.0 / ((rho - xi) * (rho + xi));
      const cplx* et = &etab[j * nt];
      for (std::size_t i = 0; i < nt; ++i) acc[i] += w * std::norm(A * ep[i] + B * std::conj(ep[i]) + C * et[i]);
    }
  }
  for (std::size_t i = 0; i < nt; ++i) {
    double run = 0.0;
    for (std::size_t b = 0; b < nb; ++b) out[b][i] = times[i] == 0.0 ? 0.0 : (run += bucket[b * nt + i]);
  }
  return out;
}

inline double lattice_variance(const noise::ModeSet& modes, double t) {
  if (modes.empty()) return 0.0;
  return variance_table(modes, {modes.level()}, {t})[0][0];
}

// Per-slice lattice variances of `level` (<= top.level()).
inline std::vector<double> lattice_variance_slices(const noise::ModeSet& top, int level, const GridSpec& grid, int slices) {
  if (top.empty() || level == 0) return std::vector<double>(slices, 0.0);
  return variance_table(top, {level}, grid_times(grid, slices))[0];
}

inline Field wick_square(const Field& psi, const std::vector<double>& variance) {
  if (int(variance.size()) != psi.slices) throw Error("wick_square: one variance per slice required");
  Field out = Field::zeros_like(psi, "psi2");
  const std::size_t P = psi.plane();
  for (int i = 0; i < psi.slices; ++i) {
    const double* s = psi.slice(i);
    double* o = out.slice(i);
    for (std::size_t m = 0; m < P; ++m) o[m] = s[m] * s[m] - variance[i];
  }
  return out;
}

inline Field wick_square(const Field& psi, const noise::ModeSet& modes) {
  if (modes.level() == 0) return Field::zeros_like(psi, "psi2");
  return wick_square(psi, lattice_variance_slices(modes, modes.level(), psi.grid, psi.slices));
}

// ---------------------------------------------------------------------------
// Spectral helpers on the grid.

// |eta| for FFT bin (i1, i2).
inline double bin_radius(int i1, int i2, int nx, double period) {
  const double k1 = fracwave::detail::wavenumber(i1, nx), k2 = fracwave::detail::wavenumber(i2, nx);
  return M_PI / period * std::sqrt(k1 * k1 + k2 * k2);
}

// Forward transforms of all slices, normalized by nx^2; layout [slice][bin].
inline std::vector<CBuffer> forward_slices(const Field& f, int threads = 1) {
  std::vector<CBuffer> out(f.slices);
  const double norm = 1.0 / double(f.plane());
  fracwave::detail::parallel_for(std::size_t(f.slices), threads, [&](std::size_t i) {
    auto& b = out[i];
    b.resize(f.plane());
    const double* s = f.slice(int(i));
    for (std::size_t m = 0; m < f.plane(); ++m) b[m] = s[m] * norm;
    Fft2::get(f.nx()).forward(b.data());
  });
  return out;
}

// Duhamel convolution with the wave kernel, trapezoid rule in time:
// out(t_j, eta) = int_0^{t_j} sin((t_j - s)|eta|)/|eta| f(s, eta) ds.
inline Field duhamel_convolve(const Field& source, int threads = 1) {
  Field out = Field::zeros_like(source, source.label.empty() ? "duhamel" : "I" + source.label);
  const int ns = source.slices, nx = source.nx();
  if (ns < 2) return out;
  const double dt = source.dt();
  auto spec = forward_slices(source, threads);
  std::vector<CBuffer> res(ns, CBuffer(source.plane(), cplx(0.0)));
  fracwave::detail::parallel_for(std::size_t(nx), threads, [&](std::size_t i1) {
    std::vector<double> c(ns), s(ns);
    for (int i2 = 0; i2 < nx; ++i2) {
      const std::size_t bin = i1 * nx + i2;
      const double rho = bin_radius(int(i1), i2, nx, source.grid.period);
      if (rho == 0.0) {
        cplx m0 = 0.0, m1 = 0.0;
        for (int j = 1; j < ns; ++j) {
          const cplx f0 = spec[j - 1][bin], f1 = spec[j][bin];
          m0 += 0.5 * dt * (f0 + f1);
          m1 += 0.5 * dt * ((j - 1) * dt * f0 + j * dt * f1);
          res[j][bin] = j * dt * m0 - m1;
        }
        continue;
      }
      for (int j = 0; j < ns; ++j) {
        c[j] = std::cos(j * dt * rho);
        s[j] = std::sin(j * dt * rho);
      }
      cplx pc = 0.0, ps = 0.0;
      for (int j = 1; j < ns; ++j) {
        const cplx f0 = spec[j - 1][bin], f1 = spec[j][bin];
        pc += 0.5 * dt * (c[j - 1] * f0 + c[j] * f1);
        ps += 0.5 * dt * (s[j - 1] * f0 + s[j] * f1);
        res[j][bin] = (s[j] * pc - c[j] * ps) / rho;
      }
    }
  });
  fracwave::detail::parallel_for(std::size_t(ns), threads, [&](std::size_t j) {
    Fft2::get(nx).backward(res[j].data());
    double* o = out.slice(int(j));
    for (std::size_t m = 0; m < out.plane(); ++m) o[m] = res[j][m].real();
  });
  return out;
}

namespace detail {

// Axis map from an n-point spectrum into an m-point one (m > n): interior
// wavenumbers map one-to-one, the Nyquist bin is split evenly over +-n/2.
struct PadAxis {
  int target[2];
  double weight[2];
  int count;
};

inline std::vector<PadAxis> pad_axis(int n, int m) {
  using fracwave::detail::bin_of;
  std::vector<PadAxis> ax(n);
  for (int i = 0; i < n; ++i) {
    const int k = fracwave::detail::wavenumber(i, n);
    if (2 * k == n) ax[i] = {{bin_of(k, m), bin_of(-k, m)}, {0.5, 0.5}, 2};
    else ax[i] = {{bin_of(k, m), 0}, {1.0, 0.0}, 1};
  }
  return ax;
}

inline void pad_spectrum(const cplx* in, int n, cplx* out, int m, const std::vector<PadAxis>& ax) {
  std::fill(out, out + std::size_t(m) * m, cplx(0.0));
  for (int i1 = 0; i1 < n; ++i1)
    for (int i2 = 0; i2 < n; ++i2) {
      const cplx v = in[std::size_t(i1) * n + i2];
      for (int a = 0; a < ax[i1].count; ++a)
        for (int b = 0; b < ax[i2].count; ++b)
          out[std::size_t(ax[i1].target[a]) * m + ax[i2].target[b]] += v * (ax[i1].weight[a] * ax[i2].weight[b]);
    }
}

// Inverse of the padding: keep |k| < n/2, fold +-n/2 onto the Nyquist bin.
inline void truncate_spectrum(const cplx* in, int m, cplx* out, int n, const std::vector<PadAxis>& ax) {
  for (int i1 = 0; i1 < n; ++i1)
    for (int i2 = 0; i2 < n; ++i2) {
      cplx v = 0.0;
      for (int a = 0; a < ax[i1].count; ++a)
        for (int b = 0; b < ax[i2].count; ++b) v += in[std::size_t(ax[i1].target[a]) * m + ax[i2].target[b]];
      out[std::size_t(i1) * n + i2] = v;
    }
}

} // namespace detail

inline int padded_size(int nx) { return 3 * nx / 2; }

// Spectrum (normalized DFT coefficients, nx x nx) of the product of two grid
// functions given by their spectra, computed on a 3/2 zero-padded grid.
inline void dealiased_product_spectrum(const cplx* ahat, const cplx* bhat, int nx, cplx* out) {
  const int m = padded_size(nx);
  const auto ax = detail::pad_axis(nx, m);
  CBuffer pa(std::size_t(m) * m), pb(std::size_t(m) * m);
  detail::pad_spectrum(ahat, nx, pa.data(), m, ax);
  detail::pad_spectrum(bhat, nx, pb.data(), m, ax);
  const auto& F = Fft2::get(m);
  F.backward(pa.data());
  F.backward(pb.data());
  for (std::size_t i = 0; i < pa.size(); ++i) pa[i] *= pb[i];
  F.forward(pa.data());
  const double norm = 1.0 / (double(m) * m);
  for (auto& v : pa) v *= norm;
  detail::truncate_spectrum(pa.data(), m, out, nx, ax);
}

// Dealiased pointwise product of two real slices.
inline void dealiased_product(const double* a, const double* b, int nx, double* out) {
  const std::size_t P = std::size_t(nx) * nx;
  CBuffer ah(P), bh(P), oh(P);
  const double norm = 1.0 / double(P);
  for (std::size_t i = 0; i < P; ++i) {
    ah[i] = a[i] * norm;
    bh[i] = b[i] * norm;
  }
  const auto& F = Fft2::get(nx);
  F.forward(ah.data());
  F.forward(bh.data());
  dealiased_product_spectrum(ah.data(), bh.data(), nx, oh.data());
  F.backward(oh.data());
  for (std::size_t i = 0; i < P; ++i) out[i] = oh[i].real();
}

inline Field dealiased_product(const Field& a, const Field& b, std::string label, int threads = 1) {
  require_same_grid(a, b, "dealiased_product");
  Field out = Field::zeros_like(a, std::move(label));
  out.level = std::max(a.level, b.level);
  fracwave::detail::parallel_for(std::size_t(a.slices), threads, [&](std::size_t i) {
    dealiased_product(a.slice(int(i)), b.slice(int(i)), a.nx(), out.slice(int(i)));
  });
  return out;
}

inline Field third_order(const Field& ipsi2, const Field& psi, int threads = 1) {
  if (ipsi2.level != psi.level) throw ValidationError(IssueCode::InvalidGrid, "third_order: level mismatch");
  auto out = dealiased_product(ipsi2, psi, "psi_ipsi2", threads);
  out.level = psi.level;
  return out;
}

// ---------------------------------------------------------------------------
// Enhanced path.

// Orders of the four symbols: (-alpha, -2 alpha, 1 - 2 alpha, -alpha).
inline std::array<double, 4> component_orders(double alpha) { return {-alpha, -2.0 * alpha, 1.0 - 2.0 * alpha, -alpha}; }

inline constexpr const char* kComponentNames[4] = {"psi", "psi2", "ipsi2", "psi_ipsi2"};

struct NormRecord {
  double alpha = 0.0;
  int p = 2;
  std::array<double, 4> orders{};
  std::array<double, 4> values{};
  bool filled = false;
};

struct EnhancedPath {
  Field psi, psi2, ipsi2, psi_ipsi2;
  double alpha = 0.0;
  NormRecord norms;
  std::vector<double> variance;  // lattice variance per slice used by the Wick square

  int level() const { return psi.level; }
  const Field& component(int c) const {
    switch (c) {
    case 0: return psi;
    case 1: return psi2;
    case 2: return ipsi2;
    default: return psi_ipsi2;
    }
  }
  Field& component(int c) { return const_cast<Field&>(static_cast<const EnhancedPath&>(*this).component(c)); }
};

inline EnhancedPath assemble_path(Field psi, std::vector<double> variance, double alpha, int threads = 1) {
  EnhancedPath p;
  p.alpha = alpha;
  p.variance = std::move(variance);
  p.psi2 = wick_square(psi, p.variance);
  p.psi2.level = psi.level;
  p.ipsi2 = duhamel_convolve(p.psi2, threads);
  p.ipsi2.label = "ipsi2";
  p.ipsi2.level = psi.level;
  p.psi_ipsi2 = third_order(p.ipsi2, psi, threads);
  p.psi = std::move(psi);
  return p;
}

inline EnhancedPath zero_path(const GridSpec& grid, int slices, double alpha) {
  EnhancedPath p;
  p.alpha = alpha;
  p.psi = Field("psi", 0, grid, slices);
  p.psi2 = Field("psi2", 0, grid, slices);
  p.ipsi2 = Field("ipsi2", 0, grid, slices);
  p.psi_ipsi2 = Field("psi_ipsi2", 0, grid, slices);
  p.variance.assign(slices, 0.0);
  return p;
}

// Enhanced paths for several levels from one seed (common random numbers).
inline std::vector<EnhancedPath> build_enhanced_paths(const RunConfig& cfg, const std::vector<int>& levels,
                                                      std::uint64_t seed, int threads = 1) {
  std::vector<int> lv = levels;
  std::sort(lv.begin(), lv.end());
  lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
  const int slices = cfg.grid.nt + 1;
  std::vector<EnhancedPath> out;
  std::vector<int> positive;
  for (int n : lv)
    if (n > 0) positive.push_back(n);
  std::vector<Field> psis;
  noise::ModeSet top;
  if (!positive.empty()) {
    top = noise::sample_modes(cfg, positive.back(), seed);
    psis = build_psi_levels(top, cfg.grid, positive, slices, threads);
  }
  std::vector<std::vector<double>> var;
  if (!positive.empty()) var = variance_table(top, positive, grid_times(cfg.grid, slices));
  std::size_t k = 0;
  for (int n : lv) {
    if (n == 0) {
      out.push_back(zero_path(cfg.grid, slices, cfg.sobolev.alpha));
      continue;
    }
    out.push_back(assemble_path(std::move(psis[k]), var[k], cfg.sobolev.alpha, threads));
    ++k;
  }
  return out;
}

inline EnhancedPath build_enhanced_path(const RunConfig& cfg, int n, std::uint64_t seed, int threads = 1) {
  return build_enhanced_paths(cfg, {n}, seed, threads).front();
}

// ---------------------------------------------------------------------------
// Binary field snapshot: "FWAV", version, label, grid descriptor, slices,
// then little-endian doubles row-major (t, x1, x2).
inline constexpr std::uint32_t kFieldSnapshotVersion = 1;

inline std::string encode_field_snapshot(const Field& f) {
  fracwave::detail::LeWriter w;
  w.bytes("FWAV", 4);
  w.u32(kFieldSnapshotVersion);
  w.str(f.label);
  w.i32(f.level);
  w.i32(f.grid.level);
  w.f64(f.grid.period);
  w.i32(f.grid.nx);
  w.i32(f.grid.nt);
  w.f64(f.grid.horizon);
  w.i32(f.grid.xi_points());
  w.i32(f.slices);
  w.u64(f.data.size());
  for (double v : f.data) w.f64(v);
  return w.data();
}

inline Field decode_field_snapshot(const std::string& bytes) {
  fracwave::detail::LeReader r(bytes);
  if (r.raw(4) != "FWAV") throw Error("not a field snapshot");
  if (r.u32() != kFieldSnapshotVersion) throw Error("unsupported field snapshot version");
  Field f;
  f.label = r.str();
  f.level = r.i32();
  f.grid.level = r.i32();
  f.grid.period = r.f64();
  f.grid.nx = r.i32();
  f.grid.nt = r.i32();
  f.grid.horizon = r.f64();
  f.grid.n_xi = r.i32();
  f.slices = r.i32();
  const auto n = r.u64();
  if (n != std::uint64_t(f.slices) * f.grid.nx * f.grid.nx) throw Error("field snapshot size mismatch");
  f.data.resize(n);
  for (auto& v : f.data) v = r.f64();
  if (!r.done()) throw Error("trailing bytes in field snapshot");
  return f;
}

} // namespace fracwave::objects

#endif
