#ifndef FRACWAVE_NOISE_HPP
#define FRACWAVE_NOISE_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core.hpp"
#include "detail/io.hpp"

namespace fracwave::noise {

using cplx = std::complex<double>;

// Philox4x32-10 counter-based generator.
struct Philox4x32 {
  using Ctr = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Ctr generate(Ctr c, Key k) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = std::uint64_t(M0) * c[0], p1 = std::uint64_t(M1) * c[2];
      const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
      const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
      c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
      k[0] += W0;
      k[1] += W1;
    }
    return c;
  }
};

namespace detail {

inline constexpr std::uint32_t kModeDomain = 0x464D4F44u;  // stream tag for mode coefficients

// Uniform in (0,1] from 53 random bits.
inline double unit_open0(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((std::uint64_t(hi) << 32) | lo) >> 11;
  return (double(bits) + 1.0) * 0x1.0p-53;
}

// True when (j, k) is the canonical member of its Hermitian pair.
inline bool is_canonical(int j, int k1, int k2) {
  if (k2 != 0) return k2 > 0;
  if (k1 != 0) return k1 > 0;
  return j >= 0;
}

inline cplx raw_gaussian(std::uint64_t seed, int j, int k1, int k2, bool real_only) {
  const Philox4x32::Key key{std::uint32_t(seed), std::uint32_t(seed >> 32)};
  const Philox4x32::Ctr ctr{std::uint32_t(j), std::uint32_t(k1), std::uint32_t(k2), kModeDomain};
  const auto x = Philox4x32::generate(ctr, key);
  const double u1 = unit_open0(x[0], x[1]), u2 = unit_open0(x[2], x[3]);
  const double r = std::sqrt(-2.0 * std::log(u1)), th = 2.0 * M_PI * u2;
  if (real_only) return r * std::cos(th);
  return cplx(r * std::cos(th), r * std::sin(th)) * M_SQRT1_2;
}

} // namespace detail

// Gaussian attached to temporal index j and spatial index k. Depends only on the
// seed and the canonical representative of {(j,k), (-j,-k)}; the partner gets
// the conjugate. The self-paired zero mode is real standard Gaussian.
inline cplx derive_mode_gaussian(std::uint64_t seed, int j, int k1, int k2) {
  if (j == 0 && k1 == 0 && k2 == 0) return detail::raw_gaussian(seed, 0, 0, 0, true);
  if (detail::is_canonical(j, k1, k2)) return detail::raw_gaussian(seed, j, k1, k2, false);
  return std::conj(detail::raw_gaussian(seed, -j, -k1, -k2, false));
}

// Integral of |x|^a over [lo, hi].
inline double power_mass(double lo, double hi, double a) {
  auto F = [a](double x) { return std::copysign(std::pow(std::abs(x), a + 1.0) / (a + 1.0), x); };
  return F(hi) - F(lo);
}

// Smallest level n >= 1 with r <= 2^n (level 0 is the empty set).
inline int shell_of(double r) {
  int n = 1;
  while (r > std::ldexp(1.0, n)) ++n;
  return n;
}

struct EtaMode {
  int k1 = 0, k2 = 0;
  double rho = 0.0;   // |eta|
  double mass = 0.0;  // product of the two axis cell masses
  int shell = 1;      // minimal level containing this spatial mode
};

struct XiMode {
  int q = 0;          // odd index; xi = q * xi_step / 2
  double xi = 0.0;
  double mass = 0.0;  // cell mass of |xi|^{1-2H0}
  int shell = 1;
};

// Truncated noise modes on D^n = {|xi| <= 2^n, |eta| <= 2^n}. Spatial modes are
// kept for the canonical half plane plus eta = 0; the partners (-xi, -eta) are
// implied by Hermitian symmetry. Coefficients are not stored: they are derived
// on demand from the seed, so every level shares the values on common modes.
class ModeSet {
public:
  ModeSet() = default;

  ModeSet(const HurstTriple& h, int level, double period, int nx, double xi_step, std::uint64_t seed)
      : h_(h), level_(level), period_(period), nx_(nx), xi_step_(xi_step), seed_(seed) {
    if (level <= 0) return;
    const double top = std::ldexp(1.0, level), de = M_PI / period;
    const int qmax = int(std::lround(2.0 * top / xi_step));  // q in {+-1, +-3, ..., +-(qmax-1)}
    for (int q = -(qmax - 1); q <= qmax - 1; q += 2) {
      XiMode m;
      m.q = q;
      m.xi = 0.5 * q * xi_step;
      m.mass = power_mass(m.xi - 0.5 * xi_step, m.xi + 0.5 * xi_step, 1.0 - 2.0 * h.h0());
      m.shell = shell_of((std::abs(m.xi) + 0.5 * xi_step) * (1.0 - 1e-12));
      xis_.push_back(m);
    }
    const int kmax = int(std::floor(top / de));
    std::vector<double> ax1(2 * kmax + 1), ax2(2 * kmax + 1);
    for (int k = -kmax; k <= kmax; ++k) {
      ax1[k + kmax] = power_mass((k - 0.5) * de, (k + 0.5) * de, 1.0 - 2.0 * h.h1());
      ax2[k + kmax] = power_mass((k - 0.5) * de, (k + 0.5) * de, 1.0 - 2.0 * h.h2());
    }
    for (int k2 = 0; k2 <= kmax; ++k2)
      for (int k1 = -kmax; k1 <= kmax; ++k1) {
        if (k2 == 0 && k1 < 0) continue;
        const double rho = de * std::sqrt(double(k1) * k1 + double(k2) * k2);
        if (rho > top * (1.0 + 1e-12)) continue;
        EtaMode e;
        e.k1 = k1;
        e.k2 = k2;
        e.rho = rho;
        e.mass = ax1[k1 + kmax] * ax2[k2 + kmax];
        e.shell = shell_of(rho * (1.0 - 1e-12));
        etas_.push_back(e);
      }
  }

  const HurstTriple& hurst() const { return h_; }
  int level() const { return level_; }
  double period() const { return period_; }
  int nx() const { return nx_; }
  double xi_step() const { return xi_step_; }
  double eta_step() const { return M_PI / period_; }
  std::uint64_t seed() const { return seed_; }
  bool empty() const { return etas_.empty(); }

  const std::vector<EtaMode>& etas() const { return etas_; }
  const std::vector<XiMode>& xis() const { return xis_; }

  // Number of (xi, eta) modes in the full (both half planes) set.
  std::size_t full_size() const {
    if (etas_.empty()) return 0;
    return xis_.size() * (2 * etas_.size() - 1);
  }

  cplx coeff(const XiMode& x, const EtaMode& e) const { return derive_mode_gaussian(seed_, x.q, e.k1, e.k2); }
  double weight(const XiMode& x, const EtaMode& e) const { return std::sqrt(x.mass * e.mass); }

private:
  HurstTriple h_;
  int level_ = 0;
  double period_ = 4.0;
  int nx_ = 0;
  double xi_step_ = 0.25;
  std::uint64_t seed_ = 0;
  std::vector<EtaMode> etas_;
  std::vector<XiMode> xis_;
};

// Mode set of level n for the configuration; the temporal lattice spacing is
// the grid's (fixed by grid.level), so lower levels are restrictions.
inline ModeSet sample_modes(const RunConfig& cfg, int n, std::uint64_t seed) {
  if (n < 0 || n > cfg.grid.level)
    throw ValidationError(IssueCode::InvalidGrid, "sample_modes: level outside [0, grid.level]");
  if (cfg.grid.nyquist() < std::ldexp(1.0, n))
    throw ValidationError(IssueCode::NyquistViolation, "sample_modes: spatial grid cannot represent level " +
                                                           std::to_string(n));
  return ModeSet(cfg.hurst, n, cfg.grid.period, cfg.grid.nx, cfg.grid.xi_step(), seed);
}

inline ModeSet sample_modes(const RunConfig& cfg, int n) { return sample_modes(cfg, n, cfg.seed); }

// Binary mode-set snapshot: "FWMS", version, H triple, lattice descriptors,
// spatial index list, then (re, im) pairs in (eta, xi) order.
inline constexpr std::uint32_t kModeSnapshotVersion = 1;

inline std::string encode_mode_snapshot(const ModeSet& m) {
  fracwave::detail::LeWriter w;
  w.bytes("FWMS", 4);
  w.u32(kModeSnapshotVersion);
  w.f64(m.hurst().h0());
  w.f64(m.hurst().h1());
  w.f64(m.hurst().h2());
  w.i32(m.level());
  w.f64(m.period());
  w.i32(m.nx());
  w.f64(m.xi_step());
  w.u64(m.seed());
  w.u64(m.etas().size());
  w.u64(m.xis().size());
  for (const auto& e : m.etas()) {
    w.i32(e.k1);
    w.i32(e.k2);
  }
  for (const auto& x : m.xis()) w.i32(x.q);
  for (const auto& e : m.etas())
    for (const auto& x : m.xis()) {
      const cplx c = m.coeff(x, e);
      w.f64(c.real());
      w.f64(c.imag());
    }
  return w.data();
}

struct ModeSnapshot {
  HurstTriple hurst;
  int level = 0;
  double period = 0.0;
  int nx = 0;
  double xi_step = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::array<int, 2>> etas;
  std::vector<int> qs;
  std::vector<cplx> coeffs;
};

inline ModeSnapshot decode_mode_snapshot(const std::string& bytes) {
  fracwave::detail::LeReader r(bytes);
  if (r.raw(4) != "FWMS") throw Error("not a mode-set snapshot");
  if (r.u32() != kModeSnapshotVersion) throw Error("unsupported mode-set snapshot version");
  ModeSnapshot s;
  const double h0 = r.f64(), h1 = r.f64(), h2 = r.f64();
  s.hurst = HurstTriple(h0, h1, h2);
  s.level = r.i32();
  s.period = r.f64();
  s.nx = r.i32();
  s.xi_step = r.f64();
  s.seed = r.u64();
  const auto ne = r.u64(), nq = r.u64();
  for (std::uint64_t i = 0; i < ne; ++i) {
    const int a = r.i32(), b = r.i32();
    s.etas.push_back({a, b});
  }
  for (std::uint64_t i = 0; i < nq; ++i) s.qs.push_back(r.i32());
  for (std::uint64_t i = 0; i < ne * nq; ++i) {
    const double re = r.f64(), im = r.f64();
    s.coeffs.emplace_back(re, im);
  }
  if (!r.done()) throw Error("trailing bytes in mode-set snapshot");
  return s;
}

} // namespace fracwave::noise

#endif
