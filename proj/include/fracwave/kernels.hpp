#ifndef FRACWAVE_KERNELS_HPP
#define FRACWAVE_KERNELS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "detail/quadrature.hpp"

namespace fracwave::kernels {

using cplx = std::complex<double>;

// Below this |a t| the factor (e^{iat}-1)/(ia) uses its 4-term Taylor series.
inline constexpr double kTaylorDelta = 1e-6;
// Below this rho*t, gamma is evaluated from the small-rho series in rho^2.
inline constexpr double kSmallRho = 1e-3;

namespace detail {

// phi(a) = int_0^t e^{ias} ds, free of cancellation for every a.
inline cplx phi(double a, double t) {
  const double x = a * t;
  if (std::abs(x) < kTaylorDelta) return t * cplx(1.0 - x * x / 6.0, x / 2.0 - x * x * x / 24.0);
  const double h = std::sin(0.5 * x);
  return {std::sin(x) / a, 2.0 * h * h / a};
}

// psi_k(a) = int_0^t s^k e^{ias} ds for k = 0..kmax.
inline void psi_moments(double a, double t, int kmax, cplx* out) {
  const double x = a * t;
  if (std::abs(x) < 1.0) {
    for (int k = 0; k <= kmax; ++k) {
      cplx sum = 0.0, term = 1.0;  // term = (ia t)^m / m!
      for (int m = 0; m < 40; ++m) {
        const cplx add = term / double(k + m + 1);
        sum += add;
        if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        term *= cplx(0.0, x) / double(m + 1);
      }
      out[k] = sum * std::pow(t, k + 1);
    }
    return;
  }
  const cplx e = std::polar(1.0, x), ia(0.0, a);
  out[0] = phi(a, t);
  double tk = 1.0;
  for (int k = 1; k <= kmax; ++k) {
    tk *= t;
    out[k] = (tk * e - double(k) * out[k - 1]) / ia;
  }
}

inline double sinc(double x) { return std::abs(x) < 1e-4 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

} // namespace detail

// gamma_t(xi, rho) = e^{i xi t} int_0^t e^{-i xi s} sin(s rho)/rho ds.
inline cplx gamma(double xi, double rho, double t) {
  if (t <= 0.0) return 0.0;
  if (rho < 0.0) throw std::domain_error("gamma: rho must be >= 0");
  const cplx e = std::polar(1.0, xi * t);
  if (rho * t < kSmallRho) {
    // sin(s rho)/rho = s - rho^2 s^3/6 + rho^4 s^5/120 - ...
    cplx m[6];
    detail::psi_moments(-xi, t, 5, m);
    const double r2 = rho * rho;
    return e * (m[1] - r2 / 6.0 * m[3] + r2 * r2 / 120.0 * m[5]);
  }
  const cplx d = detail::phi(rho - xi, t) - detail::phi(-rho - xi, t);
  return e * d / cplx(0.0, 2.0 * rho);
}

inline double gamma_abs2(double xi, double rho, double t) { return std::norm(gamma(xi, rho, t)); }

// Lambda_t(xi, rho) in a cancellation-free rewriting with sinc factors; the
// removable singularities at xi = +-rho are handled by sinc(0) = 1.
inline double lambda(double xi, double rho, double t) {
  const double a = 0.5 * t * (xi - rho), b = 0.5 * t * (xi + rho);
  const double sa = detail::sinc(a);
  return 0.5 * t * t / (rho * rho) * (sa * sa - std::cos(t * rho) * detail::sinc(b) * sa);
}

// Lambda_t(xi, rho) + Lambda_t(-xi, rho).
inline double gamma_sq_via_lambda(double xi, double rho, double t) {
  if (!(rho > 0.0)) throw std::domain_error("gamma_sq_via_lambda: rho must be > 0");
  return lambda(xi, rho, t) + lambda(-xi, rho, t);
}

// Reference point at which the Lambda-identity constant is fitted.
inline constexpr double kLambdaRefXi = 0.7, kLambdaRefRho = 1.9, kLambdaRefT = 0.5;

inline double fit_lambda_constant() {
  return gamma_abs2(kLambdaRefXi, kLambdaRefRho, kLambdaRefT) /
         gamma_sq_via_lambda(kLambdaRefXi, kLambdaRefRho, kLambdaRefT);
}

// Fourier multiplier of the wave kernel: sin(t lam)/lam.
inline double wave_multiplier(double t, double lam) {
  if (lam * std::max(t, 1.0) < 1e-12) return t;
  return std::sin(t * lam) / lam;
}

inline double k_kernel(double eta1, double eta2, const HurstTriple& h) {
  if (eta1 == 0.0 || eta2 == 0.0) throw std::domain_error("k_kernel: eta_i must be nonzero");
  const double r = std::hypot(eta1, eta2);
  return std::pow(std::abs(eta1), 1.0 - 2.0 * h.h1()) * std::pow(std::abs(eta2), 1.0 - 2.0 * h.h2()) /
         (1.0 + std::pow(r, 1.0 + 2.0 * h.h0()));
}

// int_{lo <= |xi| <= hi} sym(xi) |xi|^a dxi over xi > 0, with breakpoints at
// powers of two and near xi = rho where gamma resonates.
template <class F>
double integrate_xi(F&& sym, double rho, double a, double lo, double hi, double qtol) {
  double total = 0.0, c0 = std::max(lo, 0.0);
  if (lo <= 0.0) {
    c0 = std::min(hi, 0.5);
    total = fracwave::detail::integrate_power_origin(sym, a, c0, qtol, 1e-300).value;
  }
  std::vector<double> pts{c0, hi};
  for (double p = 1.0; p < hi; p *= 2.0) pts.push_back(p);
  for (double d : {-2.0, -0.5, 0.0, 0.5, 2.0}) pts.push_back(rho + d);
  std::sort(pts.begin(), pts.end());
  std::vector<double> cut;
  for (double p : pts)
    if (p >= c0 && p <= hi && (cut.empty() || p - cut.back() > 1e-12)) cut.push_back(p);
  auto f = [&](double xi) { return sym(xi) * std::pow(xi, a); };
  return total + fracwave::detail::integrate_pieces(f, cut, qtol, 1e-300).value;
}

// int_{lo <= |xi| <= hi} gamma_s(xi,rho) conj(gamma_t(xi,rho)) |xi|^{1-2H0} dxi.
// The integrand at -xi is the conjugate of the one at xi, so the value is real.
inline double cross_gamma(double rho, double s, double t, double h0, double lo, double hi, double rel_tol = 1e-7) {
  if (!(h0 > 0.0 && h0 < 1.0)) throw std::domain_error("cross_gamma: h0 must be in (0,1)");
  if (rho < 0.0) throw std::domain_error("cross_gamma: rho must be >= 0");
  if (s <= 0.0 || t <= 0.0 || !(hi > lo)) return 0.0;
  auto sym = [&](double xi) {
    if (s == t) return 2.0 * gamma_abs2(xi, rho, t);
    return 2.0 * std::real(gamma(xi, rho, s) * std::conj(gamma(xi, rho, t)));
  };
  return integrate_xi(sym, rho, 1.0 - 2.0 * h0, lo, hi, std::min(1e-9, 0.01 * rel_tol));
}

// int over quadrant q (0..3) of |cos th|^{a1} |sin th|^{a2} cos(r <d, e_th>) d th,
// with the axis singularities removed by a power substitution on each half.
inline double angular_quadrant(int q, double r, double d1, double d2, double a1, double a2, double rel_tol) {
  const double base = q * M_PI / 2.0;
  const double es = (q % 2 == 0) ? a2 : a1;  // exponent of the factor vanishing at phi = 0
  const double ec = (q % 2 == 0) ? a1 : a2;
  auto phase = [&](double th) { return std::cos(r * (d1 * std::cos(th) + d2 * std::sin(th))); };
  auto sinc_pow = [](double x, double e) { return x < 1e-8 ? 1.0 : std::pow(std::sin(x) / x, e); };
  auto lo = [&](double phi) { return sinc_pow(phi, es) * std::pow(std::cos(phi), ec) * phase(base + phi); };
  auto hi = [&](double psi) { return sinc_pow(psi, ec) * std::pow(std::cos(psi), es) * phase(base + M_PI / 2.0 - psi); };
  return fracwave::detail::integrate_power_origin(lo, es, M_PI / 4.0, rel_tol, 1e-14).value +
         fracwave::detail::integrate_power_origin(hi, ec, M_PI / 4.0, rel_tol, 1e-14).value;
}

// Gamma^{H0,n}_t(rho) = int_{|xi| <= 2^n} |gamma_t(xi,rho)|^2 |xi|^{1-2H0} dxi.
inline double big_gamma_n(double rho, double t, double h0, int n, double rel_tol = 1e-7) {
  if (!(h0 > 0.0 && h0 < 1.0)) throw std::domain_error("big_gamma_n: h0 must be in (0,1)");
  if (rho < 0.0) throw std::domain_error("big_gamma_n: rho must be >= 0");
  if (t <= 0.0 || n < 0) return 0.0;
  return cross_gamma(rho, t, t, h0, 0.0, std::ldexp(1.0, n), rel_tol);
}

} // namespace fracwave::kernels

#endif
