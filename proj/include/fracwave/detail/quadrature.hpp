#ifndef FRACWAVE_DETAIL_QUADRATURE_HPP
#define FRACWAVE_DETAIL_QUADRATURE_HPP

#include <cmath>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "../core.hpp"

namespace fracwave::detail {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

// Adaptive Gauss-Kronrod (15-point pair, bisection) on [a,b]. Throws a
// NumericalError("QuadratureError") when the requested relative tolerance is
// not reached; abs_floor guards integrals that are legitimately ~0.
template <class F>
QuadResult integrate_gk(F&& f, double a, double b, double rel_tol, double abs_floor = 0.0, unsigned max_depth = 18) {
  QuadResult r;
  if (!(b > a)) return r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth, rel_tol, &r.error, &r.l1);
  if (!std::isfinite(r.value))
    throw NumericalError("QuadratureError", "non-finite integral on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
  if (r.error > 10.0 * rel_tol * r.l1 && r.error > abs_floor)
    throw NumericalError("QuadratureError", "achieved error " + std::to_string(r.error) + " vs requested " +
                                                std::to_string(rel_tol * r.l1));
  return r;
}

// Sum of integrate_gk over consecutive breakpoints.
template <class F>
QuadResult integrate_pieces(F&& f, const std::vector<double>& pts, double rel_tol, double abs_floor = 0.0) {
  QuadResult total;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    auto r = integrate_gk(f, pts[i], pts[i + 1], rel_tol, abs_floor);
    total.value += r.value;
    total.error += r.error;
    total.l1 += r.l1;
  }
  return total;
}

// Integral of x^a * g(x) over [0, c] with a > -1, using x = u^p, p = 1/(1+a),
// which removes the endpoint power: integrand becomes p * g(u^p).
template <class G>
QuadResult integrate_power_origin(G&& g, double a, double c, double rel_tol, double abs_floor = 0.0) {
  const double p = 1.0 / (1.0 + a);
  auto h = [&](double u) { return p * g(std::pow(u, p)); };
  return integrate_gk(h, 0.0, std::pow(c, 1.0 / p), rel_tol, abs_floor);
}

// Fixed Gauss-Legendre rule on [a,b] (nodes cached by Boost).
template <class F>
double gauss_legendre(F&& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
}

} // namespace fracwave::detail

#endif
