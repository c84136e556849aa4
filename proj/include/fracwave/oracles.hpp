#ifndef FRACWAVE_ORACLES_HPP
#define FRACWAVE_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "core.hpp"
#include "detail/parallel.hpp"
#include "detail/quadrature.hpp"
#include "kernels.hpp"

namespace fracwave::oracles {

enum class Verdict { Converged, Diverging, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
  case Verdict::Converged: return "converged";
  case Verdict::Diverging: return "diverging";
  default: return "inconclusive";
  }
}

// Successive differences must shrink at least by this factor per doubling.
inline constexpr double kCauchyRatio = 0.9;
// Minimal relative growth per doubling for a diverging verdict.
inline constexpr double kGrowth = 0.05;
// Number of trailing radius doublings inspected by the verdict.
inline constexpr int kVerdictWindow = 3;

struct TruncationReport {
  std::string id;
  std::map<std::string, double> params;
  std::vector<double> radii;
  std::vector<double> values;
  std::vector<double> ratios;  // (v_{k+1} - v_k) / (v_k - v_{k-1})
  Verdict verdict = Verdict::Inconclusive;
  double cauchy_ratio = kCauchyRatio;
  double growth = kGrowth;
};

// Converged: over the last three doublings every difference is at most
// kCauchyRatio times the previous one. Diverging: over the last three
// doublings the value grows by at least kGrowth and the differences do not
// decay. Anything else is inconclusive.
inline Verdict classify(const std::vector<double>& v, std::vector<double>* ratios_out = nullptr) {
  std::vector<double> d, ratios;
  for (std::size_t i = 1; i < v.size(); ++i) d.push_back(v[i] - v[i - 1]);
  for (std::size_t i = 1; i < d.size(); ++i) ratios.push_back(d[i - 1] != 0.0 ? d[i] / d[i - 1] : 0.0);
  if (ratios_out) *ratios_out = ratios;
  const int w = kVerdictWindow;
  if (int(ratios.size()) < w) return Verdict::Inconclusive;
  bool conv = true, div = true;
  for (std::size_t i = ratios.size() - w; i < ratios.size(); ++i) {
    if (!(std::abs(d[i + 1]) <= kCauchyRatio * std::abs(d[i]))) conv = false;
    if (!(d[i + 1] >= d[i])) div = false;
  }
  for (std::size_t i = v.size() - w; i < v.size(); ++i)
    if (!(v[i - 1] > 0.0 && v[i] >= (1.0 + kGrowth) * v[i - 1])) div = false;
  if (conv) return Verdict::Converged;
  if (div) return Verdict::Diverging;
  return Verdict::Inconclusive;
}

inline TruncationReport truncation_study(std::string id, std::map<std::string, double> params, int r_min_exp,
                                         int r_max_exp, const std::function<double(double)>& partial, int threads = 1) {
  if (r_max_exp < r_min_exp) throw ValidationError(IssueCode::InvalidConfig, "truncation radii: r_max_exp < r_min_exp");
  TruncationReport r;
  r.id = std::move(id);
  r.params = std::move(params);
  for (int k = r_min_exp; k <= r_max_exp; ++k) r.radii.push_back(std::ldexp(1.0, k));
  r.values.assign(r.radii.size(), 0.0);
  fracwave::detail::parallel_for(r.radii.size(), threads, [&](std::size_t i) { r.values[i] = partial(r.radii[i]); });
  r.verdict = classify(r.values, &r.ratios);
  return r;
}

// ---------------------------------------------------------------------------
// Product Gauss rules.

namespace detail {

struct Rule {
  std::vector<double> x, w;
};

template <int N>
void append_gauss(Rule& r, double a, double b) {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& ab = G::abscissa();
  const auto& wt = G::weights();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (std::size_t i = 0; i < ab.size(); ++i) {
    if (ab[i] == 0.0) {
      r.x.push_back(c);
      r.w.push_back(h * wt[i]);
      continue;
    }
    r.x.push_back(c - h * ab[i]);
    r.w.push_back(h * wt[i]);
    r.x.push_back(c + h * ab[i]);
    r.w.push_back(h * wt[i]);
  }
}

inline constexpr int kNodes = 8;
inline constexpr int kFinePanels = 6;  // dyadic panels below 1

// Rule on [0, hi] for integrands behaving like x^e at the origin: the first panel
// uses x = c v^{1/(1+e)}, the others are dyadic.
inline Rule axis_rule(double hi, double e) {
  Rule r;
  if (!(hi > 0.0)) return r;
  std::vector<double> pts;
  for (int k = -kFinePanels;; ++k) {
    const double p = std::ldexp(1.0, k);
    if (p >= hi) break;
    pts.push_back(p);
  }
  pts.push_back(hi);
  const double c = pts.front(), p = 1.0 / (1.0 + e);
  Rule first;
  append_gauss<kNodes>(first, 0.0, 1.0);
  for (std::size_t i = 0; i < first.x.size(); ++i) {
    const double v = first.x[i];
    r.x.push_back(c * std::pow(v, p));
    r.w.push_back(c * p * std::pow(v, p - 1.0) * first.w[i]);
  }
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) append_gauss<kNodes>(r, pts[i], pts[i + 1]);
  return r;
}

// Rule on [lo, hi] with lo > 0 and dyadic panels.
inline Rule dyadic_rule(double lo, double hi) {
  Rule r;
  if (!(hi > lo)) return r;
  double a = lo;
  while (a < hi) {
    const double b = std::min(hi, 2.0 * a);
    append_gauss<kNodes>(r, a, b);
    a = b;
  }
  return r;
}

// Rule on [0, hi] for integrands varying on the unit scale near 0.
inline Rule offset_rule(double hi) {
  Rule r;
  if (!(hi > 0.0)) return r;
  append_gauss<kNodes>(r, 0.0, std::min(hi, 1.0));
  if (hi > 1.0) {
    const Rule d = dyadic_rule(1.0, hi);
    r.x.insert(r.x.end(), d.x.begin(), d.x.end());
    r.w.insert(r.w.end(), d.w.begin(), d.w.end());
  }
  return r;
}

inline double kh(double e1, double e2, const HurstTriple& h) {
  return std::pow(e1, 1.0 - 2.0 * h.h1()) * std::pow(e2, 1.0 - 2.0 * h.h2()) /
         (1.0 + std::pow(std::hypot(e1, e2), 1.0 + 2.0 * h.h0()));
}

inline double first_order_density(double e1, double e2, const HurstTriple& h, double alpha) {
  return kh(e1, e2, h) * std::pow(1.0 + e1 * e1 + e2 * e2, -alpha);
}

inline double axis_exp(const HurstTriple& h, int i) { return 1.0 - 2.0 * (i == 1 ? h.h1() : h.h2()); }

} // namespace detail

// int_{|eta| <= R} K^H(eta) / (1+|eta|^2)^alpha d eta; the angular average of the
// axis singularities is exact (Beta factor), the radial integral adaptive.
inline double integral_first_order(const HurstTriple& h, double alpha, double R) {
  if (!(R > 0.0)) return 0.0;
  const double a1 = detail::axis_exp(h, 1), a2 = detail::axis_exp(h, 2), e = 1.0 + a1 + a2;
  auto g = [&](double r) { return std::pow(1.0 + r * r, -alpha) / (1.0 + std::pow(r, 1.0 + 2.0 * h.h0())); };
  const double c0 = std::min(R, 1.0);
  double total = fracwave::detail::integrate_power_origin(g, e, c0, 1e-9, 1e-300).value;
  if (R > c0) {
    std::vector<double> pts{c0};
    for (double p = 2.0; p < R; p *= 2.0) pts.push_back(p);
    pts.push_back(R);
    auto f = [&](double r) { return std::pow(r, e) * g(r); };
    total += fracwave::detail::integrate_pieces(f, pts, 1e-9, 1e-300).value;
  }
  return 2.0 * boost::math::beta(1.0 - h.h1(), 1.0 - h.h2()) * total;
}

// Contribution of quadrant q (0..3, counterclockwise) to integral_first_order,
// with the angular factor integrated numerically.
inline double integral_first_order_quadrant(const HurstTriple& h, double alpha, double R, int q) {
  const double a1 = detail::axis_exp(h, 1), a2 = detail::axis_exp(h, 2);
  const double A = kernels::angular_quadrant(q, 0.0, 0.0, 0.0, a1, a2, 1e-12);
  return integral_first_order(h, alpha, R) * A / (2.0 * boost::math::beta(1.0 - h.h1(), 1.0 - h.h2()));
}

// The same integrand over the box [-R, R]^2 by nested adaptive quadrature.
inline double integral_first_order_box(const HurstTriple& h, double alpha, double R) {
  const double a1 = detail::axis_exp(h, 1), a2 = detail::axis_exp(h, 2);
  auto pieces = [](double R) {
    std::vector<double> p{0.0};
    for (double x = std::ldexp(1.0, -detail::kFinePanels); x < R; x *= 2.0) p.push_back(x);
    p.push_back(R);
    return p;
  };
  const auto pts = pieces(R);
  auto inner = [&](double e1) {
    auto f = [&](double e2) {
      return std::pow(1.0 + e1 * e1 + e2 * e2, -alpha) / (1.0 + std::pow(std::hypot(e1, e2), 1.0 + 2.0 * h.h0()));
    };
    double s = fracwave::detail::integrate_power_origin(f, a2, pts[1], 1e-10, 1e-300).value;
    auto g = [&](double e2) { return std::pow(e2, a2) * f(e2); };
    s += fracwave::detail::integrate_pieces(g, std::vector<double>(pts.begin() + 1, pts.end()), 1e-10, 1e-300).value;
    return s;
  };
  double s = fracwave::detail::integrate_power_origin(inner, a1, pts[1], 1e-9, 1e-300).value;
  auto g = [&](double e1) { return std::pow(e1, a1) * inner(e1); };
  s += fracwave::detail::integrate_pieces(g, std::vector<double>(pts.begin() + 1, pts.end()), 1e-9, 1e-300).value;
  return 4.0 * s;
}

// ---------------------------------------------------------------------------
// The four integrals of the second-order lemma, truncated to the box
// {eta, eta~ in [0,R]^2} (J1: [-R,R]^4).

enum class J4Form { Printed, Reflected };

namespace detail {

// sum over the tensor rule of K^H(eta) / (1+|eta|^2)^alpha on [0,R]^2.
inline double first_order_tensor(const HurstTriple& h, double alpha, double R) {
  const Rule r1 = axis_rule(R, axis_exp(h, 1)), r2 = axis_rule(R, axis_exp(h, 2));
  double s = 0.0;
  for (std::size_t i = 0; i < r1.x.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < r2.x.size(); ++j) row += r2.w[j] * first_order_density(r1.x[i], r2.x[j], h, alpha);
    s += r1.w[i] * row;
  }
  return s;
}

inline double j1(const HurstTriple& h, const HurstTriple& ht, double alpha, double R) {
  // The integrand factorizes; the tensor sum is organized accordingly.
  return 16.0 * first_order_tensor(h, alpha, R) * first_order_tensor(ht, alpha, R);
}

inline double j2(const HurstTriple& h, const HurstTriple& ht, double alpha, double R) {
  const Rule ro = axis_rule(R, axis_exp(h, 2) + axis_exp(ht, 2) + 1.0);
  const Rule r1 = axis_rule(R, axis_exp(h, 1)), rt1 = axis_rule(R, axis_exp(ht, 1));
  double s = 0.0;
  for (std::size_t i = 0; i < ro.x.size(); ++i) {
    const double e2 = ro.x[i];
    const Rule ru = offset_rule(std::min(e2, R - e2));
    double acc = 0.0;
    for (std::size_t k = 0; k < ru.x.size(); ++k) {
      const double u = ru.x[k], et2 = e2 + u;
      double A = 0.0, B = 0.0;
      for (std::size_t j = 0; j < r1.x.size(); ++j) {
        const double e1 = r1.x[j];
        A += r1.w[j] * std::pow(1.0 + e1 * e1 + u * u, -alpha) * kh(e1, e2, h);
      }
      for (std::size_t j = 0; j < rt1.x.size(); ++j) {
        const double et1 = rt1.x[j];
        B += rt1.w[j] * std::pow(1.0 + et1 * et1 + u * u, -alpha) * kh(et1, et2, ht);
      }
      acc += ru.w[k] * A * B;
    }
    s += ro.w[i] * acc;
  }
  return s;
}

// Generic form: outer (p, q) in [0,R]^2, inner offsets u1 in [0, U1(p)], u2 in [0, U2(q)];
// `map` builds (eta, eta~) from (p, q, u1, u2); the weight is (1+u1^2+u2^2)^{-2 alpha}.
template <class U1, class U2, class Map>
double shifted_4d(const HurstTriple& h, const HurstTriple& ht, double alpha, double R, double e_p, double e_q, U1 u1f,
                  U2 u2f, Map map) {
  const Rule rp = axis_rule(R, e_p), rq = axis_rule(R, e_q);
  std::vector<double> rows(rp.x.size(), 0.0);
  for (std::size_t i = 0; i < rp.x.size(); ++i) {
    const double p = rp.x[i];
    const Rule ru1 = offset_rule(u1f(p));
    double row = 0.0;
    for (std::size_t j = 0; j < rq.x.size(); ++j) {
      const double q = rq.x[j];
      const Rule ru2 = offset_rule(u2f(q));
      double acc = 0.0;
      for (std::size_t a = 0; a < ru1.x.size(); ++a) {
        const double u1 = ru1.x[a];
        double col = 0.0;
        for (std::size_t b = 0; b < ru2.x.size(); ++b) {
          const double u2 = ru2.x[b];
          double eta[2], etat[2];
          map(p, q, u1, u2, eta, etat);
          col += ru2.w[b] * std::pow(1.0 + u1 * u1 + u2 * u2, -2.0 * alpha) * kh(eta[0], eta[1], h) *
                 kh(etat[0], etat[1], ht);
        }
        acc += ru1.w[a] * col;
      }
      row += rq.w[j] * acc;
    }
    rows[i] = rp.w[i] * row;
  }
  double s = 0.0;
  for (double v : rows) s += v;
  return s;
}

inline double j3(const HurstTriple& h, const HurstTriple& ht, double alpha, double R) {
  return shifted_4d(
      h, ht, alpha, R, axis_exp(h, 1) + axis_exp(ht, 1) + 1.0, axis_exp(h, 2) + axis_exp(ht, 2) + 1.0,
      [R](double p) { return std::min(p, R - p); }, [R](double q) { return std::min(q, R - q); },
      [](double p, double q, double u1, double u2, double* e, double* et) {
        e[0] = p;
        e[1] = q;
        et[0] = p + u1;
        et[1] = q + u2;
      });
}

inline double j4(const HurstTriple& h, const HurstTriple& ht, double alpha, double R, J4Form form) {
  const double ep = axis_exp(h, 1) + axis_exp(ht, 1) + 1.0, eq = axis_exp(h, 2) + axis_exp(ht, 2) + 1.0;
  auto u1f = [R](double p) { return std::min(p, R - p); };
  if (form == J4Form::Printed)
    // outer (eta_1, eta~_2); eta~_1 = eta_1 + u1, eta_2 = eta~_2 + u2
    return shifted_4d(h, ht, alpha, R, ep, eq, u1f, [R](double q) { return std::min(q, R - q); },
                      [](double p, double q, double u1, double u2, double* e, double* et) {
                        e[0] = p;
                        e[1] = q + u2;
                        et[0] = p + u1;
                        et[1] = q;
                      });
  // outer (eta_1, eta_2); eta~_1 = eta_1 + u1, eta~_2 = eta_2 - u2 with u2 <= eta_2 / 2
  return shifted_4d(h, ht, alpha, R, ep, eq, u1f, [](double q) { return 0.5 * q; },
                    [](double p, double q, double u1, double u2, double* e, double* et) {
                      e[0] = p;
                      e[1] = q;
                      et[0] = p + u1;
                      et[1] = q - u2;
                    });
}

} // namespace detail

inline double integral_J(int which, const HurstTriple& h, const HurstTriple& ht, double alpha, double R,
                         J4Form form = J4Form::Printed) {
  switch (which) {
  case 1: return detail::j1(h, ht, alpha, R);
  case 2: return detail::j2(h, ht, alpha, R);
  case 3: return detail::j3(h, ht, alpha, R);
  case 4: return detail::j4(h, ht, alpha, R, form);
  default: throw ValidationError(IssueCode::InvalidConfig, "integral_J: which must be 1..4");
  }
}

// Preconditions of the second-order lemma on (H, H~, alpha).
inline ValidationReport check_lemma_parameters(const HurstTriple& h, const HurstTriple& ht, double alpha) {
  ValidationReport r;
  for (const auto* x : {&h, &ht}) {
    if (!(x->h1() < 0.75 && x->h2() < 0.75))
      r.add(IssueCode::InvalidHurst, "second-order lemma requires H1, H2 < 3/4");
    if (!(x->sum() > 1.0 && x->sum() <= 1.25))
      r.add(IssueCode::InvalidHurst, "second-order lemma requires 1 < sum(H) <= 5/4");
  }
  const double lo = std::max(1.5 - h.sum(), 1.5 - ht.sum());
  if (!(alpha > lo && alpha < 0.5)) r.add(IssueCode::AlphaOutOfRange, "second-order lemma requires alpha in (3/2 - min sum, 1/2)");
  return r;
}

// int_{1/R <= |eta_i| <= R} K^H(eta)^2 d eta: both the axis singularity and the
// tail are truncated.
inline double k_l2_norm(const HurstTriple& h, double R) {
  const auto r = detail::dyadic_rule(1.0 / R, R);
  double s = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < r.x.size(); ++j) {
      const double k = detail::kh(r.x[i], r.x[j], h);
      row += r.w[j] * k * k;
    }
    s += r.w[i] * row;
  }
  return 4.0 * s;
}

// ---------------------------------------------------------------------------
// Convolution bound: int (1+|eta+eta~|^2)^{-alpha} (1+|eta~|^2)^{-1} d eta~
// against (1+|eta|^2)^{-(alpha - eps)}.

inline double conv_lhs(double alpha, double rho) {
  const double tol = 1e-9;
  // Angular integral at radius r of (1 + rho^2 + r^2 + 2 rho r cos th)^{-alpha}, th in [0, 2 pi].
  auto ang = [&](double r) {
    const double A = 1.0 + rho * rho + r * r, B = 2.0 * rho * r;
    const double C = 1.0 + (r - rho) * (r - rho);
    auto f = [&](double th) {
      const double c = std::cos(0.5 * th);
      return std::pow(C + 2.0 * B * c * c, -alpha);
    };
    if (B < 1e-3 * A) return fracwave::detail::gauss_legendre(f, 0.0, M_PI) * 2.0;
    // Near th = pi the integrand peaks with width ~ sqrt((A - B) / B); refine geometrically toward it.
    std::vector<double> pts{0.0, M_PI / 2.0};
    const double w = std::sqrt(C / B);
    for (double d = 0.5; d > 0.25 * w; d *= 0.25) pts.push_back(M_PI - d);
    pts.push_back(M_PI);
    return 2.0 * fracwave::detail::integrate_pieces(f, pts, tol, 1e-300).value;
  };
  auto g = [&](double r) { return r / (1.0 + r * r) * ang(r); };
  std::vector<double> pts{0.0, 1.0};
  for (double p = 2.0; p < 4.0 * (rho + 2.0); p *= 2.0) pts.push_back(p);
  for (double d : {-1.0, 0.0, 1.0})
    if (rho + d > 0.0) pts.push_back(rho + d);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const double X = pts.back();
  double total = fracwave::detail::integrate_pieces(g, pts, tol, 1e-300).value;
  // Tail [X, inf): r = X u^{-q}, q = 1/(2 alpha), makes the integrand regular at u = 0.
  const double q = 1.0 / (2.0 * alpha);
  auto tail = [&](double u) {
    if (u <= 0.0) return 0.0;
    const double r = X * std::pow(u, -q);
    return g(r) * X * q * std::pow(u, -q - 1.0);
  };
  total += fracwave::detail::integrate_gk(tail, 0.0, 1.0, tol, 1e-300).value;
  return total;
}

inline double conv_ratio(double alpha, double eps, double rho) {
  return conv_lhs(alpha, rho) * std::pow(1.0 + rho * rho, alpha - eps);
}

struct ConvBoundReport {
  double alpha = 0.0, eps = 0.0;
  std::vector<double> radii, ratios;
  double max_ratio = 0.0;
};

// Ratio at |eta| = 0 and |eta| = 2^{k / per_octave} for k = 0..max_exp*per_octave.
inline ConvBoundReport conv_bound_check(double alpha, double eps, int max_exp, int per_octave = 4, int threads = 1) {
  if (!(alpha > 0.0 && alpha < 0.5 && eps >= 0.0 && eps < alpha))
    throw ValidationError(IssueCode::AlphaOutOfRange, "conv_bound_check: requires 0 <= eps < alpha < 1/2");
  ConvBoundReport r;
  r.alpha = alpha;
  r.eps = eps;
  r.radii.push_back(0.0);
  for (int k = 0; k <= max_exp * per_octave; ++k) r.radii.push_back(std::pow(2.0, double(k) / per_octave));
  r.ratios.assign(r.radii.size(), 0.0);
  fracwave::detail::parallel_for(r.radii.size(), threads, [&](std::size_t i) { r.ratios[i] = conv_ratio(alpha, eps, r.radii[i]); });
  for (double v : r.ratios) r.max_ratio = std::max(r.max_ratio, v);
  return r;
}

} // namespace fracwave::oracles

#endif
