#ifndef FRACWAVE_RENORM_HPP
#define FRACWAVE_RENORM_HPP

#include <cmath>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "analysis.hpp"
#include "core.hpp"
#include "detail/parallel.hpp"
#include "detail/quadrature.hpp"
#include "kernels.hpp"
#include "noise.hpp"
#include "objects.hpp"

namespace fracwave::renorm {

using fracwave::detail::MeanSe;

// sigma^n(t) = 2 B(1-H1, 1-H2) int_0^{2^n} r^{3-2(H1+H2)} Gamma^{H0,n}_t(r) dr,
// the continuum variance of Psi^n_t(x) with c_H = 1.
inline double sigma_exact(const HurstTriple& h, int n, double t, double rel_tol = 1e-6) {
  if (t < 0.0 || t > 1.0) throw ValidationError(IssueCode::InvalidConfig, "sigma_exact: t must lie in [0, 1]");
  if (t == 0.0 || n <= 0) return 0.0;
  const double top = std::ldexp(1.0, n), e = 3.0 - 2.0 * (h.h1() + h.h2());
  const double inner_tol = 0.01 * rel_tol;
  auto g = [&](double r) { return kernels::big_gamma_n(r, t, h.h0(), n, inner_tol); };
  const double c0 = std::min(top, 1.0);
  double total = fracwave::detail::integrate_power_origin(g, e, c0, rel_tol, 1e-300).value;
  if (top > c0) {
    std::vector<double> pts{c0};
    for (double p = 2.0 * c0; p < top; p *= 2.0) pts.push_back(p);
    pts.push_back(top);
    auto f = [&](double r) { return std::pow(r, e) * g(r); };
    total += fracwave::detail::integrate_pieces(f, pts, rel_tol, 1e-300).value;
  }
  return 2.0 * boost::math::beta(1.0 - h.h1(), 1.0 - h.h2()) * total;
}

struct SigmaRow {
  int n = 0;
  double t = 0.0;
  double value = 0.0;
};

struct SigmaTable {
  HurstTriple hurst;
  double rel_tol = 1e-6;
  std::vector<SigmaRow> rows;

  double at(int n, double t) const {
    for (const auto& r : rows)
      if (r.n == n && r.t == t) return r.value;
    throw Error("SigmaTable: no row for the requested (n, t)");
  }
};

inline SigmaTable sigma_table(const HurstTriple& h, const std::vector<int>& levels, const std::vector<double>& times,
                              int threads = 1, double rel_tol = 1e-6) {
  SigmaTable tab;
  tab.hurst = h;
  tab.rel_tol = rel_tol;
  for (int n : levels)
    for (double t : times) tab.rows.push_back({n, t, 0.0});
  fracwave::detail::parallel_for(tab.rows.size(), threads, [&](std::size_t i) {
    tab.rows[i].value = sigma_exact(h, tab.rows[i].n, tab.rows[i].t, rel_tol);
  });
  return tab;
}

// Exponent of 2 in the asymptotic law sigma^n_t ~ c t 2^{2n(3/2 - sum H)}.
inline double expected_slope(const HurstTriple& h) { return 2.0 * (1.5 - h.sum()); }

struct SlopeFit {
  double slope = 0.0;
  double slope_se = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // 95% Student-t interval
  double intercept = 0.0;
  double expected = 0.0;
  // Slope of log2(sigma^{n+1} - sigma^n): insensitive to an additive constant in sigma^n.
  double difference_slope = 0.0;
  // sigma^{n_max}(t) / sigma^{n_max}(t/2): tends to 2 under linearity in t.
  double t_ratio = 0.0;
  std::vector<int> levels;
  std::vector<double> values;
};

namespace detail {

struct Line {
  double slope = 0.0, intercept = 0.0, slope_se = 0.0;
};

inline Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t k = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(k);
  my /= double(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw NumericalError("FitDegeneracy", "least squares: abscissae are all equal");
  Line l;
  l.slope = sxy / sxx;
  l.intercept = my - l.slope * mx;
  if (k > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double r = y[i] - l.intercept - l.slope * x[i];
      rss += r * r;
    }
    l.slope_se = std::sqrt(rss / double(k - 2) / sxx);
  }
  return l;
}

} // namespace detail

inline SlopeFit sigma_slope_fit(const HurstTriple& h, double t, const std::vector<int>& levels, int threads = 1,
                                double rel_tol = 1e-6) {
  if (h.regime() != Regime::TargetWindow)
    throw ValidationError(IssueCode::InvalidHurst, "sigma_slope_fit: Hurst triple must lie in the target window");
  if (levels.size() < 4) throw ValidationError(IssueCode::InvalidConfig, "sigma_slope_fit: at least 4 levels required");
  const int top = *std::max_element(levels.begin(), levels.end());
  std::vector<double> times{t};
  if (t > 0.0) times.push_back(0.5 * t);
  const auto tab = sigma_table(h, levels, times, threads, rel_tol);

  SlopeFit fit;
  fit.levels = levels;
  fit.expected = expected_slope(h);
  std::vector<double> x, y;
  for (int n : levels) {
    const double v = tab.at(n, t);
    if (!(v > 0.0)) throw NumericalError("FitDegeneracy", "sigma_slope_fit: nonpositive sigma at level " + std::to_string(n));
    fit.values.push_back(v);
    x.push_back(n);
    y.push_back(std::log2(v));
  }
  const auto line = detail::least_squares(x, y);
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.slope_se = line.slope_se;
  const double q = boost::math::quantile(boost::math::students_t(double(levels.size() - 2)), 0.975);
  fit.ci_low = fit.slope - q * fit.slope_se;
  fit.ci_high = fit.slope + q * fit.slope_se;

  std::vector<double> dx, dy;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    const double d = fit.values[i + 1] - fit.values[i];
    if (levels[i + 1] == levels[i] + 1 && d > 0.0) {
      dx.push_back(levels[i]);
      dy.push_back(std::log2(d));
    }
  }
  if (dx.size() >= 2) fit.difference_slope = detail::least_squares(dx, dy).slope;
  fit.t_ratio = tab.at(top, t) / tab.at(top, 0.5 * t);
  return fit;
}

// ---------------------------------------------------------------------------
// Divergence of the Wick square.

struct DivergenceRow {
  int n = 0;
  MeanSe moment;      // E || Psi2^n(t) ||^2 in W^{-2 alpha, 2}(D)
  MeanSe increment;   // paired difference with the previous row's level
};

struct DivergenceStudy {
  HurstTriple hurst;
  double alpha = 0.0, t = 0.0;
  int samples = 0;
  std::vector<DivergenceRow> rows;

  // Every increment exceeds its standard error by the factor k.
  bool strictly_increasing(double k = 1.0) const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (!(rows[i].increment.mean > k * rows[i].increment.se)) return false;
    return true;
  }

  // Each successive difference is at most `factor` times the previous one.
  bool differences_shrink(double factor = 0.75) const {
    for (std::size_t i = 2; i < rows.size(); ++i)
      if (!(std::abs(rows[i].increment.mean) <= factor * std::abs(rows[i - 1].increment.mean))) return false;
    return true;
  }
};

// Squared W^{-2 alpha,2}(D) norm of the Wick square of Psi^n(t) for each level,
// all levels from one seed.
inline std::vector<double> wick_square_norms(const RunConfig& cfg, const std::vector<int>& levels, double t,
                                             std::uint64_t seed) {
  std::vector<double> out(levels.size(), 0.0);
  std::vector<int> positive;
  for (int n : levels)
    if (n > 0) positive.push_back(n);
  if (positive.empty() || t <= 0.0) return out;
  std::sort(positive.begin(), positive.end());
  const auto top = noise::sample_modes(cfg, positive.back(), seed);
  const auto spec = objects::synthesize_spectra(top, positive, {t}, 1);
  const auto var = objects::variance_table(top, positive, {t});
  const std::size_t P = std::size_t(cfg.grid.nx) * cfg.grid.nx;
  std::vector<double> f(P);
  objects::CBuffer buf;
  for (std::size_t b = 0; b < positive.size(); ++b) {
    objects::spectrum_to_grid(top, spec.values[b][0], cfg.grid.nx, f.data(), buf);
    for (auto& v : f) v = v * v - var[b][0];
    const double nrm = analysis::sobolev_norm(f, cfg.grid, -2.0 * cfg.sobolev.alpha, 2, cfg.sobolev.window);
    for (std::size_t i = 0; i < levels.size(); ++i)
      if (levels[i] == positive[b]) out[i] = nrm * nrm;
  }
  return out;
}

inline DivergenceStudy divergence_study(const RunConfig& cfg, std::vector<int> levels, double t, int samples,
                                        int threads = 1) {
  if (samples < 8) throw ValidationError(IssueCode::InvalidSamples, "divergence_study: at least 8 samples required");
  if (!(cfg.sobolev.alpha > 0.0)) throw ValidationError(IssueCode::AlphaOutOfRange, "divergence_study: alpha must be > 0");
  if (!(t > 0.0 && t <= cfg.grid.horizon)) throw ValidationError(IssueCode::InvalidConfig, "divergence_study: t outside (0, T]");
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::vector<std::vector<double>> per(samples);
  fracwave::detail::parallel_for(std::size_t(samples), fracwave::detail::resolve_threads(threads), [&](std::size_t k) {
    per[k] = wick_square_norms(cfg, levels, t, analysis::sample_seed(cfg.seed, k));
  });
  DivergenceStudy st;
  st.hurst = cfg.hurst;
  st.alpha = cfg.sobolev.alpha;
  st.t = t;
  st.samples = samples;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    DivergenceRow r;
    r.n = levels[i];
    std::vector<double> v(samples), d(samples, 0.0);
    for (int k = 0; k < samples; ++k) {
      v[k] = per[k][i];
      if (i > 0) d[k] = per[k][i] - per[k][i - 1];
    }
    r.moment = fracwave::detail::mean_se(v);
    if (i > 0) r.increment = fracwave::detail::mean_se(d);
    st.rows.push_back(r);
  }
  return st;
}

} // namespace fracwave::renorm

#endif
