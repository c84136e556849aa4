#ifndef FRACWAVE_CORE_HPP
#define FRACWAVE_CORE_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracwave {

// Error hierarchy shared by all modules. The CLI maps ValidationError to
// exit code 2 and NumericalError to exit code 3.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class IssueCode {
  InvalidHurst,
  NyquistViolation,
  AlphaOutOfRange,
  InvalidGrid,
  InvalidSobolev,
  InvalidSamples,
  InvalidConfig
};

inline const char* to_string(IssueCode c) {
  switch (c) {
  case IssueCode::InvalidHurst: return "InvalidHurst";
  case IssueCode::NyquistViolation: return "NyquistViolation";
  case IssueCode::AlphaOutOfRange: return "AlphaOutOfRange";
  case IssueCode::InvalidGrid: return "InvalidGrid";
  case IssueCode::InvalidSobolev: return "InvalidSobolev";
  case IssueCode::InvalidSamples: return "InvalidSamples";
  case IssueCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

struct Issue {
  IssueCode code;
  std::string message;
};

struct ValidationReport {
  std::vector<Issue> issues;

  bool ok() const { return issues.empty(); }
  bool has(IssueCode c) const {
    for (const auto& i : issues)
      if (i.code == c) return true;
    return false;
  }
  void add(IssueCode c, std::string msg) { issues.push_back({c, std::move(msg)}); }
};

class ValidationError : public Error {
public:
  explicit ValidationError(ValidationReport r)
      : Error(summary(r)), report_(std::move(r)) {}
  ValidationError(IssueCode c, const std::string& msg)
      : ValidationError(single(c, msg)) {}
  const ValidationReport& report() const { return report_; }

private:
  static ValidationReport single(IssueCode c, const std::string& msg) {
    ValidationReport r;
    r.add(c, msg);
    return r;
  }
  static std::string summary(const ValidationReport& r) {
    std::string s = "invalid configuration:";
    for (const auto& i : r.issues) s += std::string(" [") + to_string(i.code) + "] " + i.message + ";";
    return s;
  }
  ValidationReport report_;
};

// Numerical failure carrying a machine-readable diagnostics payload (JSON text).
class NumericalError : public Error {
public:
  NumericalError(std::string kind, const std::string& msg, std::string diagnostics = "{}")
      : Error(kind + ": " + msg), kind_(std::move(kind)), diagnostics_(std::move(diagnostics)) {}
  const std::string& kind() const { return kind_; }
  const std::string& diagnostics() const { return diagnostics_; }

private:
  std::string kind_;
  std::string diagnostics_;
};

enum class Regime { Subcritical, TargetWindow, Divergent };

inline const char* to_string(Regime r) {
  switch (r) {
  case Regime::Subcritical: return "Subcritical";
  case Regime::TargetWindow: return "TargetWindow";
  case Regime::Divergent: return "Divergent";
  }
  return "Unknown";
}

inline Regime classify_regime_sum(double sum) {
  if (sum > 1.25) return Regime::Subcritical;
  if (sum > 1.0) return Regime::TargetWindow;
  return Regime::Divergent;
}

// Hurst indices (h0 time, h1 and h2 space), each in (0,1).
class HurstTriple {
public:
  HurstTriple() : HurstTriple(0.5, 0.5, 0.5) {}
  HurstTriple(double h0, double h1, double h2) : h_{h0, h1, h2} {
    for (int i = 0; i < 3; ++i)
      if (!(h_[i] > 0.0 && h_[i] < 1.0))
        throw ValidationError(IssueCode::InvalidHurst,
                              "h" + std::to_string(i) + " = " + std::to_string(h_[i]) + " not in (0,1)");
  }

  double h0() const { return h_[0]; }
  double h1() const { return h_[1]; }
  double h2() const { return h_[2]; }
  double operator[](int i) const { return h_[i]; }
  double sum() const { return h_[0] + h_[1] + h_[2]; }
  Regime regime() const { return classify_regime_sum(sum()); }
  bool solver_admissible() const { return h_[1] < 0.75 && h_[2] < 0.75 && sum() > 1.0; }

  bool operator==(const HurstTriple& o) const {
    return h_[0] == o.h_[0] && h_[1] == o.h_[1] && h_[2] == o.h_[2];
  }

private:
  double h_[3];
};

inline Regime classify_regime(const HurstTriple& h) { return h.regime(); }

struct GridSpec {
  int level = 5;         // frequency cutoff 2^level
  double period = 4.0;   // torus [-L, L]^2
  int nx = 128;          // spatial points per axis
  int nt = 16;           // time steps
  double horizon = 1.0;  // T
  int n_xi = 0;          // temporal-frequency lattice size at `level`; 0 selects 8 * 2^level

  int xi_points() const { return n_xi > 0 ? n_xi : 8 * (1 << level); }
  double dt() const { return horizon / nt; }
  double dx() const { return 2.0 * period / nx; }
  double nyquist() const { return M_PI * nx / (2.0 * period); }
  double eta_step() const { return M_PI / period; }
  // Temporal-frequency cell width; shared by all levels so the lattices nest.
  double xi_step() const { return std::ldexp(2.0, level) / xi_points(); }
};

enum class Window { Bump, One };

inline const char* to_string(Window w) { return w == Window::Bump ? "bump" : "one"; }

struct SobolevSpec {
  double alpha = 0.0;
  int p = 2;
  Window window = Window::Bump;
};

struct SolverOptions {
  double t0 = 0.5;
  double tol = 1e-8;
  int max_iter = 60;
  int max_halvings = 6;
};

// Initial data given as a small set of real Fourier modes: sum of amp*cos(k.x*pi/L + phase).
struct InitialMode {
  int k1 = 0, k2 = 0;
  double amp = 0.0, phase = 0.0;
};

struct InitialDataSpec {
  std::vector<InitialMode> phi0;
  std::vector<InitialMode> phi1;
};

struct OracleOptions {
  std::string integral = "first_order";  // first_order | J1..J4 | k_l2 | conv_bound
  std::vector<double> htilde;            // empty: same as hurst
  int r_min_exp = 4;
  int r_max_exp = 9;
  double eps = 0.1;
};

struct RunConfig {
  HurstTriple hurst;
  GridSpec grid;
  SobolevSpec sobolev;
  std::uint64_t seed = 1;
  int samples = 1;
  std::string output_dir = "out";
  std::vector<int> levels;    // studies over several cutoff levels
  std::vector<double> times;  // evaluation times (sigma, diverge, converge)
  SolverOptions solver;
  InitialDataSpec initial;
  OracleOptions oracle;
};

// Default alpha: midpoint of (3/2 - sum(H), 1/2).
inline double default_alpha(const HurstTriple& h) { return 0.5 * ((1.5 - h.sum()) + 0.5); }

enum class Purpose {
  Standard,    // path construction and Cauchy studies: 3/2 - sum(H) < alpha < 1/2
  Divergence,  // divergence study: sum(H) <= 1, alpha > 0
  Solver,      // fixed-point solver: standard plus solver admissibility of H
  Quadrature   // deterministic quadratures: grid and Sobolev order unconstrained
};

inline ValidationReport validate_grid(const GridSpec& g) {
  ValidationReport r;
  if (g.level < 0) r.add(IssueCode::InvalidGrid, "level must be >= 0");
  if (!(g.period >= 4.0)) r.add(IssueCode::InvalidGrid, "period L must be >= 4");
  if (g.nx < 4 || g.nx % 2 != 0) r.add(IssueCode::InvalidGrid, "nx must be even and >= 4");
  if (g.nt < 2) r.add(IssueCode::InvalidGrid, "nt must be >= 2");
  if (!(g.horizon > 0.0 && g.horizon <= 1.0)) r.add(IssueCode::InvalidGrid, "horizon T must be in (0,1]");
  if (g.level >= 0 && g.level < 30) {
    if (g.n_xi < 0) r.add(IssueCode::InvalidGrid, "n_xi must be >= 0");
    if (g.n_xi > 0 && g.n_xi % (1 << g.level) != 0)
      r.add(IssueCode::InvalidGrid, "n_xi must be a multiple of 2^level so that cutoff levels nest");
    if (g.nx >= 4 && g.period > 0.0 && g.nyquist() < std::ldexp(1.0, g.level))
      r.add(IssueCode::NyquistViolation, "pi*nx/(2L) = " + std::to_string(g.nyquist()) +
                                             " < 2^level = " + std::to_string(1 << g.level));
  } else if (g.level >= 30) {
    r.add(IssueCode::InvalidGrid, "level too large");
  }
  return r;
}

inline ValidationReport validate_config(const RunConfig& c, Purpose purpose = Purpose::Standard) {
  ValidationReport r = validate_grid(c.grid);
  if (c.samples < 1) r.add(IssueCode::InvalidSamples, "samples must be >= 1");
  if (c.sobolev.p != 2 && c.sobolev.p != 4) r.add(IssueCode::InvalidSobolev, "p must be 2 or 4");
  for (int n : c.levels)
    if (n < 0 || n > c.grid.level)
      r.add(IssueCode::InvalidGrid, "study level " + std::to_string(n) + " outside [0, grid.level]");
  for (double t : c.times)
    if (!(t >= 0.0 && t <= c.grid.horizon))
      r.add(IssueCode::InvalidGrid, "study time " + std::to_string(t) + " outside [0, horizon]");

  const double a = c.sobolev.alpha, lo = 1.5 - c.hurst.sum();
  switch (purpose) {
  case Purpose::Standard:
  case Purpose::Solver:
    if (!(a > lo && a < 0.5))
      r.add(IssueCode::AlphaOutOfRange, "alpha = " + std::to_string(a) + " not in (" + std::to_string(lo) + ", 0.5)");
    if (purpose == Purpose::Solver) {
      if (!c.hurst.solver_admissible())
        r.add(IssueCode::InvalidHurst, "solver requires h1 < 3/4, h2 < 3/4 and sum(H) > 1");
      if (!(c.solver.t0 > 0.0 && c.solver.t0 <= c.grid.horizon))
        r.add(IssueCode::InvalidGrid, "solver T0 must be in (0, horizon]");
      if (!(c.solver.tol > 0.0) || c.solver.max_iter < 1)
        r.add(IssueCode::InvalidConfig, "solver tol must be > 0 and max_iter >= 1");
    }
    break;
  case Purpose::Divergence:
    if (!(a > 0.0)) r.add(IssueCode::AlphaOutOfRange, "alpha must be > 0 for the divergence study");
    break;
  case Purpose::Quadrature:
    break;
  }
  return r;
}

inline void require_valid(const RunConfig& c, Purpose purpose = Purpose::Standard) {
  auto r = validate_config(c, purpose);
  if (!r.ok()) throw ValidationError(std::move(r));
}

} // namespace fracwave

#endif
