#ifndef FRACWAVE_CLI_HPP
#define FRACWAVE_CLI_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "analysis.hpp"
#include "config.hpp"
#include "core.hpp"
#include "detail/io.hpp"
#include "detail/parallel.hpp"
#include "noise.hpp"
#include "objects.hpp"
#include "oracles.hpp"
#include "renorm.hpp"
#include "solver.hpp"

namespace fracwave::cli {

using fracwave::detail::Csv;
using fracwave::detail::write_atomic;

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"sample", "sigma", "converge", "diverge", "solve", "oracle", "crosscheck"};
  return names;
}

inline std::string usage() {
  std::string s = "usage: fracwave <subcommand> --config FILE [--seed N] [--samples N] [--threads N] [--out DIR]\n"
                  "subcommands:";
  for (const auto& n : subcommands()) s += " " + n;
  return s + "\n";
}

struct Invocation {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  int threads = 0;
  std::string out;
};

// Everything written by a run; file names are relative to the output directory.
class Outputs {
public:
  explicit Outputs(std::string dir) : dir_(std::move(dir)) {}
  void write(const std::string& name, const std::string& bytes) {
    write_atomic((std::filesystem::path(dir_) / name).string(), bytes);
    names_.push_back(name);
  }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& dir() const { return dir_; }

private:
  std::string dir_;
  std::vector<std::string> names_;
};

// Seeds of the run: one per sample for crosscheck, else the base seed.
inline std::vector<std::uint64_t> seed_set(const std::string& cmd, const RunConfig& c) {
  if (cmd == "crosscheck") {
    std::vector<std::uint64_t> s;
    for (int i = 0; i < c.samples; ++i) s.push_back(analysis::sample_seed(c.seed, std::uint64_t(i)));
    return s;
  }
  return {c.seed};
}

inline json make_manifest(const std::string& cmd, const RunConfig& c, const std::vector<std::string>& outputs) {
  const json cj = config_to_json(c);
  const std::string hash = fracwave::detail::hex64(fracwave::detail::fnv1a(cj.dump()));
  const auto seeds = seed_set(cmd, c);
  std::string id_src = cmd + ":" + hash;
  for (auto s : seeds) id_src += ":" + std::to_string(s);
  return json{{"subcommand", cmd},
              {"config_hash", hash},
              {"seeds", seeds},
              {"run_id", fracwave::detail::hex64(fracwave::detail::fnv1a(id_src)).substr(0, 12)},
              {"outputs", outputs},
              {"config", cj}};
}

namespace detail {

inline ValidationReport check_levels_times(const RunConfig& c, bool need_times) {
  ValidationReport r;
  for (int n : c.levels)
    if (n < 1 || n > 20) r.add(IssueCode::InvalidConfig, "level " + std::to_string(n) + " outside [1, 20]");
  if (need_times && c.times.empty()) r.add(IssueCode::InvalidConfig, "'times' must not be empty");
  for (double t : c.times)
    if (!(t > 0.0 && t <= 1.0)) r.add(IssueCode::InvalidConfig, "time " + std::to_string(t) + " outside (0, 1]");
  return r;
}

inline void require(ValidationReport r) {
  if (!r.ok()) throw ValidationError(std::move(r));
}

inline std::vector<int> default_levels(const RunConfig& c, int lo, int hi) {
  if (!c.levels.empty()) {
    auto v = c.levels;
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  }
  std::vector<int> v;
  for (int n = lo; n <= hi; ++n) v.push_back(n);
  return v;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Subcommands.

inline void cmd_sample(const RunConfig& c, int threads, Outputs& out) {
  require_valid(c);
  const auto modes = noise::sample_modes(c, c.grid.level, c.seed);
  out.write("modes.fwms", noise::encode_mode_snapshot(modes));
  const auto path = objects::build_enhanced_path(c, c.grid.level, c.seed, threads);
  Csv csv({"component", "order", "p", "norm"});
  const auto nr = analysis::epath_norm(path, c.sobolev, threads);
  for (int k = 0; k < 4; ++k) {
    out.write(std::string(objects::kComponentNames[k]) + ".fwav", objects::encode_field_snapshot(path.component(k)));
    csv.row(std::string(objects::kComponentNames[k]), nr.orders[k], nr.p, nr.values[k]);
  }
  out.write("sample.csv", csv.text());
}

inline void cmd_sigma(const RunConfig& c, int threads, Outputs& out) {
  auto r = detail::check_levels_times(c, false);
  detail::require(r);
  const auto levels = detail::default_levels(c, 1, c.grid.level);
  const std::vector<double> times = c.times.empty() ? std::vector<double>{1.0} : c.times;
  const auto tab = renorm::sigma_table(c.hurst, levels, times, threads);
  Csv csv({"n", "t", "sigma"});
  for (const auto& row : tab.rows) csv.row(row.n, row.t, row.value);
  out.write("sigma.csv", csv.text());
  if (c.hurst.regime() == Regime::TargetWindow && levels.size() >= 4) {
    const double t = *std::max_element(times.begin(), times.end());
    const auto f = renorm::sigma_slope_fit(c.hurst, t, levels, threads);
    Csv fit({"t", "slope", "slope_se", "ci_low", "ci_high", "expected", "difference_slope", "t_ratio"});
    fit.row(t, f.slope, f.slope_se, f.ci_low, f.ci_high, f.expected, f.difference_slope, f.t_ratio);
    out.write("sigma_fit.csv", fit.text());
  }
}

inline void cmd_converge(const RunConfig& c, int threads, Outputs& out) {
  require_valid(c);
  const auto levels = detail::default_levels(c, 1, c.grid.level);
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) pairs.push_back({levels[i], levels[i + 1]});
  const double t = c.times.empty() ? c.grid.horizon : c.times.back();
  const double s = c.times.size() >= 2 ? c.times.front() : 0.5 * t;
  const auto rows = analysis::mc_increment_table(c, pairs, s, t, {0.0, 0.0}, c.samples, threads);
  Csv csv({"component", "n", "m", "s", "t", "estimate", "se"});
  for (const auto& row : rows)
    csv.row(std::string(objects::kComponentNames[row.component]), row.n, row.m, row.s, row.t, row.estimate.mean,
            row.estimate.se);
  out.write("converge.csv", csv.text());
}

inline void cmd_diverge(const RunConfig& c, int threads, Outputs& out) {
  require_valid(c, Purpose::Divergence);
  const auto levels = detail::default_levels(c, 0, c.grid.level);
  const double t = c.times.empty() ? c.grid.horizon : c.times.back();
  const auto st = renorm::divergence_study(c, levels, t, c.samples, threads);
  Csv csv({"n", "t", "moment", "moment_se", "increment", "increment_se"});
  for (const auto& row : st.rows) csv.row(row.n, t, row.moment.mean, row.moment.se, row.increment.mean, row.increment.se);
  out.write("diverge.csv", csv.text());
  Csv sum({"alpha", "samples", "strictly_increasing", "differences_shrink"});
  sum.row(st.alpha, st.samples, int(st.strictly_increasing()), int(st.differences_shrink()));
  out.write("diverge_summary.csv", sum.text());
}

inline void cmd_solve(const RunConfig& c, int threads, Outputs& out) {
  require_valid(c, Purpose::Solver);
  const auto path = objects::build_enhanced_path(c, c.grid.level, c.seed, threads);
  const auto data = solver::make_initial_data(c.grid, c.initial);
  const auto res = solver::picard_solve(path, data, c.solver, threads);
  const auto u = solver::reconstruct_u(path, res.w);
  out.write("w.fwav", objects::encode_field_snapshot(res.w));
  out.write("u.fwav", objects::encode_field_snapshot(u));
  Csv csv({"iteration", "update", "ratio"});
  for (std::size_t k = 0; k < res.diag.updates.size(); ++k)
    csv.row(int(k + 1), res.diag.updates[k], k == 0 ? 0.0 : res.diag.ratios[k - 1]);
  out.write("solve.csv", csv.text());
  out.write("solve_diagnostics.json", res.diag.to_json().dump(2) + "\n");
}

inline void cmd_oracle(const RunConfig& c, int threads, Outputs& out) {
  const auto& o = c.oracle;
  const HurstTriple ht = o.htilde.empty() ? c.hurst : HurstTriple(o.htilde[0], o.htilde[1], o.htilde[2]);
  const double a = c.sobolev.alpha;
  if (o.r_min_exp > o.r_max_exp || o.r_max_exp > 20)
    throw ValidationError(IssueCode::InvalidConfig, "oracle radii: need r_min_exp <= r_max_exp <= 20");
  Csv summary({"integral", "verdict", "max_ratio"});
  if (o.integral == "conv_bound") {
    const auto r = oracles::conv_bound_check(a, o.eps, o.r_max_exp, 4, threads);
    Csv csv({"eta", "ratio"});
    for (std::size_t i = 0; i < r.radii.size(); ++i) csv.row(r.radii[i], r.ratios[i]);
    out.write("oracle.csv", csv.text());
    summary.row(o.integral, std::string("n/a"), r.max_ratio);
    out.write("oracle_summary.csv", summary.text());
    return;
  }
  std::function<double(double)> f;
  if (o.integral == "first_order") f = [&](double R) { return oracles::integral_first_order(c.hurst, a, R); };
  else if (o.integral == "k_l2") f = [&](double R) { return oracles::k_l2_norm(c.hurst, R); };
  else if (o.integral.size() == 2 && o.integral[0] == 'J' && o.integral[1] >= '1' && o.integral[1] <= '4') {
    const int w = o.integral[1] - '0';
    f = [&, w](double R) { return oracles::integral_J(w, c.hurst, ht, a, R); };
  } else {
    throw ValidationError(IssueCode::InvalidConfig, "unknown oracle integral '" + o.integral + "'");
  }
  const auto rep = oracles::truncation_study(o.integral, {{"alpha", a}}, o.r_min_exp, o.r_max_exp, f, threads);
  Csv csv({"radius", "value", "ratio"});
  for (std::size_t i = 0; i < rep.radii.size(); ++i)
    csv.row(rep.radii[i], rep.values[i], i >= 2 ? rep.ratios[i - 2] : 0.0);
  out.write("oracle.csv", csv.text());
  summary.row(o.integral, std::string(oracles::to_string(rep.verdict)), rep.ratios.empty() ? 0.0 : rep.ratios.back());
  out.write("oracle_summary.csv", summary.text());
}

inline void cmd_crosscheck(const RunConfig& c, int threads, Outputs& out) {
  require_valid(c, Purpose::Solver);
  const auto data = solver::make_initial_data(c.grid, c.initial);
  Csv csv({"seed", "t0", "iterations", "residual", "relative_l2"});
  for (auto seed : seed_set("crosscheck", c)) {
    const auto path = objects::build_enhanced_path(c, c.grid.level, seed, threads);
    const auto res = solver::picard_solve(path, data, c.solver, threads);
    const auto u = solver::reconstruct_u(path, res.w);
    const auto direct = solver::integrate_renormalized_pde(c, c.grid.level, seed, data, res.diag.t0, {}, threads);
    csv.row(static_cast<unsigned long long>(seed), res.diag.t0, res.diag.iterations, res.diag.residual,
            solver::relative_l2(direct, u));
  }
  out.write("crosscheck.csv", csv.text());
}

// ---------------------------------------------------------------------------

inline int dispatch(const Invocation& inv, std::ostream& out, std::ostream& err) {
  static const std::map<std::string, std::function<void(const RunConfig&, int, Outputs&)>> table{
      {"sample", cmd_sample}, {"sigma", cmd_sigma},   {"converge", cmd_converge},    {"diverge", cmd_diverge},
      {"solve", cmd_solve},   {"oracle", cmd_oracle}, {"crosscheck", cmd_crosscheck}};
  const auto it = table.find(inv.command);
  if (it == table.end()) {
    err << "unknown subcommand '" << inv.command << "'\n" << usage();
    return 1;
  }
  auto parsed = load_config_file(inv.config_path);
  if (!parsed.report.ok()) {
    err << report_to_json(parsed.report).dump() << "\n";
    return 2;
  }
  RunConfig c = parsed.config;
  if (inv.seed) c.seed = *inv.seed;
  if (inv.samples) c.samples = *inv.samples;
  if (!inv.out.empty()) c.output_dir = inv.out;
  const int threads = fracwave::detail::resolve_threads(inv.threads);
  Outputs files(c.output_dir);
  try {
    it->second(c, threads, files);
    files.write("manifest.json", make_manifest(inv.command, c, files.names()).dump(2) + "\n");
  } catch (const ValidationError& e) {
    err << report_to_json(e.report()).dump() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    json d{{"kind", e.kind()}, {"message", e.what()}, {"subcommand", inv.command}};
    try {
      d["diagnostics"] = json::parse(e.diagnostics());
    } catch (const json::parse_error&) {
      d["diagnostics"] = e.diagnostics();
    }
    write_atomic((std::filesystem::path(c.output_dir) / "diagnostics.json").string(), d.dump(2) + "\n");
    err << e.what() << "\n";
    return 3;
  }
  out << "wrote " << files.names().size() << " files to " << c.output_dir << "\n";
  return 0;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"fracwave: fractional noise wave equation studies"};
  Invocation inv;
  std::uint64_t seed = 0;
  int samples = 0;
  app.add_option("subcommand", inv.command, "one of: sample sigma converge diverge solve oracle crosscheck")->required();
  app.add_option("--config", inv.config_path, "JSON config file")->required();
  auto* so = app.add_option("--seed", seed, "base seed (overrides the config)");
  auto* sa = app.add_option("--samples", samples, "Monte Carlo samples or seeds (overrides the config)");
  app.add_option("--threads", inv.threads, "worker threads (default: FRACWAVE_THREADS, else 1)");
  app.add_option("--out", inv.out, "output directory (overrides the config)");
  std::vector<const char*> argv{"fracwave"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << usage();
    return 1;
  }
  if (*so) inv.seed = seed;
  if (*sa) inv.samples = samples;
  try {
    return dispatch(inv, out, err);
  } catch (const ValidationError& e) {
    err << report_to_json(e.report()).dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace fracwave::cli

#endif
