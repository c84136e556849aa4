#ifndef FRACWAVE_CONFIG_HPP
#define FRACWAVE_CONFIG_HPP

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "core.hpp"

namespace fracwave {

using json = nlohmann::json;

namespace detail {

inline void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed,
                       ValidationReport& r) {
  if (!j.is_object()) {
    r.add(IssueCode::InvalidConfig, where + " must be an object");
    return;
  }
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) r.add(IssueCode::InvalidConfig, "unknown key '" + where + it.key() + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where, ValidationReport& r) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const std::exception&) {
    r.add(IssueCode::InvalidConfig, "bad type for '" + where + key + "'");
  }
}

inline std::vector<InitialMode> read_modes(const json& j, const std::string& where, ValidationReport& r) {
  std::vector<InitialMode> out;
  if (!j.is_array()) {
    r.add(IssueCode::InvalidConfig, where + " must be an array");
    return out;
  }
  for (const auto& m : j) {
    check_keys(m, where + "[].", {"k", "amp", "phase"}, r);
    if (!m.is_object()) continue;
    InitialMode im;
    std::vector<int> k{0, 0};
    read(m, "k", k, where + "[].", r);
    if (k.size() != 2) {
      r.add(IssueCode::InvalidConfig, where + "[].k must have two entries");
      continue;
    }
    im.k1 = k[0];
    im.k2 = k[1];
    read(m, "amp", im.amp, where + "[].", r);
    read(m, "phase", im.phase, where + "[].", r);
    out.push_back(im);
  }
  return out;
}

} // namespace detail

struct ParsedConfig {
  RunConfig config;
  ValidationReport report;
  bool alpha_given = false;
};

// Parse a JSON config with the fixed schema. Every problem found is recorded in
// the report; unknown keys are errors.
inline ParsedConfig parse_config(const json& j) {
  using detail::check_keys;
  using detail::read;
  ParsedConfig out;
  auto& r = out.report;
  auto& c = out.config;
  check_keys(j, "", {"hurst", "grid", "sobolev", "seed", "samples", "output", "levels", "times", "solver",
                     "initial_data", "oracle"},
             r);
  if (!j.is_object()) return out;

  if (!j.contains("hurst")) {
    r.add(IssueCode::InvalidHurst, "missing 'hurst'");
  } else {
    std::vector<double> h;
    read(j, "hurst", h, "", r);
    if (h.size() != 3) {
      r.add(IssueCode::InvalidHurst, "'hurst' must have three entries");
    } else {
      try {
        c.hurst = HurstTriple(h[0], h[1], h[2]);
      } catch (const ValidationError& e) {
        for (const auto& i : e.report().issues) r.issues.push_back(i);
      }
    }
  }

  if (j.contains("grid")) {
    const auto& g = j["grid"];
    check_keys(g, "grid.", {"level", "period", "nx", "nt", "horizon", "n_xi"}, r);
    if (g.is_object()) {
      read(g, "level", c.grid.level, "grid.", r);
      read(g, "period", c.grid.period, "grid.", r);
      read(g, "nx", c.grid.nx, "grid.", r);
      read(g, "nt", c.grid.nt, "grid.", r);
      read(g, "horizon", c.grid.horizon, "grid.", r);
      read(g, "n_xi", c.grid.n_xi, "grid.", r);
    }
  }

  c.sobolev.alpha = default_alpha(c.hurst);
  if (j.contains("sobolev")) {
    const auto& s = j["sobolev"];
    check_keys(s, "sobolev.", {"alpha", "p", "window"}, r);
    if (s.is_object()) {
      if (s.contains("alpha")) out.alpha_given = true;
      read(s, "alpha", c.sobolev.alpha, "sobolev.", r);
      read(s, "p", c.sobolev.p, "sobolev.", r);
      std::string w = "bump";
      read(s, "window", w, "sobolev.", r);
      if (w == "bump") c.sobolev.window = Window::Bump;
      else if (w == "one") c.sobolev.window = Window::One;
      else r.add(IssueCode::InvalidSobolev, "window must be 'bump' or 'one'");
    }
  }

  read(j, "seed", c.seed, "", r);
  read(j, "samples", c.samples, "", r);
  if (j.contains("output")) {
    check_keys(j["output"], "output.", {"dir"}, r);
    if (j["output"].is_object()) read(j["output"], "dir", c.output_dir, "output.", r);
  }
  read(j, "levels", c.levels, "", r);
  read(j, "times", c.times, "", r);

  if (j.contains("solver")) {
    const auto& s = j["solver"];
    check_keys(s, "solver.", {"t0", "tol", "max_iter", "max_halvings"}, r);
    if (s.is_object()) {
      read(s, "t0", c.solver.t0, "solver.", r);
      read(s, "tol", c.solver.tol, "solver.", r);
      read(s, "max_iter", c.solver.max_iter, "solver.", r);
      read(s, "max_halvings", c.solver.max_halvings, "solver.", r);
    }
  }
  if (j.contains("initial_data")) {
    const auto& d = j["initial_data"];
    check_keys(d, "initial_data.", {"phi0", "phi1"}, r);
    if (d.is_object()) {
      if (d.contains("phi0")) c.initial.phi0 = detail::read_modes(d["phi0"], "initial_data.phi0", r);
      if (d.contains("phi1")) c.initial.phi1 = detail::read_modes(d["phi1"], "initial_data.phi1", r);
    }
  }
  if (j.contains("oracle")) {
    const auto& o = j["oracle"];
    check_keys(o, "oracle.", {"integral", "htilde", "r_min_exp", "r_max_exp", "eps"}, r);
    if (o.is_object()) {
      read(o, "integral", c.oracle.integral, "oracle.", r);
      read(o, "htilde", c.oracle.htilde, "oracle.", r);
      read(o, "r_min_exp", c.oracle.r_min_exp, "oracle.", r);
      read(o, "r_max_exp", c.oracle.r_max_exp, "oracle.", r);
      read(o, "eps", c.oracle.eps, "oracle.", r);
      if (!c.oracle.htilde.empty() && c.oracle.htilde.size() != 3)
        r.add(IssueCode::InvalidHurst, "'oracle.htilde' must have three entries");
    }
  }
  return out;
}

inline ParsedConfig parse_config_text(const std::string& text) {
  try {
    return parse_config(json::parse(text));
  } catch (const json::parse_error& e) {
    ParsedConfig out;
    out.report.add(IssueCode::InvalidConfig, std::string("JSON parse error: ") + e.what());
    return out;
  }
}

inline ParsedConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    ParsedConfig out;
    out.report.add(IssueCode::InvalidConfig, "cannot open config file '" + path + "'");
    return out;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline json modes_to_json(const std::vector<InitialMode>& ms) {
  json a = json::array();
  for (const auto& m : ms) a.push_back({{"k", {m.k1, m.k2}}, {"amp", m.amp}, {"phase", m.phase}});
  return a;
}

// Canonical JSON form; used for manifests and the config hash.
inline json config_to_json(const RunConfig& c) {
  json j;
  j["hurst"] = {c.hurst.h0(), c.hurst.h1(), c.hurst.h2()};
  j["grid"] = {{"level", c.grid.level}, {"period", c.grid.period}, {"nx", c.grid.nx},
               {"nt", c.grid.nt},       {"horizon", c.grid.horizon}, {"n_xi", c.grid.xi_points()}};
  j["sobolev"] = {{"alpha", c.sobolev.alpha}, {"p", c.sobolev.p}, {"window", to_string(c.sobolev.window)}};
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["output"] = {{"dir", c.output_dir}};
  j["levels"] = c.levels;
  j["times"] = c.times;
  j["solver"] = {{"t0", c.solver.t0}, {"tol", c.solver.tol}, {"max_iter", c.solver.max_iter},
                 {"max_halvings", c.solver.max_halvings}};
  j["initial_data"] = {{"phi0", modes_to_json(c.initial.phi0)}, {"phi1", modes_to_json(c.initial.phi1)}};
  j["oracle"] = {{"integral", c.oracle.integral}, {"htilde", c.oracle.htilde}, {"r_min_exp", c.oracle.r_min_exp},
                 {"r_max_exp", c.oracle.r_max_exp}, {"eps", c.oracle.eps}};
  return j;
}

inline json report_to_json(const ValidationReport& r) {
  json a = json::array();
  for (const auto& i : r.issues) a.push_back({{"code", to_string(i.code)}, {"message", i.message}});
  return json{{"errors", a}};
}

} // namespace fracwave

#endif
