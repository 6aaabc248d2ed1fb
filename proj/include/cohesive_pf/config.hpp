// Flat `section.key = value` run configuration.
#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "energetics.hpp"
#include "mesh.hpp"
#include "solvers.hpp"

namespace cohesive_pf {

enum class Scenario { Profile1D, Bar1D, RecoveryCheck, Square2D, LShape2D, DomainTrace };
enum class Preset { Full, Reduced };

inline const std::vector<std::pair<Scenario, std::string>>& scenario_names() {
  static const std::vector<std::pair<Scenario, std::string>> names{
      {Scenario::Profile1D, "profile-1d"}, {Scenario::Bar1D, "bar-1d"},       {Scenario::RecoveryCheck, "recovery-check"},
      {Scenario::Square2D, "square-2d"},   {Scenario::LShape2D, "lshape-2d"}, {Scenario::DomainTrace, "domain-trace"}};
  return names;
}

inline std::string to_string(Scenario s) {
  for (const auto& [k, v] : scenario_names())
    if (k == s) return v;
  return "?";
}

inline Scenario parse_scenario(const std::string& s) {
  for (const auto& [k, v] : scenario_names())
    if (v == s) return k;
  throw std::invalid_argument("unknown scenario '" + s + "'");
}

inline std::string to_string(Preset p) { return p == Preset::Full ? "full" : "reduced"; }

inline Preset parse_preset(const std::string& s) {
  if (s == "full") return Preset::Full;
  if (s == "reduced") return Preset::Reduced;
  throw std::invalid_argument("unknown preset '" + s + "' (expected full or reduced)");
}

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, const std::string& what) : std::invalid_argument(key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  Scenario scenario = Scenario::Square2D;
  Preset preset = Preset::Full;
  std::string out = "out";
  /// Field snapshot stride in load steps (0: only the localization step and the last step).
  Index stride = 0;
  long long seed = 0;

  MeshSpec mesh;
  MaterialParams material;

  // Loading. Square: right/top edge displacement (load_x, load_y) at the end of
  // the ramp. L-shape and bar: u_max on the loaded edges.
  double load_x = 0.5;
  double load_y = -0.45;
  double u_max = 0.018;
  Index steps = 1000;
  /// Stop this many steps after localization (negative: run the whole ramp).
  long long steps_after_localization = 2;

  double solver_tol = 1e-8;
  Index solver_max_iter = 200;
  double cg_tol = 1e-10;
  double qp_tol = 1e-9;
  LocalizationMeasure localization_measure = LocalizationMeasure::StrainConcentration;
  double localization_threshold = 3.0;

  // Recovery-sequence check.
  std::vector<double> recovery_jumps{1e-3, 5e-3, 2e-2};
  double recovery_h0 = 1e-3;
  Index recovery_levels = 4;
  double recovery_eps_factor = 1.0;

  // Profile / domain trace sampling.
  Index samples = 101;
  double j_max = 2e-2;

  bool operator==(const RunConfig&) const = default;
};

inline bool operator==(const MeshSpec& a, const MeshSpec& b) {
  return a.domain == b.domain && a.length == b.length && a.height == b.height && a.h == b.h && a.diag == b.diag &&
         a.refinement == b.refinement && a.centered == b.centered;
}

inline bool operator==(const MaterialParams& a, const MaterialParams& b) {
  return a.E0 == b.E0 && a.nu == b.nu && a.mu == b.mu && a.kappa == b.kappa && a.sigma_c == b.sigma_c && a.p_c == b.p_c &&
         a.tau_c == b.tau_c && a.G_c == b.G_c && a.eps_h == b.eps_h && a.h == b.h && a.convention == b.convention;
}

/// Defaults for a scenario and preset; reduced halves the resolution and doubles eps_h.
inline RunConfig default_config(Scenario scenario, Preset preset = Preset::Full) {
  RunConfig c;
  c.scenario = scenario;
  c.preset = preset;
  c.out = "out/" + to_string(scenario);
  const bool full = preset == Preset::Full;
  switch (scenario) {
    case Scenario::Bar1D:
    case Scenario::Profile1D:
    case Scenario::RecoveryCheck:
      c.material.E0 = 1e4;
      c.material.G_c = 1e-3;
      c.material.sigma_c = 5.0;
      c.material.eps_h = 0.4;
      c.material.h = 0.08;
      c.mesh.domain = DomainKind::Interval;
      c.mesh.length = 1.0;
      c.mesh.h = 0.08;
      c.mesh.refinement = 1.0 / 25.0;
      c.mesh.centered = true;
      c.u_max = 5e-3;
      c.steps = 50;
      c.steps_after_localization = -1;
      c.j_max = 2e-2;
      break;
    case Scenario::Square2D:
    case Scenario::LShape2D:
    case Scenario::DomainTrace:
      c.material.eps_h = full ? 0.025 : 0.05;
      c.material.h = full ? 0.005 : 0.01;
      c.mesh.domain = scenario == Scenario::LShape2D ? DomainKind::LShape : DomainKind::Square;
      c.mesh.length = 1.0;
      c.mesh.h = c.material.h;
      c.steps = scenario == Scenario::LShape2D ? 6 : (full ? 1000 : 250);
      c.u_max = 0.018;
      // The L-shape crack path is read off the final state, so run the whole ramp.
      if (scenario == Scenario::LShape2D) c.steps_after_localization = -1;
      break;
  }
  c.material.set_moduli_from_young();
  return c;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x))
    throw ConfigError(key, "expected a finite number, got '" + v + "'");
  return x;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) throw ConfigError(key, "expected an integer, got '" + v + "'");
  return x;
}

inline Index parse_count(const std::string& key, const std::string& v) {
  const long long x = parse_int(key, v);
  if (x < 0) throw ConfigError(key, "must be nonnegative");
  return static_cast<Index>(x);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Splits a document into ordered key/value pairs. `#` starts a comment.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected 'section.key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == key.size() || key.find('.', dot + 1) != std::string::npos)
      throw ConfigError(key.empty() ? "line " + std::to_string(lineno) : key, "keys must have the form section.key");
    for (const auto& [k, v] : kv)
      if (k == key) throw ConfigError(key, "duplicate key");
    kv.emplace_back(key, value);
  }
  return kv;
}

/// Range and consistency checks; errors name the offending key.
inline void validate_config(const RunConfig& c) {
  const MaterialParams& m = c.material;
  auto positive = [](const char* key, double v) {
    if (!(v > 0.0)) throw ConfigError(key, "must be positive");
  };
  positive("material.E0", m.E0);
  positive("material.sigma_c", m.sigma_c);
  positive("material.p_c", m.p_c);
  positive("material.tau_c", m.tau_c);
  positive("material.G_c", m.G_c);
  positive("material.eps_h", m.eps_h);
  positive("mesh.h", c.mesh.h);
  positive("mesh.length", c.mesh.length);
  if (!(m.nu >= 0.0 && m.nu < 0.5)) throw ConfigError("material.nu", "must lie in [0, 0.5)");
  if (c.mesh.refinement && !(*c.mesh.refinement > 0.0 && *c.mesh.refinement < 1.0))
    throw ConfigError("mesh.refinement", "must lie in (0, 1)");
  if (m.h > 0.5 * m.eps_h) throw ConfigError("material.eps_h", "must be at least twice the mesh size");
  positive("solver.tol", c.solver_tol);
  positive("solver.cg_tol", c.cg_tol);
  positive("solver.qp_tol", c.qp_tol);
  positive("solver.localization_threshold", c.localization_threshold);
  if (c.localization_measure == LocalizationMeasure::MaxDamage && c.localization_threshold > 1.0)
    throw ConfigError("solver.localization_threshold", "a damage threshold must lie in (0, 1]");
  if (c.solver_max_iter == 0) throw ConfigError("solver.max_iter", "must be positive");
  if (c.steps == 0) throw ConfigError("load.steps", "must be positive");
  if (c.scenario == Scenario::LShape2D || c.scenario == Scenario::Bar1D) positive("load.u_max", c.u_max);
  if (c.recovery_levels < 2) throw ConfigError("recovery.levels", "must be at least 2");
  positive("recovery.h0", c.recovery_h0);
  positive("recovery.eps_factor", c.recovery_eps_factor);
  for (double j : c.recovery_jumps)
    if (!(j > 0.0)) throw ConfigError("recovery.jumps", "jumps must be positive");
  if (c.samples < 2) throw ConfigError("output.samples", "must be at least 2");
  positive("output.j_max", c.j_max);
  if (c.out.empty()) throw ConfigError("run.out", "must not be empty");
}

/// Parses a configuration document. The scenario comes from `run.scenario` if
/// present, else from `scenario`; the preset likewise from `run.preset`. Defaults
/// for that scenario/preset are applied first, then every key overrides.
inline RunConfig parse_config(const std::string& text, std::optional<Scenario> scenario = std::nullopt,
                              std::optional<Preset> preset = std::nullopt) {
  const auto kv = parse_key_values(text);
  for (const auto& [k, v] : kv) {
    if (k == "run.scenario") {
      try {
        scenario = parse_scenario(v);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(k, e.what());
      }
    }
    if (k == "run.preset" && !preset) {
      try {
        preset = parse_preset(v);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(k, e.what());
      }
    }
  }
  if (!scenario) throw ConfigError("run.scenario", "missing (no scenario given)");
  RunConfig c = default_config(*scenario, preset.value_or(Preset::Full));

  bool mesh_h_set = false, material_h_set = false, moduli_set = false;
  for (const auto& [key, v] : kv) {
    using namespace detail;
    try {
      if (key == "run.scenario" || key == "run.preset") continue;
      if (key == "run.out") c.out = v;
      else if (key == "run.stride") c.stride = parse_count(key, v);
      else if (key == "run.seed") c.seed = parse_int(key, v);
      else if (key == "mesh.length") c.mesh.length = parse_double(key, v);
      else if (key == "mesh.h") c.mesh.h = parse_double(key, v), mesh_h_set = true;
      else if (key == "mesh.variant") c.mesh.diag = parse_diagonal(v);
      else if (key == "mesh.refinement") {
        if (v == "none") c.mesh.refinement.reset();
        else c.mesh.refinement = parse_double(key, v);
      } else if (key == "mesh.centered") c.mesh.centered = parse_bool(key, v);
      else if (key == "material.E0") c.material.E0 = parse_double(key, v);
      else if (key == "material.nu") c.material.nu = parse_double(key, v);
      else if (key == "material.mu") c.material.mu = parse_double(key, v), moduli_set = true;
      else if (key == "material.kappa") c.material.kappa = parse_double(key, v), moduli_set = true;
      else if (key == "material.sigma_c") c.material.sigma_c = parse_double(key, v);
      else if (key == "material.p_c") c.material.p_c = parse_double(key, v);
      else if (key == "material.tau_c") c.material.tau_c = parse_double(key, v);
      else if (key == "material.G_c") c.material.G_c = parse_double(key, v);
      else if (key == "material.eps_h") c.material.eps_h = parse_double(key, v);
      else if (key == "material.h") c.material.h = parse_double(key, v), material_h_set = true;
      else if (key == "material.convention") c.material.convention = parse_convention(v);
      else if (key == "load.ux") c.load_x = parse_double(key, v);
      else if (key == "load.uy") c.load_y = parse_double(key, v);
      else if (key == "load.u_max") c.u_max = parse_double(key, v);
      else if (key == "load.steps") c.steps = parse_count(key, v);
      else if (key == "load.steps_after_localization") c.steps_after_localization = parse_int(key, v);
      else if (key == "solver.tol") c.solver_tol = parse_double(key, v);
      else if (key == "solver.max_iter") c.solver_max_iter = parse_count(key, v);
      else if (key == "solver.cg_tol") c.cg_tol = parse_double(key, v);
      else if (key == "solver.qp_tol") c.qp_tol = parse_double(key, v);
      else if (key == "solver.localization_measure") c.localization_measure = parse_localization_measure(v);
      else if (key == "solver.localization_threshold") c.localization_threshold = parse_double(key, v);
      else if (key == "recovery.jumps") {
        c.recovery_jumps.clear();
        std::istringstream in(v);
        std::string item;
        while (std::getline(in, item, ',')) c.recovery_jumps.push_back(parse_double(key, trim(item)));
        if (c.recovery_jumps.empty()) throw ConfigError(key, "needs at least one value");
      } else if (key == "recovery.h0") c.recovery_h0 = parse_double(key, v);
      else if (key == "recovery.levels") c.recovery_levels = parse_count(key, v);
      else if (key == "recovery.eps_factor") c.recovery_eps_factor = parse_double(key, v);
      else if (key == "output.samples") c.samples = parse_count(key, v);
      else if (key == "output.j_max") c.j_max = parse_double(key, v);
      else throw ConfigError(key, "unknown key");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, e.what());
    }
  }
  // The mesh size and the one stored with the material are kept in sync unless both are given.
  if (mesh_h_set && !material_h_set) c.material.h = c.mesh.h;
  if (material_h_set && !mesh_h_set) c.mesh.h = c.material.h;
  if (!moduli_set) c.material.set_moduli_from_young();
  validate_config(c);
  return c;
}

/// Writes every key; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
  using detail::fmt17;
  std::ostringstream o;
  o << "run.scenario = " << to_string(c.scenario) << '\n'
    << "run.preset = " << to_string(c.preset) << '\n'
    << "run.out = " << c.out << '\n'
    << "run.stride = " << c.stride << '\n'
    << "run.seed = " << c.seed << '\n'
    << "mesh.length = " << fmt17(c.mesh.length) << '\n'
    << "mesh.h = " << fmt17(c.mesh.h) << '\n'
    << "mesh.variant = " << to_string(c.mesh.diag) << '\n'
    << "mesh.refinement = " << (c.mesh.refinement ? fmt17(*c.mesh.refinement) : std::string("none")) << '\n'
    << "mesh.centered = " << (c.mesh.centered ? "true" : "false") << '\n'
    << "material.E0 = " << fmt17(c.material.E0) << '\n'
    << "material.nu = " << fmt17(c.material.nu) << '\n'
    << "material.mu = " << fmt17(c.material.mu) << '\n'
    << "material.kappa = " << fmt17(c.material.kappa) << '\n'
    << "material.sigma_c = " << fmt17(c.material.sigma_c) << '\n'
    << "material.p_c = " << fmt17(c.material.p_c) << '\n'
    << "material.tau_c = " << fmt17(c.material.tau_c) << '\n'
    << "material.G_c = " << fmt17(c.material.G_c) << '\n'
    << "material.eps_h = " << fmt17(c.material.eps_h) << '\n'
    << "material.h = " << fmt17(c.material.h) << '\n'
    << "material.convention = " << to_string(c.material.convention) << '\n'
    << "load.ux = " << fmt17(c.load_x) << '\n'
    << "load.uy = " << fmt17(c.load_y) << '\n'
    << "load.u_max = " << fmt17(c.u_max) << '\n'
    << "load.steps = " << c.steps << '\n'
    << "load.steps_after_localization = " << c.steps_after_localization << '\n'
    << "solver.tol = " << fmt17(c.solver_tol) << '\n'
    << "solver.max_iter = " << c.solver_max_iter << '\n'
    << "solver.cg_tol = " << fmt17(c.cg_tol) << '\n'
    << "solver.qp_tol = " << fmt17(c.qp_tol) << '\n'
    << "solver.localization_measure = " << to_string(c.localization_measure) << '\n'
    << "solver.localization_threshold = " << fmt17(c.localization_threshold) << '\n'
    << "recovery.jumps = ";
  for (Index i = 0; i < c.recovery_jumps.size(); ++i) o << (i ? ", " : "") << fmt17(c.recovery_jumps[i]);
  o << '\n'
    << "recovery.h0 = " << fmt17(c.recovery_h0) << '\n'
    << "recovery.levels = " << c.recovery_levels << '\n'
    << "recovery.eps_factor = " << fmt17(c.recovery_eps_factor) << '\n'
    << "output.samples = " << c.samples << '\n'
    << "output.j_max = " << fmt17(c.j_max) << '\n';
  return o.str();
}

}  // namespace cohesive_pf
