// Staggered minimization over (u, eta, d). By default u and eta form one block
// (Newton on the reduced energy in u); d is a box QP. Every block solve lowers
// the total energy, and the trace records any increase beyond a small slack.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "box_qp.hpp"
#include "energetics.hpp"
#include "fields.hpp"
#include "mesh.hpp"
#include "parallel.hpp"
#include "sparse.hpp"

namespace cohesive_pf {

enum class Formulation { Bar1D, AntiPlane, PlaneStrain };

inline int displacement_components(Formulation f) { return f == Formulation::PlaneStrain ? 2 : 1; }
inline int eigenstrain_components(Formulation f) {
  switch (f) {
    case Formulation::Bar1D: return 1;
    case Formulation::AntiPlane: return 2;
    case Formulation::PlaneStrain: return 4;
  }
  return 1;
}

/// Prescribed displacement component on a tagged node set: value = full_value * load factor.
struct DisplacementCondition {
  std::string tag;
  int component = 0;
  double full_value = 0.0;
};

struct LoadProgram {
  std::vector<DisplacementCondition> displacement;
  /// Node sets on which d = 0.
  std::vector<std::string> damage_fixed_tags;
  /// Load factors per step; ramp[0] = 0 is the initial state.
  std::vector<double> ramp;
  /// Full-load values reported as load_x / load_y in traces.
  std::array<double, 2> reported_load{0.0, 0.0};

  static std::vector<double> linear_ramp(Index steps) {
    std::vector<double> r(steps + 1);
    for (Index k = 0; k <= steps; ++k) r[k] = static_cast<double>(k) / static_cast<double>(steps);
    return r;
  }

  void validate() const {
    if (ramp.empty() || ramp.front() != 0.0) throw std::invalid_argument("load ramp must start at 0");
    for (Index k = 1; k < ramp.size(); ++k)
      if (ramp[k] < ramp[k - 1]) throw std::invalid_argument("load ramp must be nondecreasing");
  }
};

struct StaggeredState {
  NodalField u;
  ElementField eta;
  NodalField d;
  NodalField d_prev;
  Index step_index = 0;
  double load_factor = 0.0;
};

struct EnergyBreakdown {
  double elastic = 0.0;
  double dissipation = 0.0;
  double fracture = 0.0;
  double total = 0.0;
};

enum class LocalizationMeasure { StrainConcentration, MaxDamage };

inline std::string to_string(LocalizationMeasure m) {
  return m == LocalizationMeasure::StrainConcentration ? "strain" : "damage";
}

inline LocalizationMeasure parse_localization_measure(const std::string& s) {
  if (s == "strain") return LocalizationMeasure::StrainConcentration;
  if (s == "damage") return LocalizationMeasure::MaxDamage;
  throw std::invalid_argument("unknown localization measure '" + s + "' (expected strain or damage)");
}

struct SolverOptions {
  double tol = 1e-8;
  Index max_iter = 200;
  CgOptions cg;
  BoxQpOptions qp;
  double descent_slack = 1e-10;
  /// Localization is the first step whose measure reaches localization_threshold:
  /// the strain concentration max|eps_e| / mean|eps_e| relative to its value in the
  /// undamaged linear-elastic solution (1 for a homogeneous problem; a re-entrant
  /// corner would otherwise trip the rule in the elastic phase), or the max nodal d.
  LocalizationMeasure localization_measure = LocalizationMeasure::StrainConcentration;
  double localization_threshold = 3.0;
  /// Minimize over (u, eta) jointly (Newton on the reduced energy) instead of
  /// alternating a linear u solve with the eta update. The plain alternation is
  /// a fixed-point iteration with the elastic stiffness and stalls once many
  /// elements sit on the strength surface.
  bool joint_displacement_block = true;
  /// Newton stops when the decrement -g.dx is below newton_tol * |energy|.
  double newton_tol = 1e-13;
  Index newton_max_iter = 100;
  /// Multiple of the elastic stiffness added to the tangent to keep it definite.
  double newton_regularization = 1e-6;
  /// Sparse Cholesky for the displacement systems instead of Jacobi-PCG.
  bool direct_solver = true;
};

struct StepResult {
  EnergyBreakdown energy;
  Index iterations = 0;
  bool converged = false;
  /// Largest energy increase observed across a block update (<= 0 when descent holds).
  double worst_block_increase = -std::numeric_limits<double>::infinity();
  /// Total energy after each inner iteration.
  std::vector<double> inner_energies;
};

struct StepRecord {
  Index step = 0;
  double load_factor = 0.0;
  double load_x = 0.0;
  double load_y = 0.0;
  EnergyBreakdown energy;
  double max_d = 0.0;
  Index inner_iters = 0;
  bool converged = false;
  double worst_block_increase = 0.0;
  double strain_variance = 0.0;
  /// max over elements of |eps_e| divided by its area-weighted mean.
  double strain_concentration = 0.0;
  /// Value compared against the localization threshold.
  double localization_indicator = 0.0;
  /// First step meeting the localization rule.
  bool localized = false;
  /// min over nodes of (d - d at previous step).
  double min_damage_increment = 0.0;
};

struct QuasistaticTrace {
  std::vector<StepRecord> steps;
  std::optional<Index> localization_step;
  bool descent_ok = true;
  bool irreversibility_ok = true;
  bool all_converged = true;
  double worst_block_increase = -std::numeric_limits<double>::infinity();
  /// Strain concentration of the undamaged elastic solution at full load.
  double elastic_concentration = 1.0;
};

class StaggeredSolver {
 public:
  StaggeredSolver(const Mesh& mesh, Formulation formulation, MaterialParams material, LoadProgram loads,
                  SolverOptions options = {})
      : mesh_(mesh),
        form_(formulation),
        mat_(material),
        loads_(std::move(loads)),
        opt_(options),
        geom_(mesh),
        ucomp_(displacement_components(formulation)),
        ecomp_(eigenstrain_components(formulation)) {
    if ((formulation == Formulation::Bar1D) != (mesh.dimension() == 1))
      throw std::invalid_argument("formulation does not match mesh dimension");
    loads_.validate();
    build_displacement_operator();
    build_damage_operator();
  }

  const Mesh& mesh() const { return mesh_; }
  const MaterialParams& material() const { return mat_; }
  const LoadProgram& loads() const { return loads_; }
  const SolverOptions& options() const { return opt_; }
  Formulation formulation() const { return form_; }
  const std::vector<bool>& damage_fixed() const { return d_fixed_; }

  StaggeredState initial_state() const {
    StaggeredState s;
    s.u = NodalField(mesh_, ucomp_);
    s.eta = ElementField(mesh_, ecomp_);
    s.d = NodalField(mesh_, 1);
    s.d_prev = NodalField(mesh_, 1);
    return s;
  }

  /// Writes the prescribed displacement values for `load_factor` into s.u.
  void apply_boundary_values(StaggeredState& s, double load_factor) const {
    s.load_factor = load_factor;
    for (const auto& [dof, full] : u_prescribed_) s.u.values[dof] = full * load_factor;
  }

  // ---- block solves -------------------------------------------------------

  /// Minimizer of the elastic energy over u for fixed eta, warm-started from s.u.
  NodalField solve_u(const StaggeredState& s) const {
    std::vector<double> rhs(u_matrix_.rows, 0.0);
    assemble_eigenstrain_load(s.eta, rhs);
    NodalField u = s.u;
    if (opt_.direct_solver) {
      // K_ff u_f = rhs_f - K_fc u_c
      std::vector<double> lift(u.size(), 0.0), Kl(u.size()), uf(u.size());
      for (Index i = 0; i < u.size(); ++i)
        if (u_fixed_[i]) lift[i] = u.values[i];
      u_matrix_.multiply(lift, Kl);
      for (Index i = 0; i < u.size(); ++i) rhs[i] -= Kl[i];
      elastic_factor().solve(rhs, uf);
      for (Index i = 0; i < u.size(); ++i)
        if (!u_fixed_[i]) u.values[i] = uf[i];
    } else {
      pcg_solve(u_matrix_, rhs, u.values, u_fixed_, opt_.cg, &u_diag_);
    }
    return u;
  }

  /// Minimizer over u of the reduced energy sum |e| f(strain_e(u), mean d) for
  /// fixed d, i.e. the joint (u, eta) block. Newton with a finite-difference
  /// tangent of the reduced stress and Armijo backtracking; warm-started from s.u.
  NodalField solve_u_eta(const StaggeredState& s, Index* iterations = nullptr) const {
    if (iterations) *iterations = 0;
    if (std::none_of(u_fixed_.begin(), u_fixed_.end(), [](bool f) { return !f; })) return s.u;
    // Elastic predictor at frozen eta: an exact block step that removes the
    // boundary layer left by lifting new Dirichlet values.
    NodalField u = solve_u(s);
    const Index ne = mesh_.num_elements();
    std::vector<double> dbar(ne);
    for (Index e = 0; e < ne; ++e) dbar[e] = damage_mean(s.d, e);
    const int nv = strain_size();
    const Index nl = mesh_.nodes_per_element() * static_cast<Index>(ucomp_);

    std::vector<double> dens(ne);
    auto reduced = [&](const NodalField& v) {
      parallel_for(ne, [&](Index e) { dens[e] = mesh_.measure(e) * reduced_density(voigt_strain(v, e), dbar[e]); });
      return Mesh::pairwise_sum(dens.data(), dens.size());
    };

    const Index n = u.size();
    CsrMatrix T = u_pattern_.matrix;
    std::vector<double> g(n), dx(n), local(nl * nl);
    std::vector<std::array<double, 9>> tangents(ne);
    std::vector<std::array<double, 3>> stresses(ne);
    double R = reduced(u);
    for (Index it = 1; it <= opt_.newton_max_iter; ++it) {
      parallel_for(ne, [&](Index e) {
        const auto v = voigt_strain(u, e);
        stresses[e] = reduced_stress(v, dbar[e]);
        tangents[e] = fd_tangent(v, dbar[e]);
      });
      std::fill(g.begin(), g.end(), 0.0);
      for (Index k = 0; k < T.vals.size(); ++k) T.vals[k] = opt_.newton_regularization * u_matrix_.vals[k];
      for (Index e = 0; e < ne; ++e) {
        const auto B = strain_operator(e);
        const auto el = mesh_.element(e);
        const double meas = mesh_.measure(e);
        for (Index a = 0; a < nl; ++a) {
          double ga = 0.0;
          for (int r = 0; r < nv; ++r) ga += B[r * nl + a] * stresses[e][r];
          g[el[a / ucomp_] * ucomp_ + a % ucomp_] += meas * ga;
          for (Index b = 0; b < nl; ++b) {
            double kab = 0.0;
            for (int r = 0; r < nv; ++r)
              for (int c = 0; c < nv; ++c) kab += B[r * nl + a] * tangents[e][r * 3 + c] * B[c * nl + b];
            local[a * nl + b] = meas * kab;
          }
        }
        const Index* slot = u_pattern_.slots.data() + e * nl * nl;
        for (Index k = 0; k < nl * nl; ++k) T.vals[slot[k]] += local[k];
      }
      for (Index i = 0; i < n; ++i) {
        if (u_fixed_[i]) g[i] = 0.0;
        dx[i] = 0.0;
      }
      for (double& x : g) x = -x;
      if (opt_.direct_solver) {
        tangent_factor().factorize(T);
        tangent_factor().solve(g, dx);
      } else {
        CgOptions cg = opt_.cg;
        cg.rel_tol = std::max(cg.rel_tol, 1e-9);
        pcg_solve(T, g, dx, u_fixed_, cg);
      }
      for (double& x : g) x = -x;
      const double slope = std::inner_product(g.begin(), g.end(), dx.begin(), 0.0);
      if (iterations) *iterations = it;
      if (!(slope < 0.0) || -slope <= opt_.newton_tol * std::max(std::abs(R), std::numeric_limits<double>::min())) break;
      NodalField trial = u;
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
        for (Index i = 0; i < n; ++i) trial.values[i] = u.values[i] + alpha * dx[i];
        const double Rt = reduced(trial);
        if (Rt <= R + 1e-4 * alpha * slope) {
          accepted = true;
          R = Rt;
          break;
        }
      }
      if (!accepted) break;
      u = std::move(trial);
    }
    return u;
  }

  /// Element-wise eigenstrain minimizer for fixed u and d.
  ElementField solve_eta(const StaggeredState& s) const {
    ElementField eta(mesh_, ecomp_);
    parallel_for(mesh_.num_elements(), [&](Index e) {
      const double dbar = damage_mean(s.d, e);
      switch (form_) {
        case Formulation::Bar1D: eta(e) = eta_star_1d(slope(s.u, e), dbar, mat_); break;
        case Formulation::AntiPlane: {
          const auto g = eta_star_antiplane(scalar_gradient(s.u, e), dbar, mat_);
          eta(e, 0) = g[0];
          eta(e, 1) = g[1];
          break;
        }
        case Formulation::PlaneStrain: {
          const SymTensor t = eta_star_planestrain(strain(s.u, e), dbar, mat_);
          eta(e, 0) = t.xx;
          eta(e, 1) = t.yy;
          eta(e, 2) = t.xy;
          eta(e, 3) = t.zz;
          break;
        }
      }
    });
    return eta;
  }

  /// Box-constrained damage minimizer: d_prev <= d <= 1, d = 0 on fixed nodes.
  NodalField solve_d(const StaggeredState& s) const {
    CsrMatrix H = d_pattern_.matrix;
    H.vals = reg_values_;
    std::vector<double> rhs(mesh_.num_nodes(), 0.0);
    const Index npe = mesh_.nodes_per_element();
    const double inv = 1.0 / static_cast<double>(npe);
    std::vector<double> local(npe * npe);
    for (Index e = 0; e < mesh_.num_elements(); ++e) {
      const double D = dissipation_coefficient(s.eta, e);
      if (D == 0.0) continue;
      const double w = 2.0 * mesh_.measure(e) * D;
      std::fill(local.begin(), local.end(), w * inv * inv);
      const Index* slot = d_pattern_.slots.data() + e * npe * npe;
      for (Index k = 0; k < npe * npe; ++k) H.vals[slot[k]] += local[k];
      for (Index n : mesh_.element(e)) rhs[n] += w * inv;
    }
    std::vector<double> lo(mesh_.num_nodes()), hi(mesh_.num_nodes(), 1.0);
    NodalField d = s.d;
    for (Index i = 0; i < mesh_.num_nodes(); ++i) {
      lo[i] = d_fixed_[i] ? 0.0 : s.d_prev(i);
      if (d_fixed_[i]) {
        hi[i] = 0.0;
        d(i) = 0.0;
      }
    }
    solve_box_qp(H, rhs, d.values, lo, hi, d_fixed_, opt_.qp);
    return d;
  }

  // ---- energies -----------------------------------------------------------

  EnergyBreakdown energy(const StaggeredState& s) const {
    EnergyBreakdown E;
    for (Index e = 0; e < mesh_.num_elements(); ++e) {
      const double meas = mesh_.measure(e);
      E.elastic += meas * elastic_density(s.u, s.eta, e);
      const double D = dissipation_coefficient(s.eta, e);
      if (D != 0.0) E.dissipation += meas * degradation(damage_mean(s.d, e)) * D;
    }
    E.fracture = fracture_energy(s.d);
    E.total = E.elastic + E.dissipation + E.fracture;
    return E;
  }

  /// G_c/2 * integral(d^2/eps_h + eps_h |grad d|^2) using the assembled operator.
  double fracture_energy(const NodalField& d) const {
    std::vector<double> Rd(d.size());
    CsrMatrix R = d_pattern_.matrix;
    R.vals = reg_values_;
    R.multiply(d.values, Rd);
    return 0.5 * std::inner_product(d.values.begin(), d.values.end(), Rd.begin(), 0.0);
  }

  // ---- driver -------------------------------------------------------------

  /// Alternates solve_u -> solve_eta -> solve_d until the relative change of the
  /// total energy between iterations is at most options.tol. On return d_prev = d.
  StepResult staggered_step(StaggeredState& s, double load_factor) const {
    StepResult r;
    apply_boundary_values(s, load_factor);
    double before = energy(s).total;
    auto track = [&](double after) {
      r.worst_block_increase = std::max(r.worst_block_increase, after - before);
      before = after;
    };
    double reference = 0.0;
    for (Index it = 1; it <= opt_.max_iter; ++it) {
      if (opt_.joint_displacement_block) {
        s.u = solve_u_eta(s);
        s.eta = solve_eta(s);
        track(energy(s).total);
      } else {
        s.u = solve_u(s);
        track(energy(s).total);
        s.eta = solve_eta(s);
        track(energy(s).total);
      }
      if (it == 1) reference = before;
      s.d = solve_d(s);
      r.energy = energy(s);
      track(r.energy.total);
      r.inner_energies.push_back(r.energy.total);
      r.iterations = it;
      const double change = std::abs(r.energy.total - reference);
      const double scale = std::max(r.energy.total, std::numeric_limits<double>::epsilon());
      reference = r.energy.total;
      if (change / scale <= opt_.tol) {
        r.converged = true;
        break;
      }
    }
    s.d_prev = s.d;
    return r;
  }

  /// Per-element strain measure used for band detection: |u'| (1D), |grad u|
  /// (anti-plane) or the Frobenius norm of the in-plane strain.
  std::vector<double> strain_magnitude(const NodalField& u) const {
    std::vector<double> out(mesh_.num_elements());
    for (Index e = 0; e < mesh_.num_elements(); ++e) {
      switch (form_) {
        case Formulation::Bar1D: out[e] = std::abs(slope(u, e)); break;
        case Formulation::AntiPlane: {
          const auto g = scalar_gradient(u, e);
          out[e] = std::hypot(g[0], g[1]);
          break;
        }
        case Formulation::PlaneStrain: out[e] = norm(strain(u, e)); break;
      }
    }
    return out;
  }

  /// strain_concentration of the linear-elastic, undamaged solution at load factor 1;
  /// 1 when that solution has no strain.
  double elastic_strain_concentration() const {
    StaggeredState e = initial_state();
    apply_boundary_values(e, 1.0);
    const double c = strain_concentration(solve_u(e));
    return c > 0.0 ? c : 1.0;
  }

  double strain_concentration(const NodalField& u) const {
    const auto m = strain_magnitude(u);
    double top = 0.0, mean = 0.0;
    for (Index e = 0; e < mesh_.num_elements(); ++e) {
      top = std::max(top, m[e]);
      mean += mesh_.measure(e) * m[e];
    }
    mean /= mesh_.total_measure();
    return mean > 0.0 ? top / mean : 0.0;
  }

  /// Area-weighted variance of the element strain, summed over components.
  double strain_variance(const NodalField& u) const {
    const int nc = form_ == Formulation::Bar1D ? 1 : (form_ == Formulation::AntiPlane ? 2 : 3);
    std::vector<double> mean(nc, 0.0), sq(nc, 0.0);
    double vol = 0.0;
    for (Index e = 0; e < mesh_.num_elements(); ++e) {
      const auto c = strain_components(u, e);
      const double w = mesh_.measure(e);
      vol += w;
      for (int k = 0; k < nc; ++k) mean[k] += w * c[k];
    }
    for (int k = 0; k < nc; ++k) mean[k] /= vol;
    for (Index e = 0; e < mesh_.num_elements(); ++e) {
      const auto c = strain_components(u, e);
      const double w = mesh_.measure(e);
      for (int k = 0; k < nc; ++k) sq[k] += w * (c[k] - mean[k]) * (c[k] - mean[k]);
    }
    double v = 0.0;
    for (int k = 0; k < nc; ++k) v += sq[k] / vol;
    return v;
  }

  /// Observer gets each completed step; returning false stops the run.
  using Observer = std::function<bool(const StepRecord&, const StaggeredState&)>;

  QuasistaticTrace run_quasistatic(StaggeredState& s, const Observer& observer = {}) const {
    QuasistaticTrace trace;
    if (opt_.localization_measure == LocalizationMeasure::StrainConcentration)
      trace.elastic_concentration = elastic_strain_concentration();
    for (Index k = 1; k < loads_.ramp.size(); ++k) {
      const NodalField d_before = s.d;
      const StepResult r = staggered_step(s, loads_.ramp[k]);
      s.step_index = k;
      StepRecord rec;
      rec.step = k;
      rec.load_factor = loads_.ramp[k];
      rec.load_x = loads_.reported_load[0] * rec.load_factor;
      rec.load_y = loads_.reported_load[1] * rec.load_factor;
      rec.energy = r.energy;
      rec.max_d = *std::max_element(s.d.values.begin(), s.d.values.end());
      rec.inner_iters = r.iterations;
      rec.converged = r.converged;
      rec.worst_block_increase = r.worst_block_increase;
      rec.strain_variance = strain_variance(s.u);
      rec.strain_concentration = strain_concentration(s.u);
      double inc = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < s.d.size(); ++i) inc = std::min(inc, s.d(i) - d_before(i));
      rec.min_damage_increment = inc;
      trace.worst_block_increase = std::max(trace.worst_block_increase, r.worst_block_increase);
      if (r.worst_block_increase > opt_.descent_slack) trace.descent_ok = false;
      if (inc < 0.0) trace.irreversibility_ok = false;
      if (!r.converged) trace.all_converged = false;
      rec.localization_indicator = opt_.localization_measure == LocalizationMeasure::MaxDamage
                                       ? rec.max_d
                                       : rec.strain_concentration / trace.elastic_concentration;
      if (!trace.localization_step && rec.localization_indicator >= opt_.localization_threshold) {
        trace.localization_step = k;
        rec.localized = true;
      }
      trace.steps.push_back(rec);
      if (observer && !observer(rec, s)) break;
    }
    return trace;
  }

  // ---- element kinematics -------------------------------------------------

  double damage_mean(const NodalField& d, Index e) const {
    double s = 0.0;
    for (Index n : mesh_.element(e)) s += d(n);
    return std::clamp(s / static_cast<double>(mesh_.nodes_per_element()), 0.0, 1.0);
  }

  double slope(const NodalField& u, Index e) const {
    const auto el = mesh_.element(e);
    const auto& g = geom_[e];
    return g.gx[0] * u(el[0]) + g.gx[1] * u(el[1]);
  }

  std::array<double, 2> scalar_gradient(const NodalField& u, Index e) const {
    const auto el = mesh_.element(e);
    const auto& g = geom_[e];
    std::array<double, 2> out{};
    for (int k = 0; k < 3; ++k) {
      out[0] += g.gx[k] * u(el[k]);
      out[1] += g.gy[k] * u(el[k]);
    }
    return out;
  }

  SymTensor strain(const NodalField& u, Index e) const {
    const auto el = mesh_.element(e);
    const auto& g = geom_[e];
    double uxx = 0, uxy = 0, uyx = 0, uyy = 0;
    for (int k = 0; k < 3; ++k) {
      uxx += g.gx[k] * u(el[k], 0);
      uxy += g.gy[k] * u(el[k], 0);
      uyx += g.gx[k] * u(el[k], 1);
      uyy += g.gy[k] * u(el[k], 1);
    }
    return {uxx, uyy, 0.5 * (uxy + uyx), 0.0};
  }

  SymTensor eigenstrain(const ElementField& eta, Index e) const {
    return {eta(e, 0), eta(e, 1), eta(e, 2), eta(e, 3)};
  }

  /// Dissipation density per unit a(d): sigma_c eta (1D), sigma_c |eta| (anti-plane), phi_2 (plane strain).
  double dissipation_coefficient(const ElementField& eta, Index e) const {
    switch (form_) {
      case Formulation::Bar1D: return mat_.sigma_c * eta(e);
      case Formulation::AntiPlane: return mat_.sigma_c * std::hypot(eta(e, 0), eta(e, 1));
      case Formulation::PlaneStrain: return phi2(eigenstrain(eta, e), mat_);
    }
    return 0.0;
  }

  int strain_size() const { return form_ == Formulation::Bar1D ? 1 : (form_ == Formulation::AntiPlane ? 2 : 3); }

  /// Element strain in Voigt form: (u') | (u_x, u_y) | (e_xx, e_yy, 2 e_xy).
  std::array<double, 3> voigt_strain(const NodalField& u, Index e) const {
    auto c = strain_components(u, e);
    if (form_ == Formulation::PlaneStrain) c[2] *= 2.0;
    return c;
  }

  /// Reduced density min over eta, as a function of the Voigt strain.
  double reduced_density(const std::array<double, 3>& v, double dbar) const {
    switch (form_) {
      case Formulation::Bar1D: return f_1d(v[0], dbar, mat_);
      case Formulation::AntiPlane: return f_antiplane({v[0], v[1]}, dbar, mat_);
      case Formulation::PlaneStrain: return f_planestrain({v[0], v[1], 0.5 * v[2], 0.0}, dbar, mat_);
    }
    return 0.0;
  }

  /// Derivative of reduced_density with respect to the Voigt strain.
  std::array<double, 3> reduced_stress(const std::array<double, 3>& v, double dbar) const {
    switch (form_) {
      case Formulation::Bar1D: return {mat_.E0 * (v[0] - eta_star_1d(v[0], dbar, mat_)), 0.0, 0.0};
      case Formulation::AntiPlane: {
        const auto eta = eta_star_antiplane({v[0], v[1]}, dbar, mat_);
        return {2.0 * mat_.mu * (v[0] - eta[0]), 2.0 * mat_.mu * (v[1] - eta[1]), 0.0};
      }
      case Formulation::PlaneStrain: {
        const SymTensor eps{v[0], v[1], 0.5 * v[2], 0.0};
        const SymTensor sig = stress(eps - eta_star_planestrain(eps, dbar, mat_), mat_);
        return {sig.xx, sig.yy, sig.xy};
      }
    }
    return {};
  }

  double elastic_density(const NodalField& u, const ElementField& eta, Index e) const {
    switch (form_) {
      case Formulation::Bar1D: {
        const double el = slope(u, e) - eta(e);
        return 0.5 * mat_.E0 * el * el;
      }
      case Formulation::AntiPlane: {
        const auto g = scalar_gradient(u, e);
        const double gx = g[0] - eta(e, 0), gy = g[1] - eta(e, 1);
        return mat_.mu * (gx * gx + gy * gy);
      }
      case Formulation::PlaneStrain: return elastic_energy_density(strain(u, e) - eigenstrain(eta, e), mat_);
    }
    return 0.0;
  }

 private:
  std::array<double, 3> strain_components(const NodalField& u, Index e) const {
    switch (form_) {
      case Formulation::Bar1D: return {slope(u, e), 0.0, 0.0};
      case Formulation::AntiPlane: {
        const auto g = scalar_gradient(u, e);
        return {g[0], g[1], 0.0};
      }
      case Formulation::PlaneStrain: {
        const SymTensor t = strain(u, e);
        return {t.xx, t.yy, t.xy};
      }
    }
    return {};
  }

  /// Symmetrized central-difference tangent of reduced_stress (row-major 3x3).
  std::array<double, 9> fd_tangent(const std::array<double, 3>& v, double dbar) const {
    const int nv = strain_size();
    double scale = 0.0;
    for (int k = 0; k < nv; ++k) scale = std::max(scale, std::abs(v[k]));
    const double delta = 1e-7 * std::max(scale, 1e-6);
    std::array<double, 9> D{};
    for (int c = 0; c < nv; ++c) {
      auto vp = v, vm = v;
      vp[c] += delta;
      vm[c] -= delta;
      const auto sp = reduced_stress(vp, dbar), sm = reduced_stress(vm, dbar);
      for (int r = 0; r < nv; ++r) D[r * 3 + c] = (sp[r] - sm[r]) / (2.0 * delta);
    }
    for (int r = 0; r < nv; ++r)
      for (int c = r + 1; c < nv; ++c) D[r * 3 + c] = D[c * 3 + r] = 0.5 * (D[r * 3 + c] + D[c * 3 + r]);
    return D;
  }

  /// Voigt strain-displacement matrix of element e (row-major, strain_size() x local dofs).
  std::array<double, 18> strain_operator(Index e) const {
    const auto& g = geom_[e];
    std::array<double, 18> B{};
    switch (form_) {
      case Formulation::Bar1D:
        B[0] = g.gx[0];
        B[1] = g.gx[1];
        break;
      case Formulation::AntiPlane:
        for (int a = 0; a < 3; ++a) {
          B[a] = g.gx[a];
          B[3 + a] = g.gy[a];
        }
        break;
      case Formulation::PlaneStrain:
        for (int a = 0; a < 3; ++a) {
          B[2 * a] = g.gx[a];
          B[6 + 2 * a + 1] = g.gy[a];
          B[12 + 2 * a] = g.gy[a];
          B[12 + 2 * a + 1] = g.gx[a];
        }
        break;
    }
    return B;
  }

  /// Elastic modulus matrix in Voigt form (exx, eyy, gxy) for in-plane strains.
  std::array<double, 9> plane_strain_moduli() const {
    const double lambda = mat_.convention == TensorConvention::Full3D ? mat_.kappa - 2.0 * mat_.mu / 3.0 : mat_.kappa - mat_.mu;
    const double c11 = lambda + 2.0 * mat_.mu;
    return {c11, lambda, 0.0, lambda, c11, 0.0, 0.0, 0.0, mat_.mu};
  }

  ReducedCholesky& elastic_factor() const {
    if (!elastic_factor_) {
      elastic_factor_.emplace(u_matrix_, u_fixed_);
      elastic_factor_->factorize(u_matrix_);
    }
    return *elastic_factor_;
  }

  ReducedCholesky& tangent_factor() const {
    if (!tangent_factor_) tangent_factor_.emplace(u_matrix_, u_fixed_);
    return *tangent_factor_;
  }

  void build_displacement_operator() {
    u_pattern_ = FePattern(mesh_, ucomp_);
    const Index npe = mesh_.nodes_per_element();
    const Index ls = npe * static_cast<Index>(ucomp_);
    std::vector<double> local(ls * ls);
    const auto C = plane_strain_moduli();
    for (Index e = 0; e < mesh_.num_elements(); ++e) {
      std::fill(local.begin(), local.end(), 0.0);
      const double meas = mesh_.measure(e);
      const auto& g = geom_[e];
      if (form_ == Formulation::Bar1D) {
        for (Index a = 0; a < 2; ++a)
          for (Index b = 0; b < 2; ++b) local[a * 2 + b] = meas * mat_.E0 * g.gx[a] * g.gx[b];
      } else if (form_ == Formulation::AntiPlane) {
        for (Index a = 0; a < 3; ++a)
          for (Index b = 0; b < 3; ++b) local[a * 3 + b] = meas * 2.0 * mat_.mu * (g.gx[a] * g.gx[b] + g.gy[a] * g.gy[b]);
      } else {
        // B columns per local dof (node a, comp c): rows (exx, eyy, gxy).
        std::array<std::array<double, 3>, 6> B{};
        for (Index a = 0; a < 3; ++a) {
          B[2 * a] = {g.gx[a], 0.0, g.gy[a]};
          B[2 * a + 1] = {0.0, g.gy[a], g.gx[a]};
        }
        for (Index i = 0; i < 6; ++i)
          for (Index j = 0; j < 6; ++j) {
            double s = 0.0;
            for (int r = 0; r < 3; ++r)
              for (int c = 0; c < 3; ++c) s += B[i][r] * C[r * 3 + c] * B[j][c];
            local[i * 6 + j] = meas * s;
          }
      }
      u_pattern_.add_local(e, local);
    }
    u_matrix_ = u_pattern_.matrix;
    u_diag_ = u_matrix_.diagonal();

    u_fixed_.assign(u_matrix_.rows, false);
    std::vector<double> full(u_matrix_.rows, 0.0);
    for (const auto& bc : loads_.displacement) {
      if (bc.component < 0 || bc.component >= ucomp_) throw std::invalid_argument("displacement condition component out of range");
      if (!mesh_.has_tag(bc.tag)) throw std::invalid_argument("unknown node set '" + bc.tag + "'");
      for (Index n : mesh_.tagged(bc.tag)) {
        const Index dof = n * ucomp_ + bc.component;
        u_fixed_[dof] = true;
        full[dof] = bc.full_value;
      }
    }
    for (Index i = 0; i < u_fixed_.size(); ++i)
      if (u_fixed_[i]) u_prescribed_.emplace_back(i, full[i]);
  }

  void build_damage_operator() {
    d_pattern_ = FePattern(mesh_, 1);
    const Index npe = mesh_.nodes_per_element();
    std::vector<double> local(npe * npe);
    for (Index e = 0; e < mesh_.num_elements(); ++e) {
      const auto M = local_mass(mesh_, e);
      const auto K = local_laplacian(mesh_, e, geom_[e]);
      for (Index k = 0; k < npe * npe; ++k) local[k] = mat_.G_c * (M[k] / mat_.eps_h + mat_.eps_h * K[k]);
      d_pattern_.add_local(e, local);
    }
    reg_values_ = d_pattern_.matrix.vals;
    d_pattern_.matrix.set_zero();
    d_fixed_.assign(mesh_.num_nodes(), false);
    for (const auto& tag : loads_.damage_fixed_tags) {
      if (!mesh_.has_tag(tag)) throw std::invalid_argument("unknown node set '" + tag + "'");
      for (Index n : mesh_.tagged(tag)) d_fixed_[n] = true;
    }
  }

  void assemble_eigenstrain_load(const ElementField& eta, std::vector<double>& rhs) const {
    for (Index e = 0; e < mesh_.num_elements(); ++e) {
      const double meas = mesh_.measure(e);
      const auto el = mesh_.element(e);
      const auto& g = geom_[e];
      switch (form_) {
        case Formulation::Bar1D: {
          const double q = meas * mat_.E0 * eta(e);
          rhs[el[0]] += q * g.gx[0];
          rhs[el[1]] += q * g.gx[1];
          break;
        }
        case Formulation::AntiPlane: {
          const double qx = meas * 2.0 * mat_.mu * eta(e, 0), qy = meas * 2.0 * mat_.mu * eta(e, 1);
          for (int a = 0; a < 3; ++a) rhs[el[a]] += qx * g.gx[a] + qy * g.gy[a];
          break;
        }
        case Formulation::PlaneStrain: {
          const SymTensor sig = stress(eigenstrain(eta, e), mat_);
          if (sig.xx == 0.0 && sig.yy == 0.0 && sig.xy == 0.0) break;
          for (int a = 0; a < 3; ++a) {
            rhs[el[a] * 2] += meas * (sig.xx * g.gx[a] + sig.xy * g.gy[a]);
            rhs[el[a] * 2 + 1] += meas * (sig.xy * g.gx[a] + sig.yy * g.gy[a]);
          }
          break;
        }
      }
    }
  }

  const Mesh& mesh_;
  Formulation form_;
  MaterialParams mat_;
  LoadProgram loads_;
  SolverOptions opt_;
  ElementGeometry geom_;
  int ucomp_;
  int ecomp_;

  FePattern u_pattern_;
  CsrMatrix u_matrix_;
  std::vector<double> u_diag_;
  std::vector<bool> u_fixed_;
  std::vector<std::pair<Index, double>> u_prescribed_;

  // Lazily built factorizations; the solver is not meant for concurrent use.
  mutable std::optional<ReducedCholesky> elastic_factor_;
  mutable std::optional<ReducedCholesky> tangent_factor_;

  FePattern d_pattern_;
  std::vector<double> reg_values_;
  std::vector<bool> d_fixed_;
};

}  // namespace cohesive_pf
