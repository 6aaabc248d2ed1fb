// Constitutive pieces: degradation, reduced densities over the eigenstrain,
// the plane-strain return map, damage regularization, cohesive law.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fields.hpp"
#include "mesh.hpp"

namespace cohesive_pf {

/// Trace/deviator convention for in-plane tensors.
///  - Plane2D: tr and dev taken on the 2x2 in-plane block, dev A = A - tr(A)/2 I2.
///  - Full3D: tensors live in 3D with zero out-of-plane total strain; the eigenstrain
///    carries an out-of-plane component and dev A = A - tr(A)/3 I3.
enum class TensorConvention { Plane2D, Full3D };

inline std::string to_string(TensorConvention c) { return c == TensorConvention::Plane2D ? "2d" : "3d"; }

inline TensorConvention parse_convention(const std::string& s) {
  if (s == "2d" || s == "2D") return TensorConvention::Plane2D;
  if (s == "3d" || s == "3D") return TensorConvention::Full3D;
  throw std::invalid_argument("unknown tensor convention '" + s + "' (expected 2d or 3d)");
}

struct MaterialParams {
  double E0 = 1e3;
  double nu = 0.3;
  double mu = 1e3 / 2.6;
  double kappa = 1e3 / 1.2;
  double sigma_c = 5.0;
  double p_c = 10.0;
  double tau_c = 10.0;
  double G_c = 0.2;
  double eps_h = 0.025;
  double h = 0.005;
  TensorConvention convention = TensorConvention::Full3D;

  /// Shear modulus E/(2(1+nu)); bulk modulus E/(3(1-2nu)) for the 3D convention and
  /// E/(2(1+nu)(1-2nu)) = lambda + mu for the in-plane one. Both give the same
  /// plane-strain stiffness.
  void set_moduli_from_young() {
    mu = E0 / (2.0 * (1.0 + nu));
    kappa = convention == TensorConvention::Full3D ? E0 / (3.0 * (1.0 - 2.0 * nu))
                                                   : E0 / (2.0 * (1.0 + nu) * (1.0 - 2.0 * nu));
  }

  /// Throws on violated invariants; returns non-fatal warnings.
  std::vector<std::string> validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("material.") + name + " must be positive");
    };
    positive(E0, "E0");
    positive(mu, "mu");
    positive(kappa, "kappa");
    positive(sigma_c, "sigma_c");
    positive(p_c, "p_c");
    positive(tau_c, "tau_c");
    positive(G_c, "G_c");
    positive(eps_h, "eps_h");
    positive(h, "h");
    if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("material.nu must lie in [0, 0.5)");
    if (h > 0.5 * eps_h) throw std::invalid_argument("material.h must not exceed eps_h/2");
    std::vector<std::string> warnings;
    if (eps_h / h < 5.0 - 1e-9) warnings.push_back("eps_h/h = " + std::to_string(eps_h / h) + " is below 5");
    return warnings;
  }
};

/// a(d) = (1-d)^2.
inline double degradation(double d) {
  constexpr double slack = 1e-14;
  if (!(d >= -slack && d <= 1.0 + slack)) throw std::domain_error("degradation: damage outside [0,1]");
  d = std::clamp(d, 0.0, 1.0);
  return (1.0 - d) * (1.0 - d);
}

// ---------------------------------------------------------------------------
// 1D and anti-plane densities

/// argmin_{eta >= 0} 1/2 E0 (s - eta)^2 + a(r) sigma_c eta.
inline double eta_star_1d(double s, double r, const MaterialParams& m) {
  return std::max(0.0, s - degradation(r) * m.sigma_c / m.E0);
}

inline double f_1d(double s, double r, const MaterialParams& m) {
  const double a = degradation(r);
  if (s <= a * m.sigma_c / m.E0) return 0.5 * m.E0 * s * s;
  return a * m.sigma_c * s - m.sigma_c * m.sigma_c * a * a / (2.0 * m.E0);
}

/// Radial minimizer of mu |g - eta|^2 + a(r) sigma_c |eta|.
inline std::array<double, 2> eta_star_antiplane(std::array<double, 2> g, double r, const MaterialParams& m) {
  const double s = std::hypot(g[0], g[1]);
  const double excess = s - degradation(r) * m.sigma_c / (2.0 * m.mu);
  if (excess <= 0.0 || s == 0.0) return {0.0, 0.0};
  return {excess * g[0] / s, excess * g[1] / s};
}

inline double f_antiplane(std::array<double, 2> g, double r, const MaterialParams& m) {
  const double s = std::hypot(g[0], g[1]);
  const double a = degradation(r);
  if (s <= a * m.sigma_c / (2.0 * m.mu)) return m.mu * s * s;
  return a * m.sigma_c * s - m.sigma_c * m.sigma_c * a * a / (4.0 * m.mu);
}

// ---------------------------------------------------------------------------
// Plane strain

/// Symmetric tensor with in-plane block (xx, yy, xy) and out-of-plane zz.
struct SymTensor {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;
  double zz = 0.0;

  SymTensor operator-(const SymTensor& o) const { return {xx - o.xx, yy - o.yy, xy - o.xy, zz - o.zz}; }
  SymTensor operator+(const SymTensor& o) const { return {xx + o.xx, yy + o.yy, xy + o.xy, zz + o.zz}; }
  SymTensor operator*(double k) const { return {xx * k, yy * k, xy * k, zz * k}; }
};

inline double trace(const SymTensor& a, TensorConvention c) {
  return c == TensorConvention::Full3D ? a.xx + a.yy + a.zz : a.xx + a.yy;
}

inline SymTensor deviator(const SymTensor& a, TensorConvention c) {
  if (c == TensorConvention::Full3D) {
    const double m = (a.xx + a.yy + a.zz) / 3.0;
    return {a.xx - m, a.yy - m, a.xy, a.zz - m};
  }
  const double m = 0.5 * (a.xx + a.yy);
  return {a.xx - m, a.yy - m, a.xy, 0.0};
}

/// Frobenius norm (off-diagonal counted twice).
inline double norm(const SymTensor& a) {
  return std::sqrt(a.xx * a.xx + a.yy * a.yy + a.zz * a.zz + 2.0 * a.xy * a.xy);
}

inline SymTensor identity(TensorConvention c) {
  return c == TensorConvention::Full3D ? SymTensor{1.0, 1.0, 0.0, 1.0} : SymTensor{1.0, 1.0, 0.0, 0.0};
}

/// psi_e(A) = kappa/2 tr^2 A + mu |dev A|^2.
inline double elastic_energy_density(const SymTensor& a, const MaterialParams& m) {
  const double tr = trace(a, m.convention);
  const double dn = norm(deviator(a, m.convention));
  return 0.5 * m.kappa * tr * tr + m.mu * dn * dn;
}

/// sigma = kappa tr(A) I + 2 mu dev A.
inline SymTensor stress(const SymTensor& a, const MaterialParams& m) {
  return identity(m.convention) * (m.kappa * trace(a, m.convention)) + deviator(a, m.convention) * (2.0 * m.mu);
}

/// phi_2 = sqrt(p_c^2 tr^2 eta + tau_c^2 |dev eta|^2).
inline double phi2(const SymTensor& eta, const MaterialParams& m) {
  const double tr = trace(eta, m.convention);
  const double dn = norm(deviator(eta, m.convention));
  return std::sqrt(m.p_c * m.p_c * tr * tr + m.tau_c * m.tau_c * dn * dn);
}

/// Eigenstrain potential a(d) phi_2(eta) on tr eta >= 0, +infinity otherwise.
inline double pi_potential(const SymTensor& eta, double d, const MaterialParams& m) {
  if (trace(eta, m.convention) < -1e-12) return std::numeric_limits<double>::infinity();
  return degradation(d) * phi2(eta, m);
}

/// Stress-space coordinates: p = kappa tr(A), t = 2 mu |dev A| for elastic strain A.
struct ElasticDomainPoint {
  double p = 0.0;
  double t = 0.0;
};

inline ElasticDomainPoint stress_point(const SymTensor& elastic_strain, const MaterialParams& m) {
  return {m.kappa * trace(elastic_strain, m.convention), 2.0 * m.mu * norm(deviator(elastic_strain, m.convention))};
}

/// Level of a stress point w.r.t. the domain degraded by a: <= 1 inside.
/// Ellipse (p/(a p_c))^2 + (t/(a tau_c))^2 for p >= 0, strip t/(a tau_c) for p < 0.
inline double domain_level(ElasticDomainPoint s, double a, const MaterialParams& m) {
  if (s.p < 0.0) return s.t / (a * m.tau_c);
  const double x = s.p / (a * m.p_c), y = s.t / (a * m.tau_c);
  return std::sqrt(x * x + y * y);
}

class ReturnMapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Minimizer (p, t) >= 0 of kappa/2 (P-p)^2 + mu (T-t)^2 + a sqrt(p_c^2 p^2 + tau_c^2 t^2).
struct ReducedEigenstrain {
  double p = 0.0;
  double t = 0.0;
  int newton_iterations = 0;
  bool used_fallback = false;
};

/// The stress (kappa(P-p), 2mu(T-t)) is the projection of the trial stress onto the
/// domain in the metric diag(kappa, 2mu)^-1. Cases: admissible trial -> 0; trial
/// pressure <= 0 -> shear cap; otherwise projection onto the ellipse, solved by
/// Newton on the multiplier (the secular function is convex and decreasing, so
/// iterates from 0 increase monotonically), with bisection as a fallback.
inline ReducedEigenstrain reduced_return_map(double P, double T, double a, const MaterialParams& m,
                                             int max_newton = 100, double tol = 1e-12) {
  ReducedEigenstrain out;
  T = std::max(T, 0.0);
  const double wp = m.kappa, wt = 2.0 * m.mu;
  if (a <= 0.0) {
    out.p = std::max(P, 0.0);
    out.t = T;
    return out;
  }
  const double yp = wp * P, yt = wt * T;
  const double cp = a * m.p_c, ct = a * m.tau_c;
  if (yp <= 0.0) {
    out.t = std::max(0.0, T - ct / wt);
    return out;
  }
  const double rp = yp / cp, rt = yt / ct;
  if (rp * rp + rt * rt <= 1.0) return out;

  const double kp = wp / (cp * cp), kt = wt / (ct * ct);
  auto secular = [&](double lam, double* deriv) {
    const double dp = 1.0 + lam * kp, dt = 1.0 + lam * kt;
    const double tp = rp / dp, tt = rt / dt;
    if (deriv) *deriv = -2.0 * (tp * tp * kp / dp + tt * tt * kt / dt);
    return tp * tp + tt * tt - 1.0;
  };

  double lam = 0.0;
  bool ok = false;
  for (int it = 1; it <= max_newton; ++it) {
    double g1 = 0.0;
    const double g = secular(lam, &g1);
    out.newton_iterations = it;
    if (std::abs(g) <= tol) {
      ok = true;
      break;
    }
    if (!(g1 < 0.0)) break;
    const double next = lam - g / g1;
    if (!(next > lam) && g > 0.0) break;
    lam = next;
  }
  if (!ok) {
    double lo = 0.0;
    double hi = std::sqrt((yp * cp / wp) * (yp * cp / wp) + (yt * ct / wt) * (yt * ct / wt));
    if (!(secular(hi, nullptr) <= 0.0)) throw ReturnMapError("reduced_return_map: failed to bracket the multiplier");
    for (int it = 0; it < 400 && hi - lo > 1e-16 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (secular(mid, nullptr) > 0.0 ? lo : hi) = mid;
    }
    lam = 0.5 * (lo + hi);
    if (!(std::abs(secular(lam, nullptr)) <= 1e-9)) throw ReturnMapError("reduced_return_map: bisection did not converge");
    out.used_fallback = true;
  }
  out.p = P * (lam * kp) / (1.0 + lam * kp);
  out.t = T * (lam * kt) / (1.0 + lam * kt);
  return out;
}

/// Eigenstrain minimizing psi_e(eps - eta) + a(d) phi_2(eta) subject to tr eta >= 0.
/// eta_dev is coaxial with eps_dev, which reduces the problem to (tr eta, |dev eta|).
inline SymTensor eta_star_planestrain(const SymTensor& eps, double d, const MaterialParams& m) {
  const TensorConvention c = m.convention;
  const double P = trace(eps, c);
  const SymTensor dev = deviator(eps, c);
  const double T = norm(dev);
  const auto red = reduced_return_map(P, T, degradation(d), m);
  const double ndim = c == TensorConvention::Full3D ? 3.0 : 2.0;
  SymTensor eta = identity(c) * (red.p / ndim);
  if (T > 0.0 && red.t > 0.0) eta = eta + dev * (red.t / T);
  return eta;
}

/// Reduced plane-strain density min_eta psi_e(eps - eta) + pi(eta, d).
inline double f_planestrain(const SymTensor& eps, double d, const MaterialParams& m) {
  const SymTensor eta = eta_star_planestrain(eps, d, m);
  return elastic_energy_density(eps - eta, m) + degradation(d) * phi2(eta, m);
}

// ---------------------------------------------------------------------------
// Damage regularization

/// Consistent P1 mass matrix of element e, row-major with row stride npe
/// (the first npe*npe entries are used).
inline std::array<double, 9> local_mass(const Mesh& mesh, Index e) {
  const double meas = mesh.measure(e);
  if (mesh.dimension() == 1) return {meas / 3.0, meas / 6.0, meas / 6.0, meas / 3.0, 0, 0, 0, 0, 0};
  const double d = meas / 6.0, o = meas / 12.0;
  return {d, o, o, o, d, o, o, o, d};
}

/// P1 stiffness (Laplacian) matrix of element e.
inline std::array<double, 9> local_laplacian(const Mesh& mesh, Index e, const ShapeGradients& g) {
  const double meas = mesh.measure(e);
  const Index npe = mesh.nodes_per_element();
  std::array<double, 9> k{};
  for (Index i = 0; i < npe; ++i)
    for (Index j = 0; j < npe; ++j) k[i * npe + j] = meas * (g.gx[i] * g.gx[j] + g.gy[i] * g.gy[j]);
  return k;
}

/// G_c/2 * integral(d^2/eps_h + eps_h |grad d|^2), integrated exactly for P1 d.
inline double damage_regularization_energy(const Mesh& mesh, const NodalField& d, const MaterialParams& m) {
  if (!d.matches(mesh) || d.components != 1) throw std::invalid_argument("damage_regularization_energy: scalar P1 field expected");
  const Index npe = mesh.nodes_per_element();
  double total = 0.0;
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    const auto el = mesh.element(e);
    const auto mm = local_mass(mesh, e);
    const auto kk = local_laplacian(mesh, e, shape_gradients(mesh, e));
    double mass = 0.0, grad = 0.0;
    for (Index i = 0; i < npe; ++i)
      for (Index j = 0; j < npe; ++j) {
        mass += d(el[i]) * mm[i * npe + j] * d(el[j]);
        grad += d(el[i]) * kk[i * npe + j] * d(el[j]);
      }
    total += mass / m.eps_h + m.eps_h * grad;
  }
  return 0.5 * m.G_c * total;
}

// ---------------------------------------------------------------------------
// Cohesive law

/// phi(j) = G_c sigma_c j / (G_c + sigma_c j) for j >= 0.
inline double phi_analytic(double j, const MaterialParams& m) {
  if (j < 0.0) throw std::domain_error("phi_analytic: negative jump (interpenetration)");
  if (std::isinf(j)) return m.G_c;
  return m.G_c * m.sigma_c * j / (m.G_c + m.sigma_c * j);
}

/// Optimal transition profile z0 exp(-x) for a jump j, with unit internal length.
struct OptimalProfile {
  double z0 = 0.0;
  double operator()(double x) const { return z0 * std::exp(-x); }
  /// Transition energy integral_0^inf z^2 + z'^2 of the profile.
  double transition_energy() const { return z0 * z0; }
};

inline OptimalProfile optimal_profile(double j, const MaterialParams& m) {
  if (j < 0.0) throw std::domain_error("optimal_profile: negative jump");
  if (std::isinf(j)) return {1.0};
  return {m.sigma_c * j / (m.G_c + m.sigma_c * j)};
}

}  // namespace cohesive_pf
