// Box-constrained convex QP  min 1/2 x'Ax - b'x,  lo <= x <= hi  (MPRGP: CG on the
// free set plus projected expansion and proportioning steps).
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparse.hpp"

namespace cohesive_pf {

class QpError : public std::runtime_error {
 public:
  QpError(const std::string& what, double residual)
      : std::runtime_error(what + " (projected-gradient norm " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct BoxQpOptions {
  /// Stop when the projected-gradient (KKT) norm is at most this value.
  double tol = 1e-9;
  Index max_iter = 0;  // 0: 20 x unknown count + 1000
  double gamma = 1.0;
};

struct BoxQpResult {
  Index iterations = 0;
  Index cg_steps = 0;
  Index expansion_steps = 0;
  Index proportioning_steps = 0;
  double kkt_residual = 0.0;
};

/// Projected-gradient norm of the QP at x (the KKT residual); fixed entries are excluded.
inline double kkt_residual(const CsrMatrix& A, std::span<const double> b, std::span<const double> x,
                           std::span<const double> lo, std::span<const double> hi, const std::vector<bool>& fixed) {
  std::vector<double> g(A.rows);
  A.multiply(x, g);
  double s = 0.0;
  for (Index i = 0; i < A.rows; ++i) {
    if (!fixed.empty() && fixed[i]) continue;
    double gi = g[i] - b[i];
    if (x[i] <= lo[i]) gi = std::min(gi, 0.0);
    if (x[i] >= hi[i]) gi = std::max(gi, 0.0);
    s += gi * gi;
  }
  return std::sqrt(s);
}

/// Solves in place; x is projected onto the box first. Entries with fixed[i] are
/// held at their current value (typically lo = hi there).
inline BoxQpResult solve_box_qp(const CsrMatrix& A, std::span<const double> b, std::span<double> x,
                                std::span<const double> lo, std::span<const double> hi, const std::vector<bool>& fixed,
                                const BoxQpOptions& opt = {}) {
  const Index n = A.rows;
  if (b.size() != n || x.size() != n || lo.size() != n || hi.size() != n) throw std::invalid_argument("solve_box_qp: size mismatch");
  const bool any_fixed = !fixed.empty();
  auto is_fixed = [&](Index i) { return any_fixed && fixed[i]; };
  for (Index i = 0; i < n; ++i) {
    if (lo[i] > hi[i]) throw std::invalid_argument("solve_box_qp: empty box");
    if (!is_fixed(i)) x[i] = std::clamp(x[i], lo[i], hi[i]);
  }

  const double norm_a = A.norm_inf();
  BoxQpResult res;
  if (norm_a == 0.0) return res;
  const double abar = 1.9 / norm_a;
  const double gamma2 = opt.gamma * opt.gamma;
  const Index cap = opt.max_iter ? opt.max_iter : 20 * n + 1000;

  std::vector<double> g(n), p(n), Ap(n), phi(n), beta(n), y(n);
  auto full_gradient = [&] {
    A.multiply(x, g);
    for (Index i = 0; i < n; ++i) g[i] = is_fixed(i) ? 0.0 : g[i] - b[i];
  };
  auto at_lo = [&](Index i) { return x[i] <= lo[i]; };
  auto at_hi = [&](Index i) { return x[i] >= hi[i]; };
  // Free gradient phi, chopped gradient beta.
  auto split = [&] {
    for (Index i = 0; i < n; ++i) {
      if (is_fixed(i)) {
        phi[i] = beta[i] = 0.0;
      } else if (at_lo(i)) {
        phi[i] = 0.0;
        beta[i] = std::min(g[i], 0.0);
      } else if (at_hi(i)) {
        phi[i] = 0.0;
        beta[i] = std::max(g[i], 0.0);
      } else {
        phi[i] = g[i];
        beta[i] = 0.0;
      }
    }
  };
  auto dot = [](const std::vector<double>& u, const std::vector<double>& v) {
    return std::inner_product(u.begin(), u.end(), v.begin(), 0.0);
  };
  auto masked_multiply = [&](const std::vector<double>& v, std::vector<double>& out) {
    A.multiply(v, out);
    if (any_fixed)
      for (Index i = 0; i < n; ++i)
        if (fixed[i]) out[i] = 0.0;
  };

  full_gradient();
  split();
  p = phi;
  for (Index it = 0; it < cap; ++it) {
    const double phi2 = dot(phi, phi), beta2 = dot(beta, beta);
    res.kkt_residual = std::sqrt(phi2 + beta2);
    res.iterations = it;
    if (res.kkt_residual <= opt.tol) return res;

    // Reduced free gradient: largest feasible step of length abar along phi.
    double phi_tilde_phi = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (phi[i] > 0.0)
        phi_tilde_phi += std::min((x[i] - lo[i]) / abar, phi[i]) * phi[i];
      else if (phi[i] < 0.0)
        phi_tilde_phi += std::max((x[i] - hi[i]) / abar, phi[i]) * phi[i];
    }

    if (beta2 <= gamma2 * phi_tilde_phi) {
      masked_multiply(p, Ap);
      const double pAp = dot(p, Ap);
      if (!(pAp > 0.0)) throw QpError("solve_box_qp: matrix is not positive definite on the free set", res.kkt_residual);
      const double acg = dot(g, p) / pAp;
      double af = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < n; ++i) {
        if (p[i] > 0.0)
          af = std::min(af, (x[i] - lo[i]) / p[i]);
        else if (p[i] < 0.0)
          af = std::min(af, (x[i] - hi[i]) / p[i]);
      }
      if (acg <= af) {
        for (Index i = 0; i < n; ++i) {
          if (is_fixed(i)) continue;
          x[i] = std::clamp(x[i] - acg * p[i], lo[i], hi[i]);
          g[i] -= acg * Ap[i];
        }
        split();
        const double gam = dot(phi, Ap) / pAp;
        for (Index i = 0; i < n; ++i) p[i] = phi[i] - gam * p[i];
        ++res.cg_steps;
      } else {
        for (Index i = 0; i < n; ++i) {
          if (is_fixed(i)) continue;
          x[i] = std::clamp(x[i] - af * p[i], lo[i], hi[i]);
          g[i] -= af * Ap[i];
        }
        split();
        for (Index i = 0; i < n; ++i)
          if (!is_fixed(i)) x[i] = std::clamp(x[i] - abar * phi[i], lo[i], hi[i]);
        full_gradient();
        split();
        p = phi;
        ++res.expansion_steps;
      }
    } else {
      masked_multiply(beta, Ap);
      const double bAb = dot(beta, Ap);
      if (!(bAb > 0.0)) throw QpError("solve_box_qp: matrix is not positive definite", res.kkt_residual);
      const double a = dot(g, beta) / bAb;
      for (Index i = 0; i < n; ++i)
        if (!is_fixed(i)) x[i] = std::clamp(x[i] - a * beta[i], lo[i], hi[i]);
      full_gradient();
      split();
      p = phi;
      ++res.proportioning_steps;
    }
  }
  full_gradient();
  split();
  res.kkt_residual = std::sqrt(dot(phi, phi) + dot(beta, beta));
  if (res.kkt_residual <= opt.tol) return res;
  throw QpError("solve_box_qp: iteration cap reached", res.kkt_residual);
}

}  // namespace cohesive_pf
