// Brute-force references for the element-level minimizations. Each oracle runs a
// nested grid search: a uniform grid over a bracket that must contain the
// minimizer, then repeated re-gridding of the two cells around the best node.
// For the convex objectives involved this converges to the global minimizer
// without using any of the closed forms under test.
#pragma once

#include <cohesive_pf/energetics.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace oracle {

using cohesive_pf::MaterialParams;

struct Min1 {
  double x;
  double f;
};

template <class F>
Min1 grid_min_1d(F&& f, double lo, double hi, int n = 41, int levels = 40) {
  Min1 best{lo, f(lo)};
  for (int level = 0; level < levels && hi > lo; ++level) {
    const double step = (hi - lo) / (n - 1);
    int arg = 0;
    double fl = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double x = i == n - 1 ? hi : lo + step * i;
      const double v = f(x);
      if (v < fl) {
        fl = v;
        arg = i;
      }
      if (v < best.f) best = {x, v};
    }
    const double nlo = lo + step * std::max(arg - 1, 0);
    hi = std::min(hi, lo + step * std::min(arg + 1, n - 1));
    lo = nlo;
  }
  return best;
}

struct Min2 {
  double x;
  double y;
  double f;
};

/// Same scheme on a tensor grid; the bracket keeps `halo` cells around the best node.
template <class F>
Min2 grid_min_2d(F&& f, double x0, double x1, double y0, double y1, int n = 41, int levels = 18, int halo = 2) {
  Min2 best{x0, y0, f(x0, y0)};
  for (int level = 0; level < levels && (x1 > x0 || y1 > y0); ++level) {
    const double sx = (x1 - x0) / (n - 1), sy = (y1 - y0) / (n - 1);
    int ai = 0, aj = 0;
    double fl = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double x = i == n - 1 ? x1 : x0 + sx * i;
      for (int j = 0; j < n; ++j) {
        const double y = j == n - 1 ? y1 : y0 + sy * j;
        const double v = f(x, y);
        if (v < fl) {
          fl = v;
          ai = i;
          aj = j;
        }
        if (v < best.f) best = {x, y, v};
      }
    }
    const double nx0 = x0 + sx * std::max(ai - halo, 0), ny0 = y0 + sy * std::max(aj - halo, 0);
    x1 = std::min(x1, x0 + sx * std::min(ai + halo, n - 1));
    y1 = std::min(y1, y0 + sy * std::min(aj + halo, n - 1));
    x0 = nx0;
    y0 = ny0;
  }
  return best;
}

/// min over eta >= 0 of 1/2 E0 (s - eta)^2 + a(r) sigma_c eta. The minimizer lies in [0, max(s, 0)].
inline Min1 min_1d(double s, double r, const MaterialParams& m) {
  const double a = (1.0 - r) * (1.0 - r);
  auto obj = [&](double eta) { return 0.5 * m.E0 * (s - eta) * (s - eta) + a * m.sigma_c * eta; };
  return grid_min_1d(obj, 0.0, std::max(s, 0.0));
}

/// min over eta in R^2 of mu |g - eta|^2 + a(r) sigma_c |eta|, on a Cartesian grid
/// over the box spanned by 0 and g (the minimizer lies on that segment).
inline Min2 min_antiplane(std::array<double, 2> g, double r, const MaterialParams& m) {
  const double a = (1.0 - r) * (1.0 - r);
  auto obj = [&](double x, double y) {
    return m.mu * ((g[0] - x) * (g[0] - x) + (g[1] - y) * (g[1] - y)) + a * m.sigma_c * std::hypot(x, y);
  };
  return grid_min_2d(obj, std::min(0.0, g[0]), std::max(0.0, g[0]), std::min(0.0, g[1]), std::max(0.0, g[1]));
}

/// min over p, t >= 0 of kappa/2 (P-p)^2 + mu (T-t)^2 + a sqrt(p_c^2 p^2 + tau_c^2 t^2).
inline Min2 min_reduced_planestrain(double P, double T, double r, const MaterialParams& m) {
  const double a = (1.0 - r) * (1.0 - r);
  auto obj = [&](double p, double t) {
    return 0.5 * m.kappa * (P - p) * (P - p) + m.mu * (T - t) * (T - t) +
           a * std::sqrt(m.p_c * m.p_c * p * p + m.tau_c * m.tau_c * t * t);
  };
  return grid_min_2d(obj, 0.0, std::max(P, 0.0), 0.0, std::max(T, 0.0));
}

inline double rel_gap(double value, double ref, double floor) {
  return std::abs(value - ref) / std::max({std::abs(ref), std::abs(value), floor});
}

struct SuiteResult {
  double eta_1d = 0.0;
  double f_1d = 0.0;
  double f_antiplane = 0.0;
  double eta_planestrain = 0.0;
  double f_planestrain = 0.0;
};

/// Worst relative deviation from the brute-force minima over n random inputs per
/// operation. Materials are drawn at random too, so the thresholds move around.
inline SuiteResult run_suite(int n, unsigned long long seed) {
  using namespace cohesive_pf;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto logu = [&](double lo, double hi) { return lo * std::pow(hi / lo, U(rng)); };
  SuiteResult out;
  for (int k = 0; k < n; ++k) {
    MaterialParams m;
    m.E0 = logu(1e2, 1e5);
    m.sigma_c = logu(0.5, 50.0);
    const double r = k % 10 == 0 ? (k % 20 == 0 ? 0.0 : 1.0) : U(rng);
    const double thr = m.sigma_c / m.E0;
    const double s = (2.0 * U(rng) - 1.0) * 4.0 * thr;
    const Min1 ref = min_1d(s, r, m);
    const double scale = m.E0 * thr * thr;
    out.eta_1d = std::max(out.eta_1d, std::abs(eta_star_1d(s, r, m) - ref.x) / std::max(std::abs(s), thr));
    out.f_1d = std::max(out.f_1d, rel_gap(f_1d(s, r, m), ref.f, 1e-12 * scale));
  }
  for (int k = 0; k < n; ++k) {
    MaterialParams m;
    m.mu = logu(1e-1, 1e4);
    m.sigma_c = logu(0.5, 50.0);
    const double r = k % 10 == 0 ? 0.0 : U(rng);
    const double thr = m.sigma_c / (2.0 * m.mu);
    const double s = U(rng) * 4.0 * thr, th = 2.0 * 3.14159265358979323846 * U(rng);
    const std::array<double, 2> g{s * std::cos(th), s * std::sin(th)};
    const Min2 ref = min_antiplane(g, r, m);
    out.f_antiplane = std::max(out.f_antiplane, rel_gap(f_antiplane(g, r, m), ref.f, 1e-12 * m.mu * thr * thr));
  }
  for (int k = 0; k < n; ++k) {
    MaterialParams m;
    m.E0 = logu(1e2, 1e4);
    m.nu = 0.45 * U(rng);
    m.p_c = logu(1.0, 50.0);
    m.tau_c = logu(1.0, 50.0);
    m.convention = k % 2 ? TensorConvention::Full3D : TensorConvention::Plane2D;
    m.set_moduli_from_young();
    const double r = k % 10 == 0 ? 0.0 : U(rng);
    const double e = 3.0 * std::max(m.p_c / m.kappa, m.tau_c / m.mu);
    SymTensor eps;
    eps.xx = e * (2.0 * U(rng) - 1.0);
    eps.yy = e * (2.0 * U(rng) - 1.0);
    eps.xy = e * (2.0 * U(rng) - 1.0);
    const double P = trace(eps, m.convention), T = norm(deviator(eps, m.convention));
    const Min2 ref = min_reduced_planestrain(P, T, r, m);
    const SymTensor eta = eta_star_planestrain(eps, r, m);
    const double p = trace(eta, m.convention), t = norm(deviator(eta, m.convention));
    const double size = std::max({std::abs(P), T, 1e-300});
    out.eta_planestrain = std::max(out.eta_planestrain, (std::abs(p - ref.x) + std::abs(t - ref.y)) / size);
    out.f_planestrain =
        std::max(out.f_planestrain, rel_gap(f_planestrain(eps, r, m), ref.f, 1e-12 * m.kappa * size * size));
  }
  return out;
}

}  // namespace oracle
