// CSR matrices, FE assembly pattern, Jacobi-PCG and a sparse Cholesky wrapper.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "mesh.hpp"
#include "parallel.hpp"

namespace cohesive_pf {

class LinearSolveError : public std::runtime_error {
 public:
  LinearSolveError(const std::string& what, double residual, Index iterations)
      : std::runtime_error(what + " (relative residual " + std::to_string(residual) + " after " +
                           std::to_string(iterations) + " iterations)"),
        residual_(residual),
        iterations_(iterations) {}
  double residual() const { return residual_; }
  Index iterations() const { return iterations_; }

 private:
  double residual_;
  Index iterations_;
};

struct CsrMatrix {
  Index rows = 0;
  std::vector<Index> row_ptr{0};
  std::vector<Index> cols;
  std::vector<double> vals;

  Index nnz() const { return vals.size(); }

  /// Position of (r, c) in `vals`, or -1 if not stored.
  Index find(Index r, Index c) const {
    auto b = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
    auto e = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
    auto it = std::lower_bound(b, e, c);
    if (it == e || *it != c) return static_cast<Index>(-1);
    return static_cast<Index>(it - cols.begin());
  }

  double at(Index r, Index c) const {
    const Index k = find(r, c);
    return k == static_cast<Index>(-1) ? 0.0 : vals[k];
  }

  void multiply(std::span<const double> x, std::span<double> y) const {
    parallel_for(rows, [&](Index r) {
      double s = 0.0;
      for (Index k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += vals[k] * x[cols[k]];
      y[r] = s;
    });
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(rows, 0.0);
    for (Index r = 0; r < rows; ++r) d[r] = at(r, r);
    return d;
  }

  void set_zero() { std::fill(vals.begin(), vals.end(), 0.0); }

  /// Max |A_ij - A_ji| / max(|A_ij|, |A_ji|) over stored pairs.
  double symmetry_defect() const {
    double worst = 0.0;
    for (Index r = 0; r < rows; ++r)
      for (Index k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
        const double a = vals[k], b = at(cols[k], r);
        const double scale = std::max(std::abs(a), std::abs(b));
        if (scale > 0.0) worst = std::max(worst, std::abs(a - b) / scale);
      }
    return worst;
  }

  /// Infinity norm; bounds the spectral radius of a symmetric matrix.
  double norm_inf() const {
    double m = 0.0;
    for (Index r = 0; r < rows; ++r) {
      double s = 0.0;
      for (Index k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += std::abs(vals[k]);
      m = std::max(m, s);
    }
    return m;
  }

  static CsrMatrix from_dense(const std::vector<std::vector<double>>& a) {
    CsrMatrix m;
    m.rows = a.size();
    m.row_ptr.assign(1, 0);
    for (const auto& row : a) {
      for (Index c = 0; c < row.size(); ++c)
        if (row[c] != 0.0) {
          m.cols.push_back(c);
          m.vals.push_back(row[c]);
        }
      m.row_ptr.push_back(m.cols.size());
    }
    return m;
  }
};

/// CSR pattern of a P1 operator with `comps` unknowns per node, plus for each
/// element the positions of its (npe*comps)^2 local entries inside `vals`.
struct FePattern {
  CsrMatrix matrix;
  int comps = 1;
  Index local_size = 0;
  std::vector<Index> slots;  // element-major, row-major local blocks

  FePattern() = default;
  FePattern(const Mesh& mesh, int components) : comps(components) {
    const Index n = mesh.num_nodes() * static_cast<Index>(comps);
    const Index npe = mesh.nodes_per_element();
    local_size = npe * static_cast<Index>(comps);
    std::vector<std::vector<Index>> adj(mesh.num_nodes());
    for (Index e = 0; e < mesh.num_elements(); ++e) {
      const auto el = mesh.element(e);
      for (Index a : el)
        for (Index b : el) adj[a].push_back(b);
    }
    matrix.rows = n;
    matrix.row_ptr.assign(1, 0);
    for (Index node = 0; node < mesh.num_nodes(); ++node) {
      auto& nb = adj[node];
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
      for (int ci = 0; ci < comps; ++ci) {
        for (Index other : nb)
          for (int cj = 0; cj < comps; ++cj) matrix.cols.push_back(other * comps + cj);
        matrix.row_ptr.push_back(matrix.cols.size());
      }
    }
    matrix.vals.assign(matrix.cols.size(), 0.0);
    slots.resize(mesh.num_elements() * local_size * local_size);
    for (Index e = 0; e < mesh.num_elements(); ++e) {
      const auto el = mesh.element(e);
      Index* out = slots.data() + e * local_size * local_size;
      for (Index a = 0; a < npe; ++a)
        for (int ca = 0; ca < comps; ++ca)
          for (Index b = 0; b < npe; ++b)
            for (int cb = 0; cb < comps; ++cb)
              *out++ = matrix.find(el[a] * comps + ca, el[b] * comps + cb);
    }
  }

  /// Adds a dense local matrix (row-major, local dof = node*comps + comp) of element e.
  void add_local(Index e, std::span<const double> local) {
    const Index* s = slots.data() + e * local_size * local_size;
    for (Index k = 0; k < local_size * local_size; ++k) matrix.vals[s[k]] += local[k];
  }
};

struct CgOptions {
  double rel_tol = 1e-10;
  /// 0 selects the default cap of 10 x unknown count.
  Index max_iter = 0;
};

struct CgResult {
  Index iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-PCG on the free unknowns of A x = b. Entries with `fixed[i]` keep the
/// value already stored in x. Convergence: ||r_free|| <= rel_tol * ||b_free - A_fc x_c||.
inline CgResult pcg_solve(const CsrMatrix& A, std::span<const double> b, std::span<double> x,
                          const std::vector<bool>& fixed, const CgOptions& opt = {},
                          const std::vector<double>* diag_cache = nullptr) {
  const Index n = A.rows;
  if (b.size() != n || x.size() != n) throw std::invalid_argument("pcg_solve: size mismatch");
  const bool any_fixed = !fixed.empty();
  auto is_free = [&](Index i) { return !any_fixed || !fixed[i]; };

  std::vector<double> diag = diag_cache ? *diag_cache : A.diagonal();
  std::vector<double> r(n), z(n), p(n), q(n);

  // Reference norm: right-hand side of the constraint-eliminated system.
  std::vector<double> lift(n, 0.0);
  for (Index i = 0; i < n; ++i)
    if (!is_free(i)) lift[i] = x[i];
  A.multiply(lift, q);
  double bnorm2 = 0.0;
  for (Index i = 0; i < n; ++i)
    if (is_free(i)) bnorm2 += (b[i] - q[i]) * (b[i] - q[i]);
  const double bnorm = std::sqrt(bnorm2);

  A.multiply(x, q);
  double rnorm2 = 0.0;
  for (Index i = 0; i < n; ++i) {
    r[i] = is_free(i) ? b[i] - q[i] : 0.0;
    rnorm2 += r[i] * r[i];
  }
  CgResult res;
  if (bnorm == 0.0) {
    for (Index i = 0; i < n; ++i)
      if (is_free(i)) x[i] = 0.0;
    return res;
  }
  const double target = opt.rel_tol * bnorm;
  res.relative_residual = std::sqrt(rnorm2) / bnorm;
  if (std::sqrt(rnorm2) <= target) return res;

  const Index cap = opt.max_iter ? opt.max_iter : 10 * std::max<Index>(n, 1);
  for (Index i = 0; i < n; ++i) z[i] = is_free(i) && diag[i] > 0.0 ? r[i] / diag[i] : r[i];
  p = z;
  double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
  for (Index it = 1; it <= cap; ++it) {
    A.multiply(p, q);
    if (any_fixed)
      for (Index i = 0; i < n; ++i)
        if (fixed[i]) q[i] = 0.0;
    const double pq = std::inner_product(p.begin(), p.end(), q.begin(), 0.0);
    if (!(pq > 0.0)) throw LinearSolveError("pcg_solve: operator is not positive definite", std::sqrt(rnorm2) / bnorm, it);
    const double alpha = rz / pq;
    rnorm2 = 0.0;
    for (Index i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
      rnorm2 += r[i] * r[i];
    }
    res.iterations = it;
    res.relative_residual = std::sqrt(rnorm2) / bnorm;
    if (std::sqrt(rnorm2) <= target) return res;
    for (Index i = 0; i < n; ++i) z[i] = is_free(i) && diag[i] > 0.0 ? r[i] / diag[i] : r[i];
    const double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (Index i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw LinearSolveError("pcg_solve: no convergence", res.relative_residual, res.iterations);
}

/// Sparse Cholesky of the free-free block of a symmetric matrix with a fixed
/// pattern. The fill-reducing ordering and symbolic factorization are computed
/// once; factorize() only redoes the numeric part.
class ReducedCholesky {
 public:
  ReducedCholesky() = default;
  ReducedCholesky(const CsrMatrix& pattern, const std::vector<bool>& fixed) : n_(pattern.rows) {
    free_index_.assign(n_, static_cast<Index>(-1));
    for (Index i = 0; i < n_; ++i)
      if (fixed.empty() || !fixed[i]) {
        free_index_[i] = free_.size();
        free_.push_back(i);
      }
    std::vector<Eigen::Triplet<double>> trip;
    for (Index r : free_)
      for (Index k = pattern.row_ptr[r]; k < pattern.row_ptr[r + 1]; ++k) {
        const Index c = pattern.cols[k];
        if (free_index_[c] == static_cast<Index>(-1) || c > r) continue;
        trip.emplace_back(static_cast<int>(free_index_[r]), static_cast<int>(free_index_[c]), 1.0);
        source_.push_back(k);
      }
    reduced_.resize(static_cast<Eigen::Index>(free_.size()), static_cast<Eigen::Index>(free_.size()));
    reduced_.setFromTriplets(trip.begin(), trip.end());
    reduced_.makeCompressed();
    slot_.resize(source_.size());
    for (Index t = 0; t < trip.size(); ++t) {
      double* ref = &reduced_.coeffRef(trip[t].row(), trip[t].col());
      slot_[t] = static_cast<Index>(ref - reduced_.valuePtr());
    }
    if (!free_.empty()) llt_.analyzePattern(reduced_);
  }

  Index free_count() const { return free_.size(); }

  /// Numeric factorization with the values of A (same pattern as at construction).
  void factorize(const CsrMatrix& A) {
    if (free_.empty()) return;
    double* v = reduced_.valuePtr();
    for (Index t = 0; t < source_.size(); ++t) v[slot_[t]] = A.vals[source_[t]];
    llt_.factorize(reduced_);
    if (llt_.info() != Eigen::Success) throw LinearSolveError("ReducedCholesky: matrix is not positive definite", 0.0, 0);
  }

  /// x_free = A_ff^-1 b_free; fixed entries of x are set to zero.
  void solve(std::span<const double> b, std::span<double> x) const {
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(free_.size()));
    for (Index i = 0; i < free_.size(); ++i) rhs[static_cast<Eigen::Index>(i)] = b[free_[i]];
    std::fill(x.begin(), x.end(), 0.0);
    if (free_.empty()) return;
    const Eigen::VectorXd sol = llt_.solve(rhs);
    for (Index i = 0; i < free_.size(); ++i) x[free_[i]] = sol[static_cast<Eigen::Index>(i)];
  }

 private:
  Index n_ = 0;
  std::vector<Index> free_;
  std::vector<Index> free_index_;
  std::vector<Index> source_;
  std::vector<Index> slot_;
  Eigen::SparseMatrix<double> reduced_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
};

/// Symmetric system with Dirichlet constraints.
struct SparseSystem {
  CsrMatrix matrix;
  std::vector<double> rhs;
  std::vector<std::pair<Index, double>> constraints;

  /// Row/column elimination: constrained rows and columns become identity with
  /// the prescribed value on the right-hand side. Symmetry is preserved.
  void apply_constraints() {
    std::vector<char> is_c(matrix.rows, 0);
    std::vector<double> val(matrix.rows, 0.0);
    for (auto [i, v] : constraints) {
      if (i >= matrix.rows) throw std::invalid_argument("constraint index out of range");
      is_c[i] = 1;
      val[i] = v;
    }
    for (Index r = 0; r < matrix.rows; ++r) {
      for (Index k = matrix.row_ptr[r]; k < matrix.row_ptr[r + 1]; ++k) {
        const Index c = matrix.cols[k];
        if (is_c[r] || is_c[c]) {
          if (!is_c[r] && is_c[c]) rhs[r] -= matrix.vals[k] * val[c];
          matrix.vals[k] = (r == c) ? 1.0 : 0.0;
        }
      }
      if (is_c[r]) {
        if (matrix.find(r, r) == static_cast<Index>(-1)) throw std::invalid_argument("constrained row lacks a diagonal entry");
        rhs[r] = val[r];
      }
    }
  }
};

/// Applies the constraints and solves with Jacobi-PCG. The result satisfies the
/// constraints exactly.
inline std::vector<double> assemble_and_solve(SparseSystem system, const CgOptions& opt = {}) {
  if (system.rhs.size() != system.matrix.rows) throw std::invalid_argument("assemble_and_solve: size mismatch");
  system.apply_constraints();
  std::vector<double> x(system.matrix.rows, 0.0);
  std::vector<bool> fixed(system.matrix.rows, false);
  for (auto [i, v] : system.constraints) {
    x[i] = v;
    fixed[i] = true;
  }
  pcg_solve(system.matrix, system.rhs, x, fixed, opt);
  return x;
}

}  // namespace cohesive_pf
