// P1 nodal and P0 element fields.
#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "mesh.hpp"

namespace cohesive_pf {

/// Piecewise-affine field: `components` values per node, node-major.
struct NodalField {
  int components = 1;
  std::vector<double> values;

  NodalField() = default;
  NodalField(const Mesh& mesh, int comps, double init = 0.0)
      : components(comps), values(mesh.num_nodes() * static_cast<Index>(comps), init) {}

  double& operator()(Index node, int c = 0) { return values[node * components + c]; }
  double operator()(Index node, int c = 0) const { return values[node * components + c]; }
  Index size() const { return values.size(); }
  bool matches(const Mesh& mesh) const { return values.size() == mesh.num_nodes() * static_cast<Index>(components); }
};

/// Piecewise-constant field: `components` values per element.
/// Symmetric 2x2 tensors use (xx, yy, xy); tensors with an out-of-plane part use (xx, yy, xy, zz).
struct ElementField {
  int components = 1;
  std::vector<double> values;

  ElementField() = default;
  ElementField(const Mesh& mesh, int comps, double init = 0.0)
      : components(comps), values(mesh.num_elements() * static_cast<Index>(comps), init) {}

  double& operator()(Index e, int c = 0) { return values[e * components + c]; }
  double operator()(Index e, int c = 0) const { return values[e * components + c]; }
  Index size() const { return values.size(); }
  bool matches(const Mesh& mesh) const { return values.size() == mesh.num_elements() * static_cast<Index>(components); }
};

/// Constant shape-function gradients of a P1 element: dN_k/dx = gx[k], dN_k/dy = gy[k].
struct ShapeGradients {
  std::array<double, 3> gx{};
  std::array<double, 3> gy{};
};

inline ShapeGradients shape_gradients(const Mesh& mesh, Index e) {
  ShapeGradients g;
  const auto el = mesh.element(e);
  if (mesh.dimension() == 1) {
    const double len = mesh.node(el[1]).x - mesh.node(el[0]).x;
    g.gx = {-1.0 / len, 1.0 / len, 0.0};
    return g;
  }
  const Point& a = mesh.node(el[0]);
  const Point& b = mesh.node(el[1]);
  const Point& c = mesh.node(el[2]);
  const double two_area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  g.gx = {(b.y - c.y) / two_area, (c.y - a.y) / two_area, (a.y - b.y) / two_area};
  g.gy = {(c.x - b.x) / two_area, (a.x - c.x) / two_area, (b.x - a.x) / two_area};
  return g;
}

/// Cached shape gradients for every element of a mesh.
class ElementGeometry {
 public:
  ElementGeometry() = default;
  explicit ElementGeometry(const Mesh& mesh) : grads_(mesh.num_elements()) {
    for (Index e = 0; e < mesh.num_elements(); ++e) grads_[e] = shape_gradients(mesh, e);
  }
  const ShapeGradients& operator[](Index e) const { return grads_[e]; }
  Index size() const { return grads_.size(); }

 private:
  std::vector<ShapeGradients> grads_;
};

/// Element-wise derivative of a P1 field.
///  - 1D scalar: slope (1 component)
///  - 2D scalar: gradient (gx, gy)
///  - 2D vector: symmetric strain (xx, yy, xy)
inline ElementField gradient(const Mesh& mesh, const NodalField& u) {
  if (!u.matches(mesh)) throw std::invalid_argument("gradient: field does not match mesh");
  const int dim = mesh.dimension();
  if (dim == 1 && u.components != 1) throw std::invalid_argument("gradient: 1D fields must be scalar");
  if (dim == 2 && u.components != 1 && u.components != 2) throw std::invalid_argument("gradient: unsupported component count");
  const int out = dim == 1 ? 1 : (u.components == 1 ? 2 : 3);
  ElementField g(mesh, out);
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    const auto sg = shape_gradients(mesh, e);
    const auto el = mesh.element(e);
    if (dim == 1) {
      g(e) = sg.gx[0] * u(el[0]) + sg.gx[1] * u(el[1]);
    } else if (u.components == 1) {
      for (int k = 0; k < 3; ++k) {
        g(e, 0) += sg.gx[k] * u(el[k]);
        g(e, 1) += sg.gy[k] * u(el[k]);
      }
    } else {
      double uxx = 0, uyy = 0, uxy = 0, uyx = 0;
      for (int k = 0; k < 3; ++k) {
        uxx += sg.gx[k] * u(el[k], 0);
        uxy += sg.gy[k] * u(el[k], 0);
        uyx += sg.gx[k] * u(el[k], 1);
        uyy += sg.gy[k] * u(el[k], 1);
      }
      g(e, 0) = uxx;
      g(e, 1) = uyy;
      g(e, 2) = 0.5 * (uxy + uyx);
    }
  }
  return g;
}

/// Arithmetic mean of the vertex values on each element.
inline ElementField element_mean(const Mesh& mesh, const NodalField& d) {
  if (!d.matches(mesh) || d.components != 1) throw std::invalid_argument("element_mean: expected a scalar nodal field");
  ElementField m(mesh, 1);
  const double k = 1.0 / static_cast<double>(mesh.nodes_per_element());
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    double s = 0.0;
    for (Index n : mesh.element(e)) s += d(n);
    m(e) = s * k;
  }
  return m;
}

}  // namespace cohesive_pf
