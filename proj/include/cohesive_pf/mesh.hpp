// Intervals and right-triangle grids with boundary tags.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cohesive_pf {

using Index = std::size_t;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class DomainKind { Interval, Square, LShape };
enum class Diagonal { A, B };

inline std::string to_string(Diagonal d) { return d == Diagonal::A ? "A" : "B"; }

inline Diagonal parse_diagonal(const std::string& s) {
  if (s == "A" || s == "a") return Diagonal::A;
  if (s == "B" || s == "b") return Diagonal::B;
  throw std::invalid_argument("unknown diagonal variant '" + s + "' (expected A or B)");
}

struct MeshSpec {
  DomainKind domain = DomainKind::Square;
  double length = 1.0;  // L: interval length / square edge / L-shape long edge
  double height = 1.0;  // H: reserved for rectangular domains
  double h = 0.1;
  Diagonal diag = Diagonal::A;
  /// Size factor of a single central element (interval only), e.g. 1/25.
  std::optional<double> refinement;
  /// Interval on [-L, L] instead of [0, L].
  bool centered = false;
};

/// Immutable simplicial mesh. Elements are segments (1D) or CCW triangles (2D).
class Mesh {
 public:
  Mesh() = default;

  /// Validates connectivity and orientation; throws std::invalid_argument on failure.
  static Mesh from_elements(int dimension, std::vector<Point> nodes, std::vector<Index> connectivity,
                            std::map<std::string, std::vector<Index>> tags) {
    if (dimension != 1 && dimension != 2) throw std::invalid_argument("mesh dimension must be 1 or 2");
    Mesh m;
    m.dim_ = dimension;
    m.nodes_ = std::move(nodes);
    m.conn_ = std::move(connectivity);
    const Index npe = m.nodes_per_element();
    if (m.conn_.size() % npe != 0) throw std::invalid_argument("connectivity size is not a multiple of nodes per element");
    const Index ne = m.conn_.size() / npe;
    m.measures_.resize(ne);
    for (Index e = 0; e < ne; ++e) {
      for (Index k = 0; k < npe; ++k)
        if (m.conn_[e * npe + k] >= m.nodes_.size()) throw std::invalid_argument("element references an invalid node");
      const double meas = m.signed_measure(e);
      if (dimension == 2 && meas < 0.0) throw std::invalid_argument("triangle is not counterclockwise");
      if (std::abs(meas) <= 0.0) throw std::invalid_argument("degenerate element");
      m.measures_[e] = std::abs(meas);
    }
    for (auto& [name, list] : tags) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
      for (Index n : list)
        if (n >= m.nodes_.size()) throw std::invalid_argument("tag '" + name + "' references an invalid node");
    }
    m.tags_ = std::move(tags);
    return m;
  }

  int dimension() const { return dim_; }
  Index nodes_per_element() const { return dim_ == 1 ? 2 : 3; }
  Index num_nodes() const { return nodes_.size(); }
  Index num_elements() const { return measures_.size(); }
  const std::vector<Point>& nodes() const { return nodes_; }
  const Point& node(Index i) const { return nodes_[i]; }

  std::span<const Index> element(Index e) const {
    return {conn_.data() + e * nodes_per_element(), nodes_per_element()};
  }
  const std::vector<Index>& connectivity() const { return conn_; }
  double measure(Index e) const { return measures_[e]; }
  const std::vector<double>& measures() const { return measures_; }

  double total_measure() const {
    // Pairwise summation keeps the relative error near machine precision.
    return pairwise_sum(measures_.data(), measures_.size());
  }

  Point centroid(Index e) const {
    Point c;
    for (Index n : element(e)) {
      c.x += nodes_[n].x;
      c.y += nodes_[n].y;
    }
    const double k = 1.0 / static_cast<double>(nodes_per_element());
    return {c.x * k, c.y * k};
  }

  /// Longest edge.
  double diameter(Index e) const {
    const auto el = element(e);
    double dmax = 0.0;
    for (Index i = 0; i < el.size(); ++i)
      for (Index j = i + 1; j < el.size(); ++j)
        dmax = std::max(dmax, std::hypot(nodes_[el[i]].x - nodes_[el[j]].x, nodes_[el[i]].y - nodes_[el[j]].y));
    return dmax;
  }

  bool has_tag(const std::string& name) const { return tags_.count(name) != 0; }

  /// Sorted node list for a tag; empty if the tag does not exist.
  const std::vector<Index>& tagged(const std::string& name) const {
    static const std::vector<Index> empty;
    auto it = tags_.find(name);
    return it == tags_.end() ? empty : it->second;
  }

  bool node_has_tag(Index node, const std::string& name) const {
    const auto& list = tagged(name);
    return std::binary_search(list.begin(), list.end(), node);
  }

  std::set<std::string> tags_of(Index node) const {
    std::set<std::string> out;
    for (const auto& [name, list] : tags_)
      if (std::binary_search(list.begin(), list.end(), node)) out.insert(name);
    return out;
  }

  const std::map<std::string, std::vector<Index>>& tags() const { return tags_; }

  /// Recursive pairwise summation (less rounding drift than a running sum).
  static double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 16) return std::accumulate(v, v + n, 0.0);
    return pairwise_sum(v, n / 2) + pairwise_sum(v + n / 2, n - n / 2);
  }

 private:

  double signed_measure(Index e) const {
    const auto el = element(e);
    if (dim_ == 1) return nodes_[el[1]].x - nodes_[el[0]].x;
    const Point& a = nodes_[el[0]];
    const Point& b = nodes_[el[1]];
    const Point& c = nodes_[el[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
  }

  int dim_ = 1;
  std::vector<Point> nodes_;
  std::vector<Index> conn_;
  std::vector<double> measures_;
  std::map<std::string, std::vector<Index>> tags_;
};

namespace detail {

inline Index segments_for(double length, double h) {
  const double ratio = length / h;
  const double rounded = std::round(ratio);
  if (rounded >= 1.0 && std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) return static_cast<Index>(rounded);
  return static_cast<Index>(std::ceil(ratio));
}

}  // namespace detail

/// 1D mesh on [0, L] (or [-L, L] when centered). Node coordinates strictly increase.
/// With spec.refinement = r, one element of size r*h sits at the midpoint and the
/// two remaining halves are split near-uniformly. Extra node sets "left_region" and
/// "right_region" hold the nodes on either side of that element.
inline Mesh build_interval(const MeshSpec& spec) {
  if (spec.domain != DomainKind::Interval) throw std::invalid_argument("build_interval requires an interval spec");
  if (!(spec.length > 0.0)) throw std::invalid_argument("interval length must be positive");
  if (!(spec.h > 0.0)) throw std::invalid_argument("mesh size h must be positive");
  if (spec.h >= spec.length) throw std::invalid_argument("mesh size h must be smaller than L");

  const double x0 = spec.centered ? -spec.length : 0.0;
  const double x1 = spec.length;
  const double span = x1 - x0;
  std::vector<double> xs;
  std::map<std::string, std::vector<Index>> tags;

  if (spec.refinement) {
    const double r = *spec.refinement;
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("refinement factor must lie in (0,1)");
    const double tiny = r * spec.h;
    const double mid = 0.5 * (x0 + x1);
    const double half = 0.5 * (span - tiny);
    const Index n = detail::segments_for(half, spec.h);
    for (Index i = 0; i <= n; ++i) xs.push_back(x0 + half * static_cast<double>(i) / static_cast<double>(n));
    xs.back() = mid - 0.5 * tiny;
    std::vector<Index> left(n + 1);
    std::iota(left.begin(), left.end(), Index{0});
    for (Index i = 0; i <= n; ++i) xs.push_back(mid + 0.5 * tiny + half * static_cast<double>(i) / static_cast<double>(n));
    xs.back() = x1;
    std::vector<Index> right(n + 1);
    std::iota(right.begin(), right.end(), n + 1);
    tags["left_region"] = std::move(left);
    tags["right_region"] = std::move(right);
  } else {
    const Index n = detail::segments_for(span, spec.h);
    for (Index i = 0; i <= n; ++i) xs.push_back(x0 + span * static_cast<double>(i) / static_cast<double>(n));
    xs.back() = x1;
  }

  std::vector<Point> nodes;
  nodes.reserve(xs.size());
  for (double x : xs) nodes.push_back({x, 0.0});
  std::vector<Index> conn;
  for (Index i = 0; i + 1 < nodes.size(); ++i) {
    conn.push_back(i);
    conn.push_back(i + 1);
  }
  tags["left"] = {0};
  tags["right"] = {nodes.size() - 1};
  return Mesh::from_elements(1, std::move(nodes), std::move(conn), std::move(tags));
}

/// Right-triangle grid of the unit square (or the L-shape with the lower-left
/// quarter removed). Variant A splits each cell along NW-SE, variant B along SW-NE.
inline Mesh build_structured_triangulation(const MeshSpec& spec) {
  if (spec.domain != DomainKind::Square && spec.domain != DomainKind::LShape)
    throw std::invalid_argument("structured triangulation requires a square or lshape domain");
  if (spec.diag != Diagonal::A && spec.diag != Diagonal::B) throw std::invalid_argument("unknown diagonal variant");
  if (!(spec.h > 0.0) || !(spec.length > 0.0)) throw std::invalid_argument("h and L must be positive");
  const double L = spec.length;
  const double ratio = L / spec.h;
  const double nr = std::round(ratio);
  if (nr < 1.0 || std::abs(ratio - nr) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("h does not divide the edge length");
  const Index n = static_cast<Index>(nr);
  const bool lshape = spec.domain == DomainKind::LShape;
  if (lshape && n % 2 != 0) throw std::invalid_argument("h does not divide the L-shape short edge");
  const Index cut = n / 2;
  auto cell_present = [&](Index i, Index j) { return !(lshape && i < cut && j < cut); };

  const Index nn = n + 1;
  std::vector<Index> id(nn * nn, static_cast<Index>(-1));
  std::vector<Point> nodes;
  auto node_id = [&](Index i, Index j) {
    Index& slot = id[j * nn + i];
    if (slot == static_cast<Index>(-1)) {
      slot = nodes.size();
      nodes.push_back({L * static_cast<double>(i) / static_cast<double>(n), L * static_cast<double>(j) / static_cast<double>(n)});
    }
    return slot;
  };
  // Number nodes row by row so that the numbering is independent of the variant.
  for (Index j = 0; j <= n; ++j)
    for (Index i = 0; i <= n; ++i) {
      bool used = false;
      for (Index dj = 0; dj < 2 && !used; ++dj)
        for (Index di = 0; di < 2 && !used; ++di) {
          if (i < di || j < dj) continue;
          const Index ci = i - di, cj = j - dj;
          if (ci < n && cj < n && cell_present(ci, cj)) used = true;
        }
      if (used) node_id(i, j);
    }

  std::vector<Index> conn;
  conn.reserve(6 * n * n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      if (!cell_present(i, j)) continue;
      const Index sw = id[j * nn + i], se = id[j * nn + i + 1];
      const Index nw = id[(j + 1) * nn + i], ne = id[(j + 1) * nn + i + 1];
      if (spec.diag == Diagonal::A) {
        conn.insert(conn.end(), {sw, se, nw, se, ne, nw});
      } else {
        conn.insert(conn.end(), {sw, se, ne, sw, ne, nw});
      }
    }

  constexpr double tol = 1e-12;
  std::map<std::string, std::vector<Index>> tags;
  for (Index k = 0; k < nodes.size(); ++k) {
    const Point& p = nodes[k];
    if (std::abs(p.x) <= tol) tags["left"].push_back(k);
    if (std::abs(p.y) <= tol) tags["bottom"].push_back(k);
    if (std::abs(p.x - L) <= tol) tags["right"].push_back(k);
    if (std::abs(p.y - L) <= tol) tags["top"].push_back(k);
    if (lshape) {
      const double c = 0.5 * L;
      const bool vertical = std::abs(p.x - c) <= tol && p.y <= c + tol;
      const bool horizontal = std::abs(p.y - c) <= tol && p.x <= c + tol;
      if (vertical || horizontal) tags["reentrant"].push_back(k);
    }
  }
  return Mesh::from_elements(2, std::move(nodes), std::move(conn), std::move(tags));
}

inline Mesh build_mesh(const MeshSpec& spec) {
  return spec.domain == DomainKind::Interval ? build_interval(spec) : build_structured_triangulation(spec);
}

/// Extent of the marked element set along `direction`: spread of the marked
/// centroids' projections plus the mean diameter of the marked elements.
inline double band_width(const Mesh& mesh, std::span<const bool> marked, Point direction) {
  if (marked.size() != mesh.num_elements()) throw std::invalid_argument("indicator size does not match element count");
  const double norm = std::hypot(direction.x, direction.y);
  if (!(norm > 0.0)) throw std::invalid_argument("direction must be nonzero");
  direction = {direction.x / norm, direction.y / norm};
  double lo = INFINITY, hi = -INFINITY, diam = 0.0;
  Index count = 0;
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    if (!marked[e]) continue;
    const Point c = mesh.centroid(e);
    const double s = c.x * direction.x + c.y * direction.y;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    diam += mesh.diameter(e);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("band_width: no element is marked");
  return (hi - lo) + diam / static_cast<double>(count);
}

}  // namespace cohesive_pf
