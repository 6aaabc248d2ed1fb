#include <cohesive_pf/mesh.hpp>

#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <utility>

using namespace cohesive_pf;

namespace {

MeshSpec interval(double L, double h) {
  MeshSpec s;
  s.domain = DomainKind::Interval;
  s.length = L;
  s.h = h;
  return s;
}

MeshSpec grid(DomainKind kind, double h, Diagonal diag) {
  MeshSpec s;
  s.domain = kind;
  s.h = h;
  s.diag = diag;
  return s;
}

// Edge -> number of incident triangles.
std::map<std::pair<Index, Index>, int> edge_use(const Mesh& m) {
  std::map<std::pair<Index, Index>, int> use;
  for (Index e = 0; e < m.num_elements(); ++e) {
    const auto el = m.element(e);
    for (int k = 0; k < 3; ++k) {
      Index a = el[k], b = el[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++use[{a, b}];
    }
  }
  return use;
}

}  // namespace

TEST(Interval, UniformPartition) {
  const Mesh m = build_mesh(interval(1.0, 0.5));
  ASSERT_EQ(m.num_nodes(), 3u);
  ASSERT_EQ(m.num_elements(), 2u);
  EXPECT_DOUBLE_EQ(m.node(0).x, 0.0);
  EXPECT_DOUBLE_EQ(m.node(1).x, 0.5);
  EXPECT_DOUBLE_EQ(m.node(2).x, 1.0);
  EXPECT_EQ(m.tagged("left"), std::vector<Index>{0});
  EXPECT_EQ(m.tagged("right"), std::vector<Index>{2});
}

TEST(Interval, TinyCentralElement) {
  for (bool centered : {false, true}) {
    MeshSpec s = interval(1.0, 0.08);
    s.refinement = 1.0 / 25.0;
    s.centered = centered;
    const Mesh m = build_mesh(s);
    const double mid = centered ? 0.0 : 0.5;
    int tiny = 0;
    for (Index e = 0; e < m.num_elements(); ++e) {
      const auto el = m.element(e);
      if (std::abs(m.measure(e) - 0.0032) < 1e-12) {
        ++tiny;
        EXPECT_LT(m.node(el[0]).x, mid);
        EXPECT_GT(m.node(el[1]).x, mid);
      } else {
        EXPECT_GT(m.measure(e), 0.05);
        EXPECT_LE(m.measure(e), 0.08 + 1e-12);
      }
    }
    EXPECT_EQ(tiny, 1);
    for (Index i = 1; i < m.num_nodes(); ++i) EXPECT_GT(m.node(i).x, m.node(i - 1).x);
    EXPECT_NEAR(m.total_measure(), centered ? 2.0 : 1.0, 1e-12);
    // The two regions around the tiny element partition the nodes.
    EXPECT_EQ(m.tagged("left_region").size() + m.tagged("right_region").size(), m.num_nodes());
  }
}

TEST(Interval, RejectsDegenerateSpec) {
  EXPECT_THROW(build_mesh(interval(1.0, 2.0)), std::invalid_argument);
  EXPECT_THROW(build_mesh(interval(1.0, 1.0)), std::invalid_argument);
  EXPECT_THROW(build_mesh(interval(1.0, -0.1)), std::invalid_argument);
  MeshSpec s = interval(1.0, 0.1);
  s.refinement = 1.5;
  EXPECT_THROW(build_mesh(s), std::invalid_argument);
}

TEST(Square, TwoByTwoGrid) {
  const Mesh m = build_mesh(grid(DomainKind::Square, 0.5, Diagonal::A));
  EXPECT_EQ(m.num_nodes(), 9u);
  ASSERT_EQ(m.num_elements(), 8u);
  for (Index e = 0; e < m.num_elements(); ++e) EXPECT_DOUBLE_EQ(m.measure(e), 0.125);
}

TEST(Square, FullResolutionCount) {
  const Mesh m = build_mesh(grid(DomainKind::Square, 0.005, Diagonal::A));
  EXPECT_EQ(m.num_elements(), 80000u);
  EXPECT_EQ(m.num_nodes(), 201u * 201u);
  EXPECT_NEAR(m.total_measure(), 1.0, 1e-10);
}

TEST(LShape, QuarterRemoved) {
  const Mesh m = build_mesh(grid(DomainKind::LShape, 0.25, Diagonal::B));
  EXPECT_EQ(m.num_elements(), 24u);
  EXPECT_EQ(m.num_nodes(), 21u);
  EXPECT_NEAR(m.total_measure(), 0.75, 1e-12);
  for (Index e = 0; e < m.num_elements(); ++e) {
    const Point c = m.centroid(e);
    EXPECT_FALSE(c.x < 0.5 && c.y < 0.5);
  }
  // Re-entrant edges: x = 0.5, y <= 0.5 and y = 0.5, x <= 0.5.
  for (Index n : m.tagged("reentrant")) {
    const Point p = m.node(n);
    EXPECT_TRUE((std::abs(p.x - 0.5) < 1e-12 && p.y <= 0.5 + 1e-12) || (std::abs(p.y - 0.5) < 1e-12 && p.x <= 0.5 + 1e-12));
  }
  EXPECT_EQ(m.tagged("reentrant").size(), 5u);
}

TEST(Square, RejectsBadSpecs) {
  EXPECT_THROW(build_mesh(grid(DomainKind::Square, 0.3, Diagonal::A)), std::invalid_argument);
  EXPECT_THROW(build_mesh(grid(DomainKind::LShape, 1.0 / 3.0, Diagonal::A)), std::invalid_argument);
  EXPECT_THROW(parse_diagonal("C"), std::invalid_argument);
  EXPECT_EQ(parse_diagonal("b"), Diagonal::B);
}

class StructuredMesh : public ::testing::TestWithParam<std::tuple<DomainKind, Diagonal, double>> {};

TEST_P(StructuredMesh, Invariants) {
  const auto [kind, diag, h] = GetParam();
  const Mesh m = build_mesh(grid(kind, h, diag));
  const double area = kind == DomainKind::Square ? 1.0 : 0.75;
  EXPECT_NEAR(m.total_measure(), area, 1e-10 * area);
  for (Index e = 0; e < m.num_elements(); ++e) {
    EXPECT_NEAR(m.measure(e), 0.5 * h * h, 1e-14);
    const auto el = m.element(e);
    const Point a = m.node(el[0]), b = m.node(el[1]), c = m.node(el[2]);
    EXPECT_GT((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y), 0.0);
  }
  // Interior edges are shared by two triangles, boundary edges by one.
  const auto use = edge_use(m);
  Index boundary_edges = 0;
  for (const auto& [edge, count] : use) {
    EXPECT_TRUE(count == 1 || count == 2);
    if (count == 1) ++boundary_edges;
  }
  // Both domains have perimeter 4.
  EXPECT_EQ(boundary_edges, static_cast<Index>(std::llround(4.0 / h)));
  // Tags hold exactly the nodes on the geometric loci.
  const std::vector<std::pair<std::string, std::function<bool(Point)>>> loci{
      {"left", [](Point p) { return std::abs(p.x) <= 1e-12; }},
      {"right", [](Point p) { return std::abs(p.x - 1.0) <= 1e-12; }},
      {"bottom", [](Point p) { return std::abs(p.y) <= 1e-12; }},
      {"top", [](Point p) { return std::abs(p.y - 1.0) <= 1e-12; }}};
  for (const auto& [tag, on] : loci) {
    std::vector<Index> expect;
    for (Index n = 0; n < m.num_nodes(); ++n)
      if (on(m.node(n))) expect.push_back(n);
    EXPECT_EQ(m.tagged(tag), expect) << tag;
  }
}

INSTANTIATE_TEST_SUITE_P(Variants, StructuredMesh,
                         ::testing::Combine(::testing::Values(DomainKind::Square, DomainKind::LShape),
                                            ::testing::Values(Diagonal::A, Diagonal::B), ::testing::Values(0.25, 0.05)));

TEST(Square, VariantsShareNodes) {
  const Mesh a = build_mesh(grid(DomainKind::Square, 0.1, Diagonal::A));
  const Mesh b = build_mesh(grid(DomainKind::Square, 0.1, Diagonal::B));
  ASSERT_EQ(a.num_nodes(), b.num_nodes());
  EXPECT_EQ(a.num_elements(), b.num_elements());
  for (Index n = 0; n < a.num_nodes(); ++n) {
    EXPECT_EQ(a.node(n).x, b.node(n).x);
    EXPECT_EQ(a.node(n).y, b.node(n).y);
  }
  EXPECT_NE(a.connectivity(), b.connectivity());
  // Variant A cuts along NW-SE: the hypotenuse of the first cell joins (h,0) and (0,h).
  std::set<std::pair<Index, Index>> ea, eb;
  for (const auto& [e, c] : edge_use(a)) ea.insert(e);
  for (const auto& [e, c] : edge_use(b)) eb.insert(e);
  const Index sw = 0, se = 1, nw = 11, ne = 12;
  EXPECT_TRUE(ea.count({se, nw}));
  EXPECT_FALSE(ea.count({sw, ne}));
  EXPECT_TRUE(eb.count({sw, ne}));
  EXPECT_FALSE(eb.count({se, nw}));
}

class Marks {
 public:
  explicit Marks(Index n) : v_(new bool[n]()), n_(n) {}
  bool& operator[](Index i) { return v_[i]; }
  std::span<const bool> span() const { return {v_.get(), n_}; }

 private:
  std::unique_ptr<bool[]> v_;
  Index n_;
};

TEST(BandWidth, SingleElement) {
  const Mesh m = build_mesh(interval(1.0, 0.01));
  Marks marked(m.num_elements());
  marked[40] = true;
  EXPECT_NEAR(band_width(m, marked.span(), {1, 0}), 0.01, 1e-12);
}

TEST(BandWidth, OneCellColumn) {
  const Mesh m = build_mesh(grid(DomainKind::Square, 0.005, Diagonal::A));
  Marks marked(m.num_elements());
  for (Index e = 0; e < m.num_elements(); ++e) {
    const Point c = m.centroid(e);
    marked[e] = c.x > 0.5 && c.x < 0.505;
  }
  const double w = band_width(m, marked.span(), {1, 0});
  // Centroid spread h/3 plus the hypotenuse h*sqrt(2).
  EXPECT_NEAR(w, 0.005 / 3.0 + 0.005 * std::sqrt(2.0), 1e-12);
  EXPECT_GE(w, 0.005);
  EXPECT_LE(w, 0.01);
}

TEST(BandWidth, WholeDomain) {
  const Mesh m = build_mesh(grid(DomainKind::Square, 0.01, Diagonal::B));
  Marks marked(m.num_elements());
  for (Index e = 0; e < m.num_elements(); ++e) marked[e] = true;
  EXPECT_NEAR(band_width(m, marked.span(), {1, 0}), 1.0, 0.01);
  EXPECT_NEAR(band_width(m, marked.span(), {0, 3}), 1.0, 0.01);
}

TEST(BandWidth, Errors) {
  const Mesh m = build_mesh(interval(1.0, 0.25));
  Marks none(m.num_elements());
  EXPECT_THROW(band_width(m, none.span(), {1, 0}), std::invalid_argument);
  Marks wrong(2);
  EXPECT_THROW(band_width(m, wrong.span(), {1, 0}), std::invalid_argument);
  none[0] = true;
  EXPECT_THROW(band_width(m, none.span(), {0, 0}), std::invalid_argument);
}
