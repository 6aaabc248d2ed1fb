// CSV, legacy VTK and small SVG plots.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fields.hpp"
#include "mesh.hpp"

namespace cohesive_pf {

/// 12 significant digits, locale independent.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

/// Row-oriented CSV with a fixed header; cells are strings or numbers.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& operator<<(double v) {
      cells_.push_back(format_number(v));
      return *this;
    }
    Row& operator<<(const std::string& s) {
      cells_.push_back(s);
      return *this;
    }
    Row& operator<<(const char* s) { return *this << std::string(s); }

   private:
    friend class CsvTable;
    std::vector<std::string> cells_;
  };

  Row& row() {
    rows_.emplace_back();
    return rows_.back();
  }

  Index size() const { return rows_.size(); }

  void write(std::ostream& out) const {
    write_line(out, header_);
    for (const auto& r : rows_) {
      if (r.cells_.size() != header_.size()) throw std::logic_error("CSV row width does not match header");
      write_line(out, r.cells_);
    }
  }

  void write(const std::filesystem::path& path) const {
    auto out = open_output(path);
    write(out);
  }

 private:
  static void write_line(std::ostream& out, const std::vector<std::string>& cells) {
    for (Index i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  }

  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

/// Flattened field dump with header index,comp0,comp1,...
inline void write_field_csv(std::ostream& out, int components, const std::vector<double>& values) {
  out << "index";
  for (int c = 0; c < components; ++c) out << ",comp" << c;
  out << '\n';
  const Index n = values.size() / static_cast<Index>(components);
  for (Index i = 0; i < n; ++i) {
    out << i;
    for (int c = 0; c < components; ++c) out << ',' << format_number(values[i * components + c]);
    out << '\n';
  }
}

inline void write_field_csv(const std::filesystem::path& path, const NodalField& f) {
  auto out = open_output(path);
  write_field_csv(out, f.components, f.values);
}

inline void write_field_csv(const std::filesystem::path& path, const ElementField& f) {
  auto out = open_output(path);
  write_field_csv(out, f.components, f.values);
}

// ---------------------------------------------------------------------------
// VTK legacy

enum class VtkLocation { Point, Cell };

/// components: 1 (SCALARS), 3 (VECTORS) or 9 (TENSORS).
struct VtkArray {
  std::string name;
  VtkLocation location = VtkLocation::Point;
  int components = 1;
  std::vector<double> values;
};

/// Pads 2-component nodal vectors to 3D VTK vectors.
inline VtkArray vtk_point_vectors(const std::string& name, const NodalField& f) {
  VtkArray a{name, VtkLocation::Point, 3, {}};
  a.values.reserve(f.values.size() / f.components * 3);
  const Index n = f.values.size() / static_cast<Index>(f.components);
  for (Index i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) a.values.push_back(c < f.components ? f(i, c) : 0.0);
  return a;
}

inline void write_vtk(std::ostream& out, const Mesh& mesh, const std::vector<VtkArray>& arrays,
                      const std::string& title = "cohesive_pf") {
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_nodes() << " double\n";
  for (const Point& p : mesh.nodes()) out << format_number(p.x) << ' ' << format_number(p.y) << " 0\n";
  const Index npe = mesh.nodes_per_element();
  out << "CELLS " << mesh.num_elements() << ' ' << mesh.num_elements() * (npe + 1) << '\n';
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    out << npe;
    for (Index n : mesh.element(e)) out << ' ' << n;
    out << '\n';
  }
  out << "CELL_TYPES " << mesh.num_elements() << '\n';
  const int type = mesh.dimension() == 1 ? 3 : 5;
  for (Index e = 0; e < mesh.num_elements(); ++e) out << type << '\n';

  for (VtkLocation loc : {VtkLocation::Point, VtkLocation::Cell}) {
    const Index count = loc == VtkLocation::Point ? mesh.num_nodes() : mesh.num_elements();
    bool header = false;
    for (const auto& a : arrays) {
      if (a.location != loc) continue;
      if (a.values.size() != count * static_cast<Index>(a.components))
        throw std::invalid_argument("VTK array '" + a.name + "' has the wrong length");
      if (!header) {
        out << (loc == VtkLocation::Point ? "POINT_DATA " : "CELL_DATA ") << count << '\n';
        header = true;
      }
      if (a.components == 1) {
        out << "SCALARS " << a.name << " double 1\nLOOKUP_TABLE default\n";
        for (double v : a.values) out << format_number(v) << '\n';
      } else if (a.components == 3 || a.components == 9) {
        out << (a.components == 3 ? "VECTORS " : "TENSORS ") << a.name << " double\n";
        for (Index i = 0; i < count; ++i) {
          for (int c = 0; c < a.components; ++c) out << (c ? " " : "") << format_number(a.values[i * a.components + c]);
          out << '\n';
        }
      } else {
        throw std::invalid_argument("VTK array '" + a.name + "' must have 1, 3 or 9 components");
      }
    }
  }
}

inline void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const std::vector<VtkArray>& arrays) {
  auto out = open_output(path);
  write_vtk(out, mesh, arrays);
}

// ---------------------------------------------------------------------------
// SVG line plots

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool markers = false;
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<PlotSeries> series;
  bool equal_aspect = false;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

inline void write_svg_plot(std::ostream& out, const PlotSpec& spec) {
  const double W = 640, H = 440, ml = 80, mr = 150, mt = 40, mb = 60;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : spec.series)
    for (Index i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pw = W - ml - mr, ph = H - mt - mb;
  if (spec.equal_aspect) {
    const double sx = (x1 - x0) / pw, sy = (y1 - y0) / ph;
    if (sx > sy) {
      const double c = 0.5 * (y0 + y1);
      y0 = c - 0.5 * sx * ph;
      y1 = c + 0.5 * sx * ph;
    } else {
      const double c = 0.5 * (x0 + x1);
      x0 = c - 0.5 * sy * pw;
      x1 = c + 0.5 * sy * pw;
    }
  }
  auto X = [&](double v) { return ml + (v - x0) / (x1 - x0) * pw; };
  auto Y = [&](double v) { return mt + ph - (v - y0) / (y1 - y0) * ph; };
  using detail::svg_num;
  using detail::xml_escape;

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W << "\" height=\"" << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << svg_num(ml + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << xml_escape(spec.title) << "</text>\n"
      << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    out << "<text x=\"" << svg_num(X(xv)) << "\" y=\"" << svg_num(mt + ph + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << format_number(std::round(xv * 1e6) / 1e6)
        << "</text>\n";
    out << "<text x=\"" << svg_num(ml - 6) << "\" y=\"" << svg_num(Y(yv) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << format_number(std::round(yv * 1e6) / 1e6)
        << "</text>\n";
  }
  out << "<text x=\"" << svg_num(ml + pw / 2) << "\" y=\"" << svg_num(H - 16)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(spec.xlabel) << "</text>\n"
      << "<text x=\"18\" y=\"" << svg_num(mt + ph / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << svg_num(mt + ph / 2) << ")\">" << xml_escape(spec.ylabel) << "</text>\n";

  Index legend = 0;
  for (const auto& s : spec.series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
        << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    for (Index i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) out << svg_num(X(s.x[i])) << ',' << svg_num(Y(s.y[i])) << ' ';
    out << "\"/>\n";
    if (s.markers)
      for (Index i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
          out << "<circle cx=\"" << svg_num(X(s.x[i])) << "\" cy=\"" << svg_num(Y(s.y[i])) << "\" r=\"2.5\" fill=\"" << s.color
              << "\"/>\n";
    const double ly = mt + 14 + 18.0 * static_cast<double>(legend++);
    out << "<line x1=\"" << svg_num(ml + pw + 10) << "\" y1=\"" << svg_num(ly) << "\" x2=\"" << svg_num(ml + pw + 30)
        << "\" y2=\"" << svg_num(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << svg_num(ml + pw + 34) << "\" y=\"" << svg_num(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
}

inline void write_svg_plot(const std::filesystem::path& path, const PlotSpec& spec) {
  auto out = open_output(path);
  write_svg_plot(out, spec);
}

}  // namespace cohesive_pf
