#include "mhdhho/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mhdhho {

namespace {

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

}  // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> elements)
    : vertices_(std::move(vertices)), elements_(std::move(elements)) {
  std::set<Triangle> seen;
  for (std::size_t t = 0; t < elements_.size(); ++t) {
    auto& tri = elements_[t];
    for (std::size_t v : tri) {
      if (v >= vertices_.size()) {
        throw MeshTopologyError("element " + std::to_string(t) + " references missing vertex " +
                                std::to_string(v));
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw MeshTopologyError("element " + std::to_string(t) + " repeats a vertex");
    }
    Triangle key = tri;
    std::sort(key.begin(), key.end());
    if (!seen.insert(key).second) {
      throw MeshTopologyError("duplicate element " + std::to_string(t));
    }
    if (signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]) < 0.0) {
      std::swap(tri[1], tri[2]);
    }
    if (signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]) <= 0.0) {
      throw MeshOrientationError("element " + std::to_string(t) + " has non-positive area");
    }
  }

  std::map<Edge, std::size_t> edge_index;
  element_faces_.resize(elements_.size());
  element_face_orientation_.resize(elements_.size());
  for (std::size_t t = 0; t < elements_.size(); ++t) {
    const auto& tri = elements_[t];
    for (int i = 0; i < 3; ++i) {
      std::size_t a = tri[i];
      std::size_t b = tri[(i + 1) % 3];
      Edge key{std::min(a, b), std::max(a, b)};
      auto [it, inserted] = edge_index.try_emplace(key, faces_.size());
      if (inserted) {
        faces_.push_back(key);
        face_elements_.push_back({t, npos});
      } else {
        auto& adj = face_elements_[it->second];
        if (adj[1] != npos) {
          throw MeshTopologyError("edge (" + std::to_string(key[0]) + ", " + std::to_string(key[1]) +
                                  ") belongs to more than two elements");
        }
        adj[1] = t;
      }
      element_faces_[t][i] = it->second;
      element_face_orientation_[t][i] = a < b ? 1 : -1;
    }
  }
}

std::size_t Mesh::num_boundary_faces() const {
  return static_cast<std::size_t>(
      std::count_if(face_elements_.begin(), face_elements_.end(), [](const auto& adj) { return adj[1] == npos; }));
}

std::size_t Mesh::local_face_index(std::size_t t, std::size_t f) const {
  const auto& fs = element_faces_[t];
  for (std::size_t i = 0; i < 3; ++i) {
    if (fs[i] == f) return i;
  }
  throw MeshTopologyError("face " + std::to_string(f) + " is not a face of element " + std::to_string(t));
}

std::array<Point, 3> Mesh::element_vertices(std::size_t t) const {
  const auto& tri = elements_[t];
  return {vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]};
}

Mesh generate_structured_mesh(int n) {
  if (n < 1) throw std::invalid_argument("structured mesh needs n >= 1");
  const auto m = static_cast<std::size_t>(n);
  std::vector<Point> vertices;
  vertices.reserve((m + 1) * (m + 1));
  for (std::size_t j = 0; j <= m; ++j) {
    for (std::size_t i = 0; i <= m; ++i) {
      vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
    }
  }
  auto id = [m](std::size_t i, std::size_t j) { return j * (m + 1) + i; };
  std::vector<Mesh::Triangle> elements;
  elements.reserve(2 * m * m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return Mesh(std::move(vertices), std::move(elements));
}

Mesh load_mesh(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;

  // Returns the next non-empty, comment-stripped line.
  auto next_line = [&](std::string& out) -> bool {
    while (std::getline(in, raw)) {
      ++line_no;
      auto hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      if (raw.find_first_not_of(" \t\r") != std::string::npos) {
        out = raw;
        return true;
      }
    }
    return false;
  };
  auto expect_header = [&](const std::string& keyword) -> long long {
    std::string line;
    if (!next_line(line)) throw MeshParseError(line_no, "expected '" + keyword + "'");
    std::istringstream ls(line);
    std::string word;
    long long value = -1;
    std::string trailing;
    if (!(ls >> word) || word != keyword || !(ls >> value) || (ls >> trailing)) {
      throw MeshParseError(line_no, "expected '" + keyword + " <count>'");
    }
    if (value < 0) throw MeshParseError(line_no, "negative count");
    return value;
  };

  if (expect_header("meshdim") != 2) throw MeshParseError(line_no, "only meshdim 2 is supported");

  const auto nv = static_cast<std::size_t>(expect_header("vertices"));
  std::vector<Point> vertices(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    std::string line;
    if (!next_line(line)) throw MeshParseError(line_no, "unexpected end of file in vertex list");
    std::istringstream ls(line);
    double x = 0.0, y = 0.0;
    std::string trailing;
    if (!(ls >> x >> y) || (ls >> trailing)) throw MeshParseError(line_no, "expected 'x y'");
    vertices[i] = Point(x, y);
  }

  const auto ne = static_cast<std::size_t>(expect_header("elements"));
  std::vector<Mesh::Triangle> elements(ne);
  for (std::size_t t = 0; t < ne; ++t) {
    std::string line;
    if (!next_line(line)) throw MeshParseError(line_no, "unexpected end of file in element list");
    std::istringstream ls(line);
    long long a = -1, b = -1, c = -1;
    std::string trailing;
    if (!(ls >> a >> b >> c) || (ls >> trailing)) throw MeshParseError(line_no, "expected 'i j k'");
    for (long long v : {a, b, c}) {
      if (v < 0 || static_cast<std::size_t>(v) >= nv) {
        throw MeshParseError(line_no, "vertex index " + std::to_string(v) + " out of range");
      }
    }
    elements[t] = {static_cast<std::size_t>(a), static_cast<std::size_t>(b), static_cast<std::size_t>(c)};
  }
  std::string extra;
  if (next_line(extra)) throw MeshParseError(line_no, "trailing content after element list");

  return Mesh(std::move(vertices), std::move(elements));
}

Mesh load_mesh_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_mesh(buffer.str());
}

std::string write_mesh(const Mesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  out << "meshdim 2\nvertices " << mesh.num_vertices() << '\n';
  for (const auto& v : mesh.vertices()) out << v.x() << ' ' << v.y() << '\n';
  out << "elements " << mesh.num_elements() << '\n';
  for (const auto& e : mesh.elements()) out << e[0] << ' ' << e[1] << ' ' << e[2] << '\n';
  return out.str();
}

GeometryCache compute_geometry(const Mesh& mesh) {
  GeometryCache g;
  const std::size_t ne = mesh.num_elements();
  const std::size_t nf = mesh.num_faces();

  g.face_length.resize(nf);
  g.face_midpoint.resize(nf);
  g.face_tangent.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    const Point& a = mesh.vertex(mesh.face(f)[0]);
    const Point& b = mesh.vertex(mesh.face(f)[1]);
    g.face_length[f] = (b - a).norm();
    g.face_midpoint[f] = 0.5 * (a + b);
    g.face_tangent[f] = (b - a) / g.face_length[f];
  }

  g.element_area.resize(ne);
  g.element_diameter.resize(ne);
  g.element_inradius.resize(ne);
  g.element_centroid.resize(ne);
  g.normal.resize(ne);
  g.face_distance.resize(ne);
  for (std::size_t t = 0; t < ne; ++t) {
    const auto v = mesh.element_vertices(t);
    const double area = signed_area(v[0], v[1], v[2]);
    double diameter = 0.0;
    double perimeter = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double len = (v[(i + 1) % 3] - v[i]).norm();
      diameter = std::max(diameter, len);
      perimeter += len;
    }
    if (area < 1e-14 * diameter * diameter) {
      throw DegenerateElementError("element " + std::to_string(t) + " is degenerate");
    }
    g.element_area[t] = area;
    g.element_diameter[t] = diameter;
    g.element_inradius[t] = 2.0 * area / perimeter;
    g.element_centroid[t] = (v[0] + v[1] + v[2]) / 3.0;
    for (int i = 0; i < 3; ++i) {
      const Point edge = v[(i + 1) % 3] - v[i];
      // Counter-clockwise ordering: the outward normal is the edge rotated clockwise.
      const Point n = Point(edge.y(), -edge.x()).normalized();
      g.normal[t][i] = n;
      g.face_distance[t][i] = n.dot(v[i] - g.element_centroid[t]);
    }
    g.mesh_size = std::max(g.mesh_size, diameter);
    g.regularity = std::max(g.regularity, diameter / g.element_inradius[t]);
  }
  return g;
}

}  // namespace mhdhho
