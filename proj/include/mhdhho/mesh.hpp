#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mhdhho {

using Point = Eigen::Vector2d;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed mesh text; the message carries the offending line number.
class MeshParseError : public MeshError {
 public:
  MeshParseError(std::size_t line, const std::string& what)
      : MeshError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MeshTopologyError : public MeshError {
 public:
  using MeshError::MeshError;
};

class MeshOrientationError : public MeshError {
 public:
  using MeshError::MeshError;
};

class DegenerateElementError : public MeshError {
 public:
  using MeshError::MeshError;
};

/// Matching triangular mesh of a 2D polygonal domain.
///
/// Elements are stored counter-clockwise. Faces (edges) are derived from the
/// element connectivity and stored with sorted vertex indices. Local face i of
/// an element is the edge from its vertex i to vertex (i+1) mod 3.
class Mesh {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  using Triangle = std::array<std::size_t, 3>;
  using Edge = std::array<std::size_t, 2>;

  /// Clockwise elements are reordered. Throws MeshOrientationError for
  /// zero-area elements and MeshTopologyError for non-matching connectivity.
  Mesh(std::vector<Point> vertices, std::vector<Triangle> elements);

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_elements() const { return elements_.size(); }
  std::size_t num_faces() const { return faces_.size(); }
  std::size_t num_boundary_faces() const;

  const std::vector<Point>& vertices() const { return vertices_; }
  const Point& vertex(std::size_t i) const { return vertices_[i]; }
  const Triangle& element(std::size_t t) const { return elements_[t]; }
  const std::vector<Triangle>& elements() const { return elements_; }
  const Edge& face(std::size_t f) const { return faces_[f]; }
  const std::vector<Edge>& faces() const { return faces_; }

  const std::array<std::size_t, 3>& element_faces(std::size_t t) const { return element_faces_[t]; }
  /// +1 when the local edge runs from the lower to the higher vertex index.
  const std::array<int, 3>& element_face_orientation(std::size_t t) const {
    return element_face_orientation_[t];
  }
  /// Second entry is npos for boundary faces.
  const std::array<std::size_t, 2>& face_elements(std::size_t f) const { return face_elements_[f]; }
  bool is_boundary(std::size_t f) const { return face_elements_[f][1] == npos; }
  std::size_t local_face_index(std::size_t t, std::size_t f) const;

  std::array<Point, 3> element_vertices(std::size_t t) const;

 private:
  std::vector<Point> vertices_;
  std::vector<Triangle> elements_;
  std::vector<Edge> faces_;
  std::vector<std::array<std::size_t, 3>> element_faces_;
  std::vector<std::array<int, 3>> element_face_orientation_;
  std::vector<std::array<std::size_t, 2>> face_elements_;
};

/// Unit square split into n x n cells, each cut along the diagonal from the
/// lower-left to the upper-right corner.
Mesh generate_structured_mesh(int n);

/// Parses the line-oriented mesh format:
///   meshdim 2
///   vertices N   followed by N lines "x y"
///   elements M   followed by M lines "i j k" (0-based)
/// '#' starts a comment.
Mesh load_mesh(std::string_view text);
Mesh load_mesh_file(const std::filesystem::path& path);

/// Serializes a mesh in the format accepted by load_mesh.
std::string write_mesh(const Mesh& mesh);

struct GeometryCache {
  std::vector<double> element_area;
  std::vector<double> element_diameter;
  std::vector<double> element_inradius;
  std::vector<Point> element_centroid;

  std::vector<double> face_length;  // equals the face diameter h_F
  std::vector<Point> face_midpoint;
  std::vector<Point> face_tangent;  // unit, from face(f)[0] to face(f)[1]

  /// Outward unit normal of local face i of element t.
  std::vector<std::array<Point, 3>> normal;
  /// Distance from the element centroid to the line containing local face i.
  std::vector<std::array<double, 3>> face_distance;

  double mesh_size = 0.0;   // max_T h_T
  double regularity = 0.0;  // max_T h_T / r_T
};

/// Throws DegenerateElementError when |T| < 1e-14 h_T^2.
GeometryCache compute_geometry(const Mesh& mesh);

}  // namespace mhdhho
