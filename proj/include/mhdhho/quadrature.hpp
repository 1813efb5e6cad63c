#pragma once

#include "mhdhho/mesh.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace mhdhho {

/// Highest polynomial degree any rule is built for: 2(k_max + 2) + 4 with k_max = 3.
inline constexpr int kMaxQuadratureDegree = 14;

class UnsupportedQuadratureDegree : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct QuadratureRule {
  std::vector<Point> points;
  std::vector<double> weights;
  int exactness_degree = 0;

  std::size_t size() const { return points.size(); }
  double measure() const;
};

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Collapsed (Duffy) product of Gauss-Legendre rules on a triangle. Exact for
/// polynomials of total degree <= degree, positive weights, interior points.
QuadratureRule triangle_quadrature(const std::array<Point, 3>& vertices, int degree);

/// Gauss-Legendre rule on the segment [a, b].
QuadratureRule segment_quadrature(const Point& a, const Point& b, int degree);

}  // namespace mhdhho
