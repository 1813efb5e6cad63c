#include "mhdhho/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace mhdhho {

namespace {

void check_degree(int degree) {
  if (degree < 0 || degree > kMaxQuadratureDegree) {
    throw UnsupportedQuadratureDegree("quadrature degree " + std::to_string(degree) + " outside [0, " +
                                      std::to_string(kMaxQuadratureDegree) + "]");
  }
}

}  // namespace

double QuadratureRule::measure() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton iteration on P_n starting from the Chebyshev-like guess.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    const double w = 1.0 / ((1.0 - z * z) * dp * dp);  // on [0,1]: 2/((1-z^2)dp^2) * 1/2
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    nodes[lo] = 0.5 * (1.0 - z);
    nodes[hi] = 0.5 * (1.0 + z);
    weights[lo] = w;
    weights[hi] = w;
  }
}

QuadratureRule triangle_quadrature(const std::array<Point, 3>& v, int degree) {
  check_degree(degree);
  // The collapsed integrand has degree + 1 in the collapsed direction.
  const int n = (degree + 3) / 2;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  const Point e1 = v[1] - v[0];
  const Point e2 = v[2] - v[0];
  const double jac = std::abs(e1.x() * e2.y() - e1.y() * e2.x());

  QuadratureRule rule;
  rule.exactness_degree = degree;
  rule.points.reserve(static_cast<std::size_t>(n * n));
  rule.weights.reserve(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double s = x[static_cast<std::size_t>(i)];
      const double t = x[static_cast<std::size_t>(j)] * (1.0 - s);
      rule.points.push_back(v[0] + s * e1 + t * e2);
      rule.weights.push_back(w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] * (1.0 - s) * jac);
    }
  }
  return rule;
}

QuadratureRule segment_quadrature(const Point& a, const Point& b, int degree) {
  check_degree(degree);
  const int n = degree / 2 + 1;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  const double len = (b - a).norm();
  QuadratureRule rule;
  rule.exactness_degree = degree;
  for (int i = 0; i < n; ++i) {
    rule.points.push_back(a + x[static_cast<std::size_t>(i)] * (b - a));
    rule.weights.push_back(w[static_cast<std::size_t>(i)] * len);
  }
  return rule;
}

}  // namespace mhdhho
