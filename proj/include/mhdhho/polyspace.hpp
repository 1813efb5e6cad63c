#pragma once

#include "mhdhho/mesh.hpp"
#include "mhdhho/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

namespace mhdhho {

using ScalarFunction = std::function<double(const Point&)>;
using VectorFunction = std::function<Eigen::Vector2d(const Point&)>;
using Triangle = std::array<Point, 3>;

/// Signals a broken basis or an under-integrated Gram/moment matrix.
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension of P^degree in two variables; zero for degree < 0.
constexpr std::size_t poly_dim_2d(int degree) {
  return degree < 0 ? 0 : static_cast<std::size_t>((degree + 1) * (degree + 2) / 2);
}
constexpr std::size_t poly_dim_1d(int degree) { return degree < 0 ? 0 : static_cast<std::size_t>(degree + 1); }
/// Dimension of RTN^order on a triangle: order (order + 2).
constexpr std::size_t rtn_dim(int order) { return order < 1 ? 0 : static_cast<std::size_t>(order * (order + 2)); }

/// Scaled monomials ((x - c)/s)^a ((y - c)/s)^b, a + b <= degree, ordered by
/// total degree; the homogeneous block of degree d starts at poly_dim_2d(d-1).
class Monomials2D {
 public:
  Monomials2D() = default;
  Monomials2D(Point center, double scale, int degree);

  int degree() const { return degree_; }
  std::size_t size() const { return exponents_.size(); }
  const std::vector<std::array<int, 2>>& exponents() const { return exponents_; }
  const Point& center() const { return center_; }
  double scale() const { return scale_; }

  Eigen::VectorXd values(const Point& x) const;
  /// Values and gradients (size() x 2) with respect to physical coordinates.
  void evaluate(const Point& x, Eigen::VectorXd& values, Eigen::MatrixX2d& gradients) const;

 private:
  Point center_ = Point::Zero();
  double scale_ = 1.0;
  int degree_ = -1;
  std::vector<std::array<int, 2>> exponents_;
};

/// Scalar polynomial basis written in the monomials of an element.
class ScalarBasis {
 public:
  ScalarBasis() = default;
  ScalarBasis(Monomials2D monomials, Eigen::MatrixXd coefficients, int degree)
      : monomials_(std::move(monomials)), coefficients_(std::move(coefficients)), degree_(degree) {}

  std::size_t dimension() const { return static_cast<std::size_t>(coefficients_.rows()); }
  int degree() const { return degree_; }
  const Eigen::MatrixXd& coefficients() const { return coefficients_; }
  const Monomials2D& monomials() const { return monomials_; }

  Eigen::VectorXd values(const Point& x) const;
  Eigen::MatrixX2d gradients(const Point& x) const;

 private:
  Monomials2D monomials_;
  Eigen::MatrixXd coefficients_;  // dimension x monomials
  int degree_ = -1;
};

/// Vector polynomial basis (component-wise coefficients in element monomials).
class VectorBasis {
 public:
  VectorBasis() = default;
  VectorBasis(Monomials2D monomials, Eigen::MatrixXd cx, Eigen::MatrixXd cy)
      : monomials_(std::move(monomials)), cx_(std::move(cx)), cy_(std::move(cy)) {}

  std::size_t dimension() const { return static_cast<std::size_t>(cx_.rows()); }
  const Monomials2D& monomials() const { return monomials_; }
  const Eigen::MatrixXd& x_coefficients() const { return cx_; }
  const Eigen::MatrixXd& y_coefficients() const { return cy_; }

  /// dimension x 2: row i is the value of basis function i.
  Eigen::MatrixX2d values(const Point& x) const;
  /// Values plus gradients of the x and y components (each dimension x 2).
  void evaluate(const Point& x, Eigen::MatrixX2d& values, Eigen::MatrixX2d& grad_x, Eigen::MatrixX2d& grad_y) const;
  Eigen::VectorXd divergences(const Point& x) const;

 private:
  Monomials2D monomials_;
  Eigen::MatrixXd cx_;
  Eigen::MatrixXd cy_;
};

/// Orthonormal basis of P^degree on the segment [a, b] (empty for degree < 0).
class FaceBasis {
 public:
  FaceBasis() = default;
  FaceBasis(const Point& a, const Point& b, int degree);

  std::size_t dimension() const { return static_cast<std::size_t>(coefficients_.rows()); }
  int degree() const { return degree_; }
  Eigen::VectorXd values(const Point& x) const;

 private:
  Point origin_ = Point::Zero();
  Point tangent_ = Point::UnitX();
  double half_length_ = 1.0;
  int degree_ = -1;
  Eigen::MatrixXd coefficients_;
};

/// L2(T)-orthonormal basis of P^degree(T), built by modified Gram-Schmidt from
/// scaled monomials. The first member is the constant. Empty for degree < 0.
ScalarBasis orthonormal_scalar_basis(const Triangle& tri, int degree);

/// L2(T)-orthonormal basis of RTN^order(T) = P^{order-1}(T)^2 + x P^{order-1}(T).
VectorBasis rtn_basis(const Triangle& tri, int order);

/// Outward unit normals of the local faces (v_i, v_{i+1}) of a counter-clockwise triangle.
std::array<Point, 3> outward_normals(const Triangle& tri);

/// Gram matrix of a basis under a quadrature rule.
template <class Basis>
Eigen::MatrixXd gram_matrix(const Basis& basis, const QuadratureRule& quad) {
  const auto n = static_cast<Eigen::Index>(basis.dimension());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t q = 0; q < quad.size(); ++q) {
    const Eigen::VectorXd phi = basis.values(quad.points[q]);
    gram.noalias() += quad.weights[q] * phi * phi.transpose();
  }
  return gram;
}

/// Coefficients of the L2-orthogonal projection of f onto span(basis).
template <class Basis, class Function>
Eigen::VectorXd l2_project(const Basis& basis, const QuadratureRule& quad, const Function& f) {
  const auto n = static_cast<Eigen::Index>(basis.dimension());
  if (n == 0) return Eigen::VectorXd();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (std::size_t q = 0; q < quad.size(); ++q) {
    rhs.noalias() += quad.weights[q] * f(quad.points[q]) * basis.values(quad.points[q]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(gram_matrix(basis, quad));
  if (llt.info() != Eigen::Success) throw SingularMatrixError("singular Gram matrix in L2 projection");
  return llt.solve(rhs);
}

/// Projection onto P^degree(T); quad_degree < 0 selects 2 degree + 6.
Eigen::VectorXd l2_project_element(const Triangle& tri, int degree, const ScalarFunction& f, int quad_degree = -1);
/// Projection onto P^degree(F) of the segment [a, b].
Eigen::VectorXd l2_project_face(const Point& a, const Point& b, int degree, const ScalarFunction& f,
                                int quad_degree = -1);

/// Moment interpolator onto RTN^order(T): matches the P^{order-2}(T)^2 moments
/// and the P^{order-1}(F) moments of the normal trace on each face.
class RtnInterpolator {
 public:
  RtnInterpolator() = default;
  RtnInterpolator(const Triangle& tri, const VectorBasis& rtn, int order);

  int order() const { return order_; }
  /// quad_degree must integrate v times the degree order-1 test functions.
  Eigen::VectorXd interpolate(const VectorFunction& v, int quad_degree) const;

 private:
  Eigen::VectorXd moments(const VectorFunction& v, int quad_degree) const;

  Triangle tri_{};
  std::array<Point, 3> normals_{};
  int order_ = 0;
  ScalarBasis interior_;
  std::array<FaceBasis, 3> faces_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

/// I_RTN^order v on a single element, in the basis returned by rtn_basis(tri, order).
Eigen::VectorXd rtn_interpolate(const Triangle& tri, int order, const VectorFunction& v, int quad_degree = -1);

}  // namespace mhdhho
