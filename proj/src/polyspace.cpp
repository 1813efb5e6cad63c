#include "mhdhho/polyspace.hpp"

#include <cmath>

namespace mhdhho {

namespace {

std::size_t monomial_index(int a, int b) {
  const int d = a + b;
  return static_cast<std::size_t>(d * (d + 1) / 2 + (d - a));
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Columns of
/// `samples` are functions sampled at weighted rows; returns T such that the
/// orthonormal functions are T times the input functions.
Eigen::MatrixXd orthonormalize(Eigen::MatrixXd samples, const Eigen::VectorXd& row_weights) {
  const Eigen::Index n = samples.cols();
  Eigen::MatrixXd transform = Eigen::MatrixXd::Identity(n, n);
  auto inner = [&](Eigen::Index i, Eigen::Index j) {
    return (samples.col(i).array() * samples.col(j).array() * row_weights.array()).sum();
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    const double initial = std::sqrt(inner(i, i));
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < i; ++j) {
        const double r = inner(i, j);
        samples.col(i) -= r * samples.col(j);
        transform.row(i) -= r * transform.row(j);
      }
    }
    const double norm = std::sqrt(inner(i, i));
    if (!(norm > 1e-10 * initial)) throw SingularMatrixError("linearly dependent basis in Gram-Schmidt");
    samples.col(i) /= norm;
    transform.row(i) /= norm;
  }
  return transform;
}

}  // namespace

Monomials2D::Monomials2D(Point center, double scale, int degree)
    : center_(std::move(center)), scale_(scale), degree_(degree) {
  for (int d = 0; d <= degree; ++d) {
    for (int a = d; a >= 0; --a) exponents_.push_back({a, d - a});
  }
}

Eigen::VectorXd Monomials2D::values(const Point& x) const {
  Eigen::VectorXd v;
  Eigen::MatrixX2d g;
  evaluate(x, v, g);
  return v;
}

void Monomials2D::evaluate(const Point& x, Eigen::VectorXd& values, Eigen::MatrixX2d& gradients) const {
  const auto n = static_cast<Eigen::Index>(exponents_.size());
  values.resize(n);
  gradients.resize(n, 2);
  if (n == 0) return;
  const double xi = (x.x() - center_.x()) / scale_;
  const double eta = (x.y() - center_.y()) / scale_;
  std::array<double, 16> px{}, py{};
  px[0] = py[0] = 1.0;
  for (int i = 1; i <= degree_; ++i) {
    px[static_cast<std::size_t>(i)] = px[static_cast<std::size_t>(i - 1)] * xi;
    py[static_cast<std::size_t>(i)] = py[static_cast<std::size_t>(i - 1)] * eta;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [a, b] = exponents_[static_cast<std::size_t>(i)];
    const auto ua = static_cast<std::size_t>(a);
    const auto ub = static_cast<std::size_t>(b);
    values(i) = px[ua] * py[ub];
    gradients(i, 0) = a > 0 ? a * px[ua - 1] * py[ub] / scale_ : 0.0;
    gradients(i, 1) = b > 0 ? b * px[ua] * py[ub - 1] / scale_ : 0.0;
  }
}

Eigen::VectorXd ScalarBasis::values(const Point& x) const {
  if (coefficients_.rows() == 0) return Eigen::VectorXd();
  return coefficients_ * monomials_.values(x);
}

Eigen::MatrixX2d ScalarBasis::gradients(const Point& x) const {
  if (coefficients_.rows() == 0) return Eigen::MatrixX2d(0, 2);
  Eigen::VectorXd v;
  Eigen::MatrixX2d g;
  monomials_.evaluate(x, v, g);
  return coefficients_ * g;
}

Eigen::MatrixX2d VectorBasis::values(const Point& x) const {
  const Eigen::VectorXd m = monomials_.values(x);
  Eigen::MatrixX2d out(cx_.rows(), 2);
  out.col(0) = cx_ * m;
  out.col(1) = cy_ * m;
  return out;
}

void VectorBasis::evaluate(const Point& x, Eigen::MatrixX2d& values, Eigen::MatrixX2d& grad_x,
                           Eigen::MatrixX2d& grad_y) const {
  Eigen::VectorXd m;
  Eigen::MatrixX2d dm;
  monomials_.evaluate(x, m, dm);
  values.resize(cx_.rows(), 2);
  values.col(0) = cx_ * m;
  values.col(1) = cy_ * m;
  grad_x = cx_ * dm;
  grad_y = cy_ * dm;
}

Eigen::VectorXd VectorBasis::divergences(const Point& x) const {
  Eigen::VectorXd m;
  Eigen::MatrixX2d dm;
  monomials_.evaluate(x, m, dm);
  return cx_ * dm.col(0) + cy_ * dm.col(1);
}

FaceBasis::FaceBasis(const Point& a, const Point& b, int degree)
    : origin_(0.5 * (a + b)), tangent_((b - a).normalized()), half_length_(0.5 * (b - a).norm()), degree_(degree) {
  if (degree < 0) {
    coefficients_.resize(0, 0);
    return;
  }
  const QuadratureRule quad = segment_quadrature(a, b, 2 * degree);
  const auto n = degree + 1;
  Eigen::MatrixXd samples(static_cast<Eigen::Index>(quad.size()), n);
  Eigen::VectorXd weights(static_cast<Eigen::Index>(quad.size()));
  for (std::size_t q = 0; q < quad.size(); ++q) {
    const double s = (quad.points[q] - origin_).dot(tangent_) / half_length_;
    double p = 1.0;
    for (int i = 0; i < n; ++i, p *= s) samples(static_cast<Eigen::Index>(q), i) = p;
    weights(static_cast<Eigen::Index>(q)) = quad.weights[q];
  }
  coefficients_ = orthonormalize(samples, weights);
}

Eigen::VectorXd FaceBasis::values(const Point& x) const {
  const auto n = coefficients_.cols();
  if (coefficients_.rows() == 0) return Eigen::VectorXd();
  const double s = (x - origin_).dot(tangent_) / half_length_;
  Eigen::VectorXd m(n);
  double p = 1.0;
  for (Eigen::Index i = 0; i < n; ++i, p *= s) m(i) = p;
  return coefficients_ * m;
}

namespace {

Monomials2D element_monomials(const Triangle& tri, int degree) {
  const Point c = (tri[0] + tri[1] + tri[2]) / 3.0;
  double h = 0.0;
  for (int i = 0; i < 3; ++i) h = std::max(h, (tri[static_cast<std::size_t>((i + 1) % 3)] - tri[static_cast<std::size_t>(i)]).norm());
  return Monomials2D(c, h, degree);
}

}  // namespace

ScalarBasis orthonormal_scalar_basis(const Triangle& tri, int degree) {
  Monomials2D mono = element_monomials(tri, std::max(degree, 0));
  if (degree < 0) return ScalarBasis(mono, Eigen::MatrixXd(0, static_cast<Eigen::Index>(mono.size())), degree);
  const QuadratureRule quad = triangle_quadrature(tri, 2 * degree);
  const auto nq = static_cast<Eigen::Index>(quad.size());
  const auto nm = static_cast<Eigen::Index>(mono.size());
  Eigen::MatrixXd samples(nq, nm);
  Eigen::VectorXd weights(nq);
  for (Eigen::Index q = 0; q < nq; ++q) {
    samples.row(q) = mono.values(quad.points[static_cast<std::size_t>(q)]).transpose();
    weights(q) = quad.weights[static_cast<std::size_t>(q)];
  }
  Eigen::MatrixXd coeffs = orthonormalize(samples, weights);
  return ScalarBasis(std::move(mono), std::move(coeffs), degree);
}

VectorBasis rtn_basis(const Triangle& tri, int order) {
  if (order < 1) throw std::invalid_argument("RTN order must be >= 1");
  Monomials2D mono = element_monomials(tri, order);
  const auto nm = static_cast<Eigen::Index>(mono.size());
  const auto n_full = static_cast<Eigen::Index>(poly_dim_2d(order - 1));
  const Eigen::Index n_hom = order;  // homogeneous monomials of degree order-1
  const Eigen::Index dim = 2 * n_full + n_hom;

  Eigen::MatrixXd cx = Eigen::MatrixXd::Zero(dim, nm);
  Eigen::MatrixXd cy = Eigen::MatrixXd::Zero(dim, nm);
  for (Eigen::Index j = 0; j < n_full; ++j) {
    cx(j, j) = 1.0;
    cy(n_full + j, j) = 1.0;
  }
  // (xi m, eta m) for m = xi^a eta^b with a + b = order - 1.
  for (Eigen::Index j = 0; j < n_hom; ++j) {
    const int a = order - 1 - static_cast<int>(j);
    const int b = static_cast<int>(j);
    cx(2 * n_full + j, static_cast<Eigen::Index>(monomial_index(a + 1, b))) = 1.0;
    cy(2 * n_full + j, static_cast<Eigen::Index>(monomial_index(a, b + 1))) = 1.0;
  }

  const QuadratureRule quad = triangle_quadrature(tri, 2 * order);
  const auto nq = static_cast<Eigen::Index>(quad.size());
  Eigen::MatrixXd samples(2 * nq, dim);
  Eigen::VectorXd weights(2 * nq);
  for (Eigen::Index q = 0; q < nq; ++q) {
    const Eigen::VectorXd m = mono.values(quad.points[static_cast<std::size_t>(q)]);
    samples.row(2 * q) = (cx * m).transpose();
    samples.row(2 * q + 1) = (cy * m).transpose();
    weights(2 * q) = weights(2 * q + 1) = quad.weights[static_cast<std::size_t>(q)];
  }
  const Eigen::MatrixXd transform = orthonormalize(samples, weights);
  return VectorBasis(std::move(mono), transform * cx, transform * cy);
}

std::array<Point, 3> outward_normals(const Triangle& tri) {
  std::array<Point, 3> n;
  for (std::size_t i = 0; i < 3; ++i) {
    const Point e = tri[(i + 1) % 3] - tri[i];
    n[i] = Point(e.y(), -e.x()).normalized();
  }
  return n;
}

Eigen::VectorXd l2_project_element(const Triangle& tri, int degree, const ScalarFunction& f, int quad_degree) {
  const ScalarBasis basis = orthonormal_scalar_basis(tri, degree);
  const QuadratureRule quad = triangle_quadrature(tri, quad_degree < 0 ? 2 * degree + 6 : quad_degree);
  return l2_project(basis, quad, f);
}

Eigen::VectorXd l2_project_face(const Point& a, const Point& b, int degree, const ScalarFunction& f,
                                int quad_degree) {
  const FaceBasis basis(a, b, degree);
  const QuadratureRule quad = segment_quadrature(a, b, quad_degree < 0 ? 2 * degree + 6 : quad_degree);
  return l2_project(basis, quad, f);
}

RtnInterpolator::RtnInterpolator(const Triangle& tri, const VectorBasis& rtn, int order)
    : tri_(tri), normals_(outward_normals(tri)), order_(order), interior_(orthonormal_scalar_basis(tri, order - 2)) {
  for (std::size_t i = 0; i < 3; ++i) faces_[i] = FaceBasis(tri[i], tri[(i + 1) % 3], order - 1);
  const auto dim = static_cast<Eigen::Index>(rtn.dimension());
  Eigen::MatrixXd matrix(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    matrix.col(j) = moments([&rtn, j](const Point& x) -> Eigen::Vector2d { return rtn.values(x).row(j).transpose(); },
                            2 * order);
  }
  lu_.compute(matrix);
  if (!(lu_.rcond() > 1e-13)) {
    throw SingularMatrixError("RTN moment matrix is singular");
  }
}

Eigen::VectorXd RtnInterpolator::moments(const VectorFunction& v, int quad_degree) const {
  const auto ni = static_cast<Eigen::Index>(interior_.dimension());
  const auto nf = static_cast<Eigen::Index>(order_);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * ni + 3 * nf);
  if (ni > 0) {
    const QuadratureRule quad = triangle_quadrature(tri_, quad_degree);
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const Eigen::Vector2d val = v(quad.points[q]);
      const Eigen::VectorXd phi = interior_.values(quad.points[q]);
      out.segment(0, ni) += quad.weights[q] * val.x() * phi;
      out.segment(ni, ni) += quad.weights[q] * val.y() * phi;
    }
  }
  for (std::size_t f = 0; f < 3; ++f) {
    const QuadratureRule quad = segment_quadrature(tri_[f], tri_[(f + 1) % 3], quad_degree);
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const double vn = v(quad.points[q]).dot(normals_[f]);
      out.segment(2 * ni + static_cast<Eigen::Index>(f) * nf, nf) += quad.weights[q] * vn * faces_[f].values(quad.points[q]);
    }
  }
  return out;
}

Eigen::VectorXd RtnInterpolator::interpolate(const VectorFunction& v, int quad_degree) const {
  return lu_.solve(moments(v, quad_degree));
}

Eigen::VectorXd rtn_interpolate(const Triangle& tri, int order, const VectorFunction& v, int quad_degree) {
  const VectorBasis basis = rtn_basis(tri, order);
  const RtnInterpolator interp(tri, basis, order);
  return interp.interpolate(v, quad_degree < 0 ? 2 * order + 6 : quad_degree);
}

}  // namespace mhdhho
