#include "mhdhho/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mhdhho {

namespace {

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

int resolve_degree(const DiscreteSpace& space, int quad_degree) {
  return quad_degree < 0 ? space.default_quadrature_degree() : quad_degree;
}

}  // namespace

HybridVectorField interpolate_velocity(const DiscreteSpace& space, const VectorFunction& v, bool homogeneous_bc,
                                       int quad_degree) {
  const int degree = resolve_degree(space, quad_degree);
  HybridVectorField out(space, homogeneous_bc);
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    out.element_block(t) = space.interpolator(t).interpolate(v, degree);
  }
  const auto nF = ix(space.face_scalar_dim());
  for (std::size_t f = 0; f < space.num_faces(); ++f) {
    if (homogeneous_bc && space.mesh().is_boundary(f)) continue;
    const auto seg = space.face_segment(f);
    const QuadratureRule quad = segment_quadrature(seg[0], seg[1], degree);
    const FaceBasis& basis = space.face_basis(f);
    out.face_block(f).head(nF) = l2_project(basis, quad, [&v](const Point& x) { return v(x).x(); });
    out.face_block(f).tail(nF) = l2_project(basis, quad, [&v](const Point& x) { return v(x).y(); });
  }
  return out;
}

HybridScalarField interpolate_pressure(const DiscreteSpace& space, const ScalarFunction& q, bool zero_mean,
                                       int quad_degree) {
  const int degree = resolve_degree(space, quad_degree);
  HybridScalarField out(space, zero_mean);
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const QuadratureRule quad = triangle_quadrature(space.triangle(t), degree);
    out.element_block(t) = l2_project(space.scalar_basis(t), quad, q);
  }
  for (std::size_t f = 0; f < space.num_faces(); ++f) {
    const auto seg = space.face_segment(f);
    const QuadratureRule quad = segment_quadrature(seg[0], seg[1], degree);
    out.face_block(f) = l2_project(space.face_basis(f), quad, q);
  }
  if (zero_mean) {
    double area = 0.0;
    for (double a : space.geometry().element_area) area += a;
    const double mean = element_integral(space, out) / area;
    // In an orthonormal basis the constant c has coefficients c * int_T phi_i.
    for (std::size_t t = 0; t < space.num_elements(); ++t) {
      const Eigen::VectorXd& integral = space.operators(t).scalar_integral;
      out.element_block(t) -= mean * integral;
    }
  }
  return out;
}

double element_integral(const DiscreteSpace& space, const HybridScalarField& q) {
  double sum = 0.0;
  for (std::size_t t = 0; t < space.num_elements(); ++t) sum += space.operators(t).scalar_integral.dot(q.element_block(t));
  return sum;
}

Eigen::Vector2d evaluate_element(const DiscreteSpace& space, const HybridVectorField& v, std::size_t t,
                                 const Point& x) {
  return space.rtn_basis(t).values(x).transpose() * v.element_block(t);
}

double evaluate_element(const DiscreteSpace& space, const HybridScalarField& q, std::size_t t, const Point& x) {
  return space.scalar_basis(t).values(x).dot(q.element_block(t));
}

std::vector<Point> element_sample_points(const DiscreteSpace& space, std::size_t t) {
  const Triangle& tri = space.triangle(t);
  std::vector<Point> pts = triangle_quadrature(tri, space.default_quadrature_degree()).points;
  for (std::size_t i = 0; i < 3; ++i) {
    pts.push_back(tri[i]);
    pts.push_back(0.5 * (tri[i] + tri[(i + 1) % 3]));
  }
  return pts;
}

std::vector<Point> face_sample_points(const DiscreteSpace& space, std::size_t f) {
  const auto seg = space.face_segment(f);
  std::vector<Point> pts = segment_quadrature(seg[0], seg[1], space.default_quadrature_degree()).points;
  pts.push_back(seg[0]);
  pts.push_back(seg[1]);
  return pts;
}

double inner_product_0h(const DiscreteSpace& space, const HybridVectorField& a, const HybridVectorField& b) {
  a.check_compatible(space);
  b.check_compatible(space);
  double sum = 0.0;
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    sum += a.local(space, t).dot(space.operators(t).mass * b.local(space, t));
  }
  return sum;
}

double norm_0h(const DiscreteSpace& space, const HybridVectorField& v) {
  return std::sqrt(std::max(0.0, inner_product_0h(space, v, v)));
}

double norm_1T(const DiscreteSpace& space, const HybridVectorField& v, std::size_t t) {
  const Eigen::VectorXd loc = v.local(space, t);
  return std::sqrt(std::max(0.0, loc.dot(space.operators(t).norm1 * loc)));
}

double norm_1h(const DiscreteSpace& space, const HybridVectorField& v) {
  v.check_compatible(space);
  double sum = 0.0;
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const double n = norm_1T(space, v, t);
    sum += n * n;
  }
  return std::sqrt(sum);
}

double norm_1infty_h(const DiscreteSpace& space, const HybridVectorField& v) {
  v.check_compatible(space);
  const auto nF = ix(space.face_scalar_dim());
  double result = 0.0;
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const VectorBasis& rtn = space.rtn_basis(t);
    const auto vt = v.element_block(t);
    double grad_sup = 0.0;
    for (const Point& x : element_sample_points(space, t)) {
      Eigen::MatrixX2d val, gx, gy;
      rtn.evaluate(x, val, gx, gy);
      Eigen::Matrix2d grad;
      grad.row(0) = (gx.transpose() * vt).transpose();
      grad.row(1) = (gy.transpose() * vt).transpose();
      grad_sup = std::max(grad_sup, grad.norm());
    }
    double jump_sup = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const std::size_t f = space.mesh().element_faces(t)[i];
      const auto vf = v.face_block(f);
      for (const Point& x : face_sample_points(space, f)) {
        const Eigen::VectorXd r = space.face_basis(f).values(x);
        const Eigen::Vector2d face_value(r.dot(vf.head(nF)), r.dot(vf.tail(nF)));
        jump_sup = std::max(jump_sup, (face_value - rtn.values(x).transpose() * vt).norm());
      }
    }
    result = std::max(result, grad_sup + jump_sup / space.geometry().element_diameter[t]);
  }
  return result;
}

double element_sup_norm(const DiscreteSpace& space, const HybridVectorField& v, std::size_t t) {
  double sup = 0.0;
  for (const Point& x : element_sample_points(space, t)) sup = std::max(sup, evaluate_element(space, v, t, x).norm());
  return sup;
}

Eigen::VectorXd velocity_reconstruction(const DiscreteSpace& space, std::size_t t, const Eigen::VectorXd& local) {
  if (local.size() != ix(space.local_vector_dim())) throw DimensionMismatch("local vector has wrong size");
  return space.operators(t).reconstruction * local;
}

Eigen::Vector2d evaluate_reconstruction(const DiscreteSpace& space, std::size_t t, const Eigen::VectorXd& coefficients,
                                        const Point& x) {
  const Eigen::VectorXd phi = space.reconstruction_basis(t).values(x);
  const auto n = phi.size();
  return {phi.dot(coefficients.head(n)), phi.dot(coefficients.tail(n))};
}

LocalDiffusion local_diffusion(const DiscreteSpace& space, std::size_t t) {
  return {space.operators(t).diffusion, space.operators(t).stabilization};
}

double diffusion_form(const DiscreteSpace& space, const HybridVectorField& w, const HybridVectorField& v) {
  w.check_compatible(space);
  v.check_compatible(space);
  double sum = 0.0;
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    sum += v.local(space, t).dot(space.operators(t).diffusion * w.local(space, t));
  }
  return sum;
}

EquivalenceConstants diffusion_equivalence_constants(const DiscreteSpace& space) {
  EquivalenceConstants out{std::numeric_limits<double>::infinity(), 0.0};
  const auto nL = ix(space.local_vector_dim());
  const auto nR = ix(space.rtn_dim());
  const auto nF = ix(space.face_scalar_dim());
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    // Local lifts of the constants (1,0) and (0,1).
    Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(nL, 2);
    for (Eigen::Index c = 0; c < 2; ++c) {
      const Eigen::VectorXd vt = space.interpolator(t).interpolate(
          [c](const Point&) { return Eigen::Vector2d(c == 0 ? 1.0 : 0.0, c == 1 ? 1.0 : 0.0); }, 2);
      kernel.col(c).head(nR) = vt;
      for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t f = space.mesh().element_faces(t)[i];
        const auto seg = space.face_segment(f);
        const QuadratureRule quad = segment_quadrature(seg[0], seg[1], 2 * space.degree());
        kernel.col(c).segment(nR + ix(i) * 2 * nF + c * nF, nF) =
            l2_project(space.face_basis(f), quad, [](const Point&) { return 1.0; });
      }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(kernel);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(nL, nL);
    const Eigen::MatrixXd z = q.rightCols(nL - 2);
    const Eigen::MatrixXd a = z.transpose() * space.operators(t).diffusion * z;
    const Eigen::MatrixXd n = z.transpose() * space.operators(t).norm1 * z;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (a + a.transpose()), 0.5 * (n + n.transpose()),
                                                                  Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw SingularMatrixError("local eigenproblem failed");
    out.lower = std::min(out.lower, eig.eigenvalues().minCoeff());
    out.upper = std::max(out.upper, eig.eigenvalues().maxCoeff());
  }
  return out;
}

Eigen::VectorXd pressure_gradient(const DiscreteSpace& space, std::size_t t, const Eigen::VectorXd& local_q) {
  if (local_q.size() != ix(space.local_scalar_dim())) throw DimensionMismatch("local scalar vector has wrong size");
  return space.operators(t).gradient * local_q;
}

double divergence_coupling(const DiscreteSpace& space, const HybridVectorField& v, const HybridScalarField& q) {
  v.check_compatible(space);
  q.check_compatible(space);
  double sum = 0.0;
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    sum += v.element_block(t).dot(space.operators(t).gradient_rhs * q.local(space, t));
  }
  return sum;
}

double DivergenceReport::worst_relative() const {
  const double s = scale > 0.0 ? scale : 1.0;
  return std::max({max_divergence, max_normal_jump, max_boundary_normal, max_rtn_excess}) / s;
}

DivergenceReport check_divergence_free(const DiscreteSpace& space, const HybridVectorField& v,
                                       const VectorFunction& boundary_data) {
  v.check_compatible(space);
  const Mesh& mesh = space.mesh();
  DivergenceReport report;

  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const VectorBasis& rtn = space.rtn_basis(t);
    const ScalarBasis& pk = space.scalar_basis(t);
    const auto vt = v.element_block(t);
    // L2 projection of v_T onto P^k(T)^2 (orthonormal basis).
    const QuadratureRule quad = triangle_quadrature(space.triangle(t), space.polynomial_quadrature_degree());
    Eigen::MatrixX2d proj = Eigen::MatrixX2d::Zero(ix(pk.dimension()), 2);
    for (std::size_t q = 0; q < quad.size(); ++q) {
      proj.noalias() += quad.weights[q] * pk.values(quad.points[q]) *
                        (rtn.values(quad.points[q]).transpose() * vt).transpose();
    }
    for (const Point& x : element_sample_points(space, t)) {
      const Eigen::Vector2d val = rtn.values(x).transpose() * vt;
      report.scale = std::max(report.scale, val.norm());
      report.max_divergence = std::max(report.max_divergence, std::abs(rtn.divergences(x).dot(vt)));
      const Eigen::Vector2d projected = proj.transpose() * pk.values(x);
      report.max_rtn_excess = std::max(report.max_rtn_excess, (val - projected).norm());
    }
  }

  for (std::size_t f = 0; f < space.num_faces(); ++f) {
    const auto& adj = mesh.face_elements(f);
    const std::size_t t0 = adj[0];
    const Point n0 = space.geometry().normal[t0][mesh.local_face_index(t0, f)];
    const std::vector<Point> pts = face_sample_points(space, f);
    if (!mesh.is_boundary(f)) {
      const std::size_t t1 = adj[1];
      const Point n1 = space.geometry().normal[t1][mesh.local_face_index(t1, f)];
      for (const Point& x : pts) {
        const double jump = evaluate_element(space, v, t0, x).dot(n0) + evaluate_element(space, v, t1, x).dot(n1);
        report.max_normal_jump = std::max(report.max_normal_jump, std::abs(jump));
      }
      continue;
    }
    Eigen::VectorXd data;
    if (boundary_data) {
      const auto seg = space.face_segment(f);
      const QuadratureRule quad = segment_quadrature(seg[0], seg[1], kMaxQuadratureDegree);
      data = l2_project(space.face_basis(f), quad, [&](const Point& x) { return boundary_data(x).dot(n0); });
    }
    for (const Point& x : pts) {
      double target = 0.0;
      if (boundary_data) target = space.face_basis(f).values(x).dot(data);
      report.max_boundary_normal =
          std::max(report.max_boundary_normal, std::abs(evaluate_element(space, v, t0, x).dot(n0) - target));
    }
  }
  return report;
}

Eigen::MatrixXd convection_matrix(const DiscreteSpace& space, std::size_t t, const Eigen::VectorXd& w_element) {
  const auto nR = ix(space.rtn_dim());
  const auto nF = ix(space.face_scalar_dim());
  const auto nL = ix(space.local_vector_dim());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nL, nL);

  const ElementQuadrature& eq = space.element_quadrature(t);
  for (std::size_t q = 0; q < eq.points.size(); ++q) {
    const Eigen::Vector2d wv = eq.psi[q].transpose() * w_element;
    // sum_c z_c (w . grad v_c)
    a.topLeftCorner(nR, nR).noalias() +=
        eq.weights[q] * (eq.psi[q].col(0) * (eq.grad_x[q] * wv).transpose() +
                         eq.psi[q].col(1) * (eq.grad_y[q] * wv).transpose());
  }

  for (Eigen::Index i = 0; i < 3; ++i) {
    const FaceQuadrature& fq = space.face_quadrature(t, static_cast<std::size_t>(i));
    const Eigen::Index off = nR + i * 2 * nF;
    for (std::size_t q = 0; q < fq.points.size(); ++q) {
      const double wn = (fq.psi[q].transpose() * w_element).dot(fq.normal);
      const double c = 0.5 * fq.weights[q] * wn;
      if (c == 0.0) continue;
      Eigen::MatrixXd jump = Eigen::MatrixXd::Zero(2, nL);  // v_F - v_T
      Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, nL);   // z_F + z_T
      jump.leftCols(nR) = -fq.psi[q].transpose();
      sum.leftCols(nR) = fq.psi[q].transpose();
      for (Eigen::Index comp = 0; comp < 2; ++comp) {
        jump.block(comp, off + comp * nF, 1, nF) = fq.face[q].transpose();
        sum.block(comp, off + comp * nF, 1, nF) = fq.face[q].transpose();
      }
      a.noalias() += c * sum.transpose() * jump;
    }
  }
  return a;
}

Eigen::MatrixXd transport_matrix(const DiscreteSpace& space, std::size_t t, const Eigen::VectorXd& v_local) {
  const auto nR = ix(space.rtn_dim());
  const auto nF = ix(space.face_scalar_dim());
  const auto nL = ix(space.local_vector_dim());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(nL, nR);
  const auto vt = v_local.head(nR);

  const ElementQuadrature& eq = space.element_quadrature(t);
  for (std::size_t q = 0; q < eq.points.size(); ++q) {
    Eigen::Matrix2d grad;  // row c = grad v_c
    grad.row(0) = (eq.grad_x[q].transpose() * vt).transpose();
    grad.row(1) = (eq.grad_y[q].transpose() * vt).transpose();
    c.topRows(nR).noalias() += eq.weights[q] * eq.psi[q] * grad * eq.psi[q].transpose();
  }

  for (Eigen::Index i = 0; i < 3; ++i) {
    const FaceQuadrature& fq = space.face_quadrature(t, static_cast<std::size_t>(i));
    const Eigen::Index off = nR + i * 2 * nF;
    for (std::size_t q = 0; q < fq.points.size(); ++q) {
      const auto& r = fq.face[q];
      const Eigen::Vector2d vt_val = fq.psi[q].transpose() * vt;
      const Eigen::Vector2d jump(r.dot(v_local.segment(off, nF)) - vt_val.x(),
                                 r.dot(v_local.segment(off + nF, nF)) - vt_val.y());
      Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, nL);
      sum.leftCols(nR) = fq.psi[q].transpose();
      sum.block(0, off, 1, nF) = r.transpose();
      sum.block(1, off + nF, 1, nF) = r.transpose();
      c.noalias() += 0.5 * fq.weights[q] * sum.transpose() * jump * (fq.psi[q] * fq.normal).transpose();
    }
  }
  return c;
}

double trilinear_form(const DiscreteSpace& space, const HybridVectorField& w, const HybridVectorField& v,
                      const HybridVectorField& z) {
  w.check_compatible(space);
  v.check_compatible(space);
  z.check_compatible(space);
  double sum = 0.0;
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    sum += z.local(space, t).dot(convection_matrix(space, t, w.element_block(t)) * v.local(space, t));
  }
  return sum;
}

double upwind_form(const DiscreteSpace& space, const std::vector<double>& alpha, const HybridVectorField& w,
                   const HybridVectorField& v) {
  w.check_compatible(space);
  v.check_compatible(space);
  if (alpha.size() != space.num_elements()) throw DimensionMismatch("one upwind coefficient per element expected");
  double sum = 0.0;
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    sum += alpha[t] * v.local(space, t).dot(space.operators(t).jump * w.local(space, t));
  }
  return sum;
}

double upwind_seminorm(const DiscreteSpace& space, const std::vector<double>& alpha, const HybridVectorField& v) {
  return std::sqrt(std::max(0.0, upwind_form(space, alpha, v, v)));
}

}  // namespace mhdhho
