#include "mhdhho/discrete_space.hpp"

#include <cmath>
#include <string>

namespace mhdhho {

namespace {

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

}  // namespace

DiscreteSpace::DiscreteSpace(Mesh mesh, int k)
    : mesh_(std::move(mesh)), geometry_(compute_geometry(mesh_)), k_(k) {
  if (k < 0 || k > kMaxDegree) {
    throw std::invalid_argument("polynomial degree " + std::to_string(k) + " outside [0, " +
                                std::to_string(kMaxDegree) + "]");
  }
  n_rtn_ = mhdhho::rtn_dim(k + 1);
  n_scalar_ = poly_dim_2d(k);
  n_face_ = poly_dim_1d(k);

  face_bases_.reserve(mesh_.num_faces());
  for (std::size_t f = 0; f < mesh_.num_faces(); ++f) {
    const auto seg = face_segment(f);
    face_bases_.emplace_back(seg[0], seg[1], k);
  }
  elements_.resize(mesh_.num_elements());
  for (std::size_t t = 0; t < mesh_.num_elements(); ++t) {
    build_element(t);
    build_operators(t);
  }
}

std::array<Point, 2> DiscreteSpace::face_segment(std::size_t f) const {
  const auto& e = mesh_.face(f);
  return {mesh_.vertex(e[0]), mesh_.vertex(e[1])};
}

void DiscreteSpace::build_element(std::size_t t) {
  ElementData& ed = elements_[t];
  ed.tri = mesh_.element_vertices(t);
  ed.rtn = mhdhho::rtn_basis(ed.tri, k_ + 1);
  ed.scalar = orthonormal_scalar_basis(ed.tri, k_);
  ed.recon = orthonormal_scalar_basis(ed.tri, k_ + 1);
  ed.interp = RtnInterpolator(ed.tri, ed.rtn, k_ + 1);

  const int degree = polynomial_quadrature_degree();
  const QuadratureRule quad = triangle_quadrature(ed.tri, degree);
  ed.quad.points = quad.points;
  ed.quad.weights = quad.weights;
  for (const Point& x : quad.points) {
    Eigen::MatrixX2d v, gx, gy;
    ed.rtn.evaluate(x, v, gx, gy);
    ed.quad.psi.push_back(v);
    ed.quad.grad_x.push_back(gx);
    ed.quad.grad_y.push_back(gy);
  }

  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t f = mesh_.element_faces(t)[i];
    const auto seg = face_segment(f);
    const QuadratureRule fq = segment_quadrature(seg[0], seg[1], degree);
    FaceQuadrature& out = ed.face_quad[i];
    out.points = fq.points;
    out.weights = fq.weights;
    out.normal = geometry_.normal[t][i];
    for (const Point& x : fq.points) {
      out.psi.push_back(ed.rtn.values(x));
      out.face.push_back(face_bases_[f].values(x));
    }
  }
}

void DiscreteSpace::build_operators(std::size_t t) {
  ElementData& ed = elements_[t];
  LocalOperatorSet& ops = ed.ops;
  const auto nR = ix(n_rtn_);
  const auto nF = ix(n_face_);
  const auto nP = ix(n_scalar_);
  const auto nL = ix(local_vector_dim());
  const auto nPL = ix(local_scalar_dim());
  const auto nP1 = ix(ed.recon.dimension());
  const double h = geometry_.element_diameter[t];
  const double area = geometry_.element_area[t];
  auto face_col = [&](Eigen::Index i, Eigen::Index c) { return nR + i * 2 * nF + c * nF; };

  ops.lambda = 3.0 * h * h / area;

  // Element integrals.
  ops.rtn_mass = Eigen::MatrixXd::Zero(nR, nR);
  Eigen::MatrixXd rtn_stiffness = Eigen::MatrixXd::Zero(nR, nR);
  Eigen::MatrixXd stiffness = Eigen::MatrixXd::Zero(nP1, nP1);
  Eigen::VectorXd recon_mean = Eigen::VectorXd::Zero(nP1);
  std::array<Eigen::MatrixXd, 2> rhs{Eigen::MatrixXd::Zero(nP1, nL), Eigen::MatrixXd::Zero(nP1, nL)};
  ops.gradient_rhs = Eigen::MatrixXd::Zero(nR, nPL);
  ops.scalar_integral = Eigen::VectorXd::Zero(nP);
  Eigen::RowVectorXd rtn_mean_x = Eigen::RowVectorXd::Zero(nR), rtn_mean_y = Eigen::RowVectorXd::Zero(nR);
  for (std::size_t q = 0; q < ed.quad.points.size(); ++q) {
    const double w = ed.quad.weights[q];
    const Point& x = ed.quad.points[q];
    const auto& psi = ed.quad.psi[q];
    const auto& gx = ed.quad.grad_x[q];
    const auto& gy = ed.quad.grad_y[q];
    ops.rtn_mass.noalias() += w * psi * psi.transpose();
    rtn_stiffness.noalias() += w * (gx * gx.transpose() + gy * gy.transpose());
    const Eigen::MatrixX2d dphi = ed.recon.gradients(x);
    stiffness.noalias() += w * dphi * dphi.transpose();
    recon_mean += w * ed.recon.values(x);
    rhs[0].leftCols(nR).noalias() += w * dphi * gx.transpose();
    rhs[1].leftCols(nR).noalias() += w * dphi * gy.transpose();
    rtn_mean_x += w * psi.col(0).transpose();
    rtn_mean_y += w * psi.col(1).transpose();
    const Eigen::VectorXd div = gx.col(0) + gy.col(1);
    const Eigen::VectorXd phi = ed.scalar.values(x);
    ops.gradient_rhs.leftCols(nP).noalias() -= w * div * phi.transpose();
    ops.scalar_integral += w * phi;
  }

  // Face integrals.
  ops.jump = Eigen::MatrixXd::Zero(nL, nL);
  std::array<Eigen::MatrixXd, 3> face_projection;
  std::array<Eigen::RowVectorXd, 3> face_mean;
  for (Eigen::Index i = 0; i < 3; ++i) {
    const FaceQuadrature& fq = ed.face_quad[static_cast<std::size_t>(i)];
    face_projection[static_cast<std::size_t>(i)] = Eigen::MatrixXd::Zero(nF, nP1);
    face_mean[static_cast<std::size_t>(i)] = Eigen::RowVectorXd::Zero(nF);
    for (std::size_t q = 0; q < fq.points.size(); ++q) {
      const double w = fq.weights[q];
      const auto& psi = fq.psi[q];
      const auto& r = fq.face[q];
      const Eigen::VectorXd dphi_n = ed.recon.gradients(fq.points[q]) * fq.normal;
      for (Eigen::Index c = 0; c < 2; ++c) {
        rhs[static_cast<std::size_t>(c)].middleCols(face_col(i, c), nF).noalias() += w * dphi_n * r.transpose();
        rhs[static_cast<std::size_t>(c)].leftCols(nR).noalias() -= w * dphi_n * psi.col(c).transpose();
      }
      face_projection[static_cast<std::size_t>(i)].noalias() += w * r * ed.recon.values(fq.points[q]).transpose();
      face_mean[static_cast<std::size_t>(i)] += w * r.transpose();

      Eigen::MatrixXd jmat = Eigen::MatrixXd::Zero(2, nL);
      jmat.leftCols(nR) = -psi.transpose();
      jmat.block(0, face_col(i, 0), 1, nF) = r.transpose();
      jmat.block(1, face_col(i, 1), 1, nF) = r.transpose();
      ops.jump.noalias() += w * jmat.transpose() * jmat;

      ops.gradient_rhs.middleCols(nP + i * nF, nF).noalias() += w * (psi * fq.normal) * r.transpose();
    }
  }

  // Reconstruction: gradient equations with row 0 replaced by the mean closure.
  Eigen::MatrixXd closed = stiffness;
  closed.row(0) = recon_mean.transpose();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(closed);
  if (!(lu.rcond() > 1e-13)) throw SingularMatrixError("singular reconstruction system");
  ops.reconstruction.resize(2 * nP1, nL);
  for (Eigen::Index c = 0; c < 2; ++c) {
    Eigen::MatrixXd b = rhs[static_cast<std::size_t>(c)];
    b.row(0).setZero();
    if (k_ == 0) {
      for (Eigen::Index i = 0; i < 3; ++i) {
        const double d = geometry_.face_distance[t][static_cast<std::size_t>(i)];
        b.block(0, face_col(i, c), 1, nF) = 0.5 * d * face_mean[static_cast<std::size_t>(i)];
      }
    } else {
      b.block(0, 0, 1, nR) = c == 0 ? rtn_mean_x : rtn_mean_y;
    }
    ops.reconstruction.middleRows(c * nP1, nP1) = lu.solve(b);
  }
  const auto rx = ops.reconstruction.topRows(nP1);
  const auto ry = ops.reconstruction.bottomRows(nP1);
  ops.consistency = rx.transpose() * stiffness * rx + ry.transpose() * stiffness * ry;

  // Interpolate the P^{k+1}(T)^2 basis into RTN^{k+1}(T).
  Eigen::MatrixXd to_rtn(nR, 2 * nP1);
  const ScalarBasis& recon = ed.recon;
  for (Eigen::Index c = 0; c < 2; ++c) {
    for (Eigen::Index j = 0; j < nP1; ++j) {
      to_rtn.col(c * nP1 + j) = ed.interp.interpolate(
          [&recon, c, j](const Point& x) -> Eigen::Vector2d {
            Eigen::Vector2d v = Eigen::Vector2d::Zero();
            v(c) = recon.values(x)(j);
            return v;
          },
          2 * k_ + 2);
    }
  }
  ops.delta_element = to_rtn * ops.reconstruction;
  ops.delta_element.leftCols(nR) -= Eigen::MatrixXd::Identity(nR, nR);
  ops.stabilization = ops.lambda / (h * h) * ops.delta_element.transpose() * ops.rtn_mass * ops.delta_element;
  for (Eigen::Index i = 0; i < 3; ++i) {
    Eigen::MatrixXd& df = ops.delta_face[static_cast<std::size_t>(i)];
    df.resize(2 * nF, nL);
    for (Eigen::Index c = 0; c < 2; ++c) {
      df.middleRows(c * nF, nF) = face_projection[static_cast<std::size_t>(i)] * ops.reconstruction.middleRows(c * nP1, nP1);
      df.block(c * nF, face_col(i, c), nF, nF) -= Eigen::MatrixXd::Identity(nF, nF);
    }
    ops.stabilization.noalias() += (1.0 / h) * df.transpose() * df;
  }
  ops.diffusion = ops.consistency + ops.stabilization;

  ops.mass = h * ops.jump;
  ops.mass.topLeftCorner(nR, nR) += ops.rtn_mass;
  ops.norm1 = (1.0 / h) * ops.jump;
  ops.norm1.topLeftCorner(nR, nR) += rtn_stiffness;

  Eigen::LLT<Eigen::MatrixXd> llt(ops.rtn_mass);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("singular RTN mass matrix");
  ops.gradient = llt.solve(ops.gradient_rhs);
}

HybridVectorField::HybridVectorField(const DiscreteSpace& space, bool homogeneous_bc)
    : n_element_(space.rtn_dim()),
      n_face_(space.face_vector_dim()),
      homogeneous_bc_(homogeneous_bc),
      elements_(Eigen::VectorXd::Zero(idx(space.num_elements() * space.rtn_dim()))),
      faces_(Eigen::VectorXd::Zero(idx(space.num_faces() * space.face_vector_dim()))) {}

void HybridVectorField::check_compatible(const DiscreteSpace& space) const {
  if (n_element_ != space.rtn_dim() || n_face_ != space.face_vector_dim() ||
      elements_.size() != idx(space.num_elements() * n_element_) || faces_.size() != idx(space.num_faces() * n_face_)) {
    throw DimensionMismatch("vector field does not match the discrete space");
  }
}

Eigen::VectorXd HybridVectorField::local(const DiscreteSpace& space, std::size_t t) const {
  Eigen::VectorXd out(idx(space.local_vector_dim()));
  out.head(idx(n_element_)) = element_block(t);
  const auto& faces = space.mesh().element_faces(t);
  for (std::size_t i = 0; i < 3; ++i) out.segment(idx(n_element_ + i * n_face_), idx(n_face_)) = face_block(faces[i]);
  return out;
}

HybridVectorField& HybridVectorField::operator+=(const HybridVectorField& o) {
  if (o.elements_.size() != elements_.size() || o.faces_.size() != faces_.size()) {
    throw DimensionMismatch("vector field sizes differ");
  }
  elements_ += o.elements_;
  faces_ += o.faces_;
  return *this;
}

HybridVectorField& HybridVectorField::operator-=(const HybridVectorField& o) {
  if (o.elements_.size() != elements_.size() || o.faces_.size() != faces_.size()) {
    throw DimensionMismatch("vector field sizes differ");
  }
  elements_ -= o.elements_;
  faces_ -= o.faces_;
  return *this;
}

HybridVectorField& HybridVectorField::operator*=(double s) {
  elements_ *= s;
  faces_ *= s;
  return *this;
}

HybridVectorField operator+(HybridVectorField a, const HybridVectorField& b) { return a += b; }
HybridVectorField operator-(HybridVectorField a, const HybridVectorField& b) { return a -= b; }
HybridVectorField operator*(double s, HybridVectorField a) { return a *= s; }

HybridScalarField::HybridScalarField(const DiscreteSpace& space, bool zero_mean)
    : n_element_(space.scalar_dim()),
      n_face_(space.face_scalar_dim()),
      zero_mean_(zero_mean),
      elements_(Eigen::VectorXd::Zero(idx(space.num_elements() * space.scalar_dim()))),
      faces_(Eigen::VectorXd::Zero(idx(space.num_faces() * space.face_scalar_dim()))) {}

void HybridScalarField::check_compatible(const DiscreteSpace& space) const {
  if (n_element_ != space.scalar_dim() || n_face_ != space.face_scalar_dim() ||
      elements_.size() != idx(space.num_elements() * n_element_) || faces_.size() != idx(space.num_faces() * n_face_)) {
    throw DimensionMismatch("scalar field does not match the discrete space");
  }
}

Eigen::VectorXd HybridScalarField::local(const DiscreteSpace& space, std::size_t t) const {
  Eigen::VectorXd out(idx(space.local_scalar_dim()));
  out.head(idx(n_element_)) = element_block(t);
  const auto& faces = space.mesh().element_faces(t);
  for (std::size_t i = 0; i < 3; ++i) out.segment(idx(n_element_ + i * n_face_), idx(n_face_)) = face_block(faces[i]);
  return out;
}

}  // namespace mhdhho
