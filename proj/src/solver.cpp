#include "mhdhho/solver.hpp"

#include "mhdhho/hybrid.hpp"

#include <algorithm>
#include <cmath>

namespace mhdhho {

namespace {

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

Eigen::VectorXd element_load(const DiscreteSpace& space, std::size_t t, const TimeVectorFunction& f, double time) {
  Eigen::VectorXd load = Eigen::VectorXd::Zero(ix(space.rtn_dim()));
  if (!f) return load;
  const QuadratureRule quad = triangle_quadrature(space.triangle(t), space.default_quadrature_degree());
  const VectorBasis& rtn = space.rtn_basis(t);
  for (std::size_t q = 0; q < quad.size(); ++q) load.noalias() += quad.weights[q] * rtn.values(quad.points[q]) * f(time, quad.points[q]);
  return load;
}

// Face values pi^k_F of the data on boundary faces, zero elsewhere. Data is
// projected with the highest quadrature degree throughout so that the initial
// interpolant, the face values and the imposed fluxes agree to round-off.
HybridVectorField boundary_values(const DiscreteSpace& space, const TimeVectorFunction& data, double time) {
  HybridVectorField out(space, !data);
  if (!data) return out;
  const auto nF = ix(space.face_scalar_dim());
  for (std::size_t f = 0; f < space.num_faces(); ++f) {
    if (!space.mesh().is_boundary(f)) continue;
    const auto seg = space.face_segment(f);
    const QuadratureRule quad = segment_quadrature(seg[0], seg[1], kMaxQuadratureDegree);
    const FaceBasis& basis = space.face_basis(f);
    out.face_block(f).head(nF) = l2_project(basis, quad, [&](const Point& x) { return data(time, x).x(); });
    out.face_block(f).tail(nF) = l2_project(basis, quad, [&](const Point& x) { return data(time, x).y(); });
  }
  return out;
}

// int_F r_i (data . n) on boundary faces with the highest quadrature degree.
std::vector<Eigen::VectorXd> boundary_flux(const DiscreteSpace& space, const TimeVectorFunction& data, double time) {
  std::vector<Eigen::VectorXd> flux(space.num_faces());
  for (std::size_t f = 0; f < space.num_faces(); ++f) {
    flux[f] = Eigen::VectorXd::Zero(ix(space.face_scalar_dim()));
    if (!data || !space.mesh().is_boundary(f)) continue;
    const std::size_t t = space.mesh().face_elements(f)[0];
    const Point n = space.geometry().normal[t][space.mesh().local_face_index(t, f)];
    const auto seg = space.face_segment(f);
    const QuadratureRule quad = segment_quadrature(seg[0], seg[1], kMaxQuadratureDegree);
    for (std::size_t q = 0; q < quad.size(); ++q) {
      flux[f] += quad.weights[q] * data(time, quad.points[q]).dot(n) * space.face_basis(f).values(quad.points[q]);
    }
  }
  return flux;
}

double relative_difference(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale > 0.0 ? (a - b).norm() / scale : 0.0;
}

}  // namespace

NewtonFailure::NewtonFailure(std::size_t step, const std::string& what)
    : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}

void SolverConfig::validate() const {
  if (!(nu > 0.0)) throw InvalidConfig("nu must be positive");
  if (!(mu > 0.0)) throw InvalidConfig("mu must be positive");
  if (!(final_time > 0.0)) throw InvalidConfig("final time must be positive");
  if (!(c_stab >= 0.0)) throw InvalidConfig("C_stab must be nonnegative");
  if (!(newton_rtol > 0.0 && newton_rtol < 1.0)) throw InvalidConfig("Newton tolerance must lie in (0,1)");
  if (!(newton_atol >= 0.0)) throw InvalidConfig("Newton absolute tolerance must be nonnegative");
  if (!(newton_stagnation >= 0.0)) throw InvalidConfig("Newton stagnation tolerance must be nonnegative");
  if (newton_max_iter < 1) throw InvalidConfig("at least one Newton iteration is required");
  if (time_steps < 0) throw InvalidConfig("number of time steps must be nonnegative");
}

int time_step_count(double h, int k) {
  if (!(h > 0.0) || k < 0) throw std::invalid_argument("time_step_count: need h > 0 and k >= 0");
  // The relative shave keeps exact powers such as 0.01^-1.5 = 1000 from rounding up.
  const double n = std::ceil(std::pow(h, -(k + 1) / 2.0) * (1.0 - 1e-12));
  return std::max(10, static_cast<int>(n));
}

std::vector<double> upwind_coefficients(const DiscreteSpace& space, const HybridVectorField& u,
                                        const HybridVectorField& b, double c_stab) {
  std::vector<double> beta(space.num_elements());
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    beta[t] = c_stab * std::max(1e-4, element_sup_norm(space, u, t) + element_sup_norm(space, b, t));
  }
  return beta;
}

DofLayout::DofLayout(const DiscreteSpace& space) : space_(&space) {
  const Mesh& mesh = space.mesh();
  interior_face_.assign(space.num_faces(), -1);
  for (std::size_t f = 0; f < space.num_faces(); ++f) {
    if (!mesh.is_boundary(f)) interior_face_[f] = n_interior_faces_++;
  }
  const auto ne = ix(space.num_elements()), nf = ix(space.num_faces());
  size_ = 2 * ne * ix(space.rtn_dim()) + 2 * ne * ix(space.scalar_dim()) +
          2 * n_interior_faces_ * ix(space.face_vector_dim()) + 2 * nf * ix(space.face_scalar_dim()) + 2;

  const auto nR = ix(space.rtn_dim()), nP = ix(space.scalar_dim());
  const auto nF = ix(space.face_scalar_dim()), nFv = ix(space.face_vector_dim());
  local_.resize(space.num_elements());
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    std::vector<Eigen::Index>& l = local_[t];
    l.reserve(local_size());
    const auto& faces = mesh.element_faces(t);
    for (int field = 0; field < 2; ++field) {
      const Eigen::Index base = field == 0 ? element_u(t) : element_b(t);
      for (Eigen::Index i = 0; i < nR; ++i) l.push_back(base + i);
      for (std::size_t f : faces) {
        const Eigen::Index fb = field == 0 ? face_u(f) : face_b(f);
        for (Eigen::Index i = 0; i < nFv; ++i) l.push_back(fb < 0 ? -1 : fb + i);
      }
    }
    for (int field = 0; field < 2; ++field) {
      const Eigen::Index base = field == 0 ? element_p(t) : element_r(t);
      for (Eigen::Index i = 0; i < nP; ++i) l.push_back(base + i);
      for (std::size_t f : faces) {
        const Eigen::Index fb = field == 0 ? face_p(f) : face_r(f);
        for (Eigen::Index i = 0; i < nF; ++i) l.push_back(fb + i);
      }
    }
    l.push_back(multiplier_p());
    l.push_back(multiplier_r());
  }
}

Eigen::Index DofLayout::element_u(std::size_t t) const { return ix(t * space_->rtn_dim()); }
Eigen::Index DofLayout::element_b(std::size_t t) const {
  return ix((space_->num_elements() + t) * space_->rtn_dim());
}
Eigen::Index DofLayout::element_p(std::size_t t) const {
  return ix(2 * space_->num_elements() * space_->rtn_dim() + t * space_->scalar_dim());
}
Eigen::Index DofLayout::element_r(std::size_t t) const {
  return ix(2 * space_->num_elements() * space_->rtn_dim() + (space_->num_elements() + t) * space_->scalar_dim());
}
Eigen::Index DofLayout::face_u(std::size_t f) const {
  if (interior_face_[f] < 0) return -1;
  const Eigen::Index base = ix(2 * space_->num_elements() * (space_->rtn_dim() + space_->scalar_dim()));
  return base + interior_face_[f] * ix(space_->face_vector_dim());
}
Eigen::Index DofLayout::face_b(std::size_t f) const {
  if (interior_face_[f] < 0) return -1;
  const Eigen::Index base = ix(2 * space_->num_elements() * (space_->rtn_dim() + space_->scalar_dim()));
  return base + (n_interior_faces_ + interior_face_[f]) * ix(space_->face_vector_dim());
}
Eigen::Index DofLayout::face_p(std::size_t f) const {
  const Eigen::Index base = ix(2 * space_->num_elements() * (space_->rtn_dim() + space_->scalar_dim())) +
                            2 * n_interior_faces_ * ix(space_->face_vector_dim());
  return base + ix(f * space_->face_scalar_dim());
}
Eigen::Index DofLayout::face_r(std::size_t f) const {
  return face_p(f) + ix(space_->num_faces() * space_->face_scalar_dim());
}

std::size_t DofLayout::local_size() const {
  return 2 * space_->local_vector_dim() + 2 * space_->local_scalar_dim() + 2;
}

std::vector<std::vector<Eigen::Index>> DofLayout::interior_blocks() const {
  const auto nR = ix(space_->rtn_dim()), nP = ix(space_->scalar_dim());
  std::vector<std::vector<Eigen::Index>> blocks(space_->num_elements());
  for (std::size_t t = 0; t < space_->num_elements(); ++t) {
    auto& b = blocks[t];
    for (Eigen::Index i = 0; i < nR; ++i) b.push_back(element_u(t) + i);
    for (Eigen::Index i = 0; i < nR; ++i) b.push_back(element_b(t) + i);
    for (Eigen::Index i = 0; i < nP; ++i) b.push_back(element_p(t) + i);
    for (Eigen::Index i = 0; i < nP; ++i) b.push_back(element_r(t) + i);
  }
  return blocks;
}

Eigen::VectorXd pack_state(const DofLayout& layout, const DiscreteSpace& space, const SimulationState& state) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(layout.size());
  const auto nR = ix(space.rtn_dim()), nP = ix(space.scalar_dim());
  const auto nF = ix(space.face_scalar_dim()), nFv = ix(space.face_vector_dim());
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    x.segment(layout.element_u(t), nR) = state.u.element_block(t);
    x.segment(layout.element_b(t), nR) = state.b.element_block(t);
    x.segment(layout.element_p(t), nP) = state.p.element_block(t);
    x.segment(layout.element_r(t), nP) = state.r.element_block(t);
  }
  for (std::size_t f = 0; f < space.num_faces(); ++f) {
    if (layout.face_u(f) >= 0) {
      x.segment(layout.face_u(f), nFv) = state.u.face_block(f);
      x.segment(layout.face_b(f), nFv) = state.b.face_block(f);
    }
    x.segment(layout.face_p(f), nF) = state.p.face_block(f);
    x.segment(layout.face_r(f), nF) = state.r.face_block(f);
  }
  return x;
}

struct StepProblem::Locals {
  Eigen::VectorXd u, b, p, r;
  double lp = 0.0, lr = 0.0;
};

StepProblem::StepProblem(const DiscreteSpace& space, const DofLayout& layout, const SolverConfig& config,
                         const ProblemData& data, const SimulationState& previous, double dt)
    : space_(space), layout_(layout), config_(config), previous_(previous), dt_(dt), t_new_(previous.time + dt) {
  if (!(dt > 0.0)) throw InvalidConfig("time step must be positive");
  previous.u.check_compatible(space);
  previous.b.check_compatible(space);
  beta_ = upwind_coefficients(space, previous.u, previous.b, config.c_stab);
  u_data_ = boundary_values(space, data.u_boundary, t_new_);
  b_data_ = boundary_values(space, data.b_boundary, t_new_);
  u_flux_ = boundary_flux(space, data.u_boundary, t_new_);
  b_flux_ = boundary_flux(space, data.b_boundary, t_new_);

  const std::size_t ne = space.num_elements();
  load_u_.resize(ne);
  load_b_.resize(ne);
  previous_force_u_.resize(ne);
  previous_force_b_.resize(ne);
  for (std::size_t t = 0; t < ne; ++t) {
    load_u_[t] = 0.5 * (element_load(space, t, data.f, previous.time) + element_load(space, t, data.f, t_new_));
    load_b_[t] = 0.5 * (element_load(space, t, data.g, previous.time) + element_load(space, t, data.g, t_new_));
    const LocalOperatorSet& ops = space.operators(t);
    const Eigen::VectorXd u0 = previous.u.local(space, t);
    const Eigen::VectorXd b0 = previous.b.local(space, t);
    Eigen::VectorXd fu = config.nu * (ops.diffusion * u0) + beta_[t] * (ops.jump * u0);
    Eigen::VectorXd fb = config.mu * (ops.diffusion * b0) + beta_[t] * (ops.jump * b0);
    if (config.convection) {
      const Eigen::MatrixXd cu = convection_matrix(space, t, u0.head(ix(space.rtn_dim())));
      const Eigen::MatrixXd cb = convection_matrix(space, t, b0.head(ix(space.rtn_dim())));
      fu += cu * u0 - cb * b0;
      fb += cu * b0 - cb * u0;
    }
    previous_force_u_[t] = std::move(fu);
    previous_force_b_[t] = std::move(fb);
  }
}

StepProblem::Locals StepProblem::gather(const Eigen::VectorXd& x, std::size_t t) const {
  const auto& dofs = layout_.local_dofs(t);
  const auto nR = ix(space_.rtn_dim()), nL = ix(space_.local_vector_dim()), nS = ix(space_.local_scalar_dim());
  const auto nFv = ix(space_.face_vector_dim());
  const auto& faces = space_.mesh().element_faces(t);
  Locals l;
  l.u.resize(nL);
  l.b.resize(nL);
  l.p.resize(nS);
  l.r.resize(nS);
  for (Eigen::Index i = 0; i < nL; ++i) {
    const Eigen::Index gu = dofs[static_cast<std::size_t>(i)];
    const Eigen::Index gb = dofs[static_cast<std::size_t>(nL + i)];
    if (gu >= 0) {
      l.u(i) = x(gu);
      l.b(i) = x(gb);
    } else {
      const Eigen::Index j = i - nR;
      const std::size_t f = faces[static_cast<std::size_t>(j / nFv)];
      l.u(i) = u_data_.face_block(f)(j % nFv);
      l.b(i) = b_data_.face_block(f)(j % nFv);
    }
  }
  for (Eigen::Index i = 0; i < nS; ++i) {
    l.p(i) = x(dofs[static_cast<std::size_t>(2 * nL + i)]);
    l.r(i) = x(dofs[static_cast<std::size_t>(2 * nL + nS + i)]);
  }
  l.lp = x(layout_.multiplier_p());
  l.lr = x(layout_.multiplier_r());
  return l;
}

Eigen::VectorXd StepProblem::initial_guess() const {
  SimulationState guess = previous_;
  const auto nFv = ix(space_.face_vector_dim());
  for (std::size_t f = 0; f < space_.num_faces(); ++f) {
    if (!space_.mesh().is_boundary(f)) continue;
    guess.u.face_block(f) = u_data_.face_block(f);
    guess.b.face_block(f) = b_data_.face_block(f);
  }
  (void)nFv;
  return pack_state(layout_, space_, guess);
}

Eigen::VectorXd StepProblem::residual(const Eigen::VectorXd& x) const {
  if (x.size() != layout_.size()) throw DimensionMismatch("unknown vector has wrong size");
  if (!x.allFinite()) throw NewtonFailure(previous_.step + 1, "non-finite iterate");
  const auto nR = ix(space_.rtn_dim()), nP = ix(space_.scalar_dim()), nF = ix(space_.face_scalar_dim());
  const auto nL = ix(space_.local_vector_dim()), nS = ix(space_.local_scalar_dim());
  Eigen::VectorXd res = Eigen::VectorXd::Zero(layout_.size());
  Eigen::VectorXd loc(ix(layout_.local_size()));

  for (std::size_t t = 0; t < space_.num_elements(); ++t) {
    const LocalOperatorSet& ops = space_.operators(t);
    const Locals l = gather(x, t);
    const Eigen::VectorXd u0 = previous_.u.local(space_, t);
    const Eigen::VectorXd b0 = previous_.b.local(space_, t);

    Eigen::VectorXd fu = config_.nu * (ops.diffusion * l.u) + beta_[t] * (ops.jump * l.u);
    Eigen::VectorXd fb = config_.mu * (ops.diffusion * l.b) + beta_[t] * (ops.jump * l.b);
    if (config_.convection) {
      const Eigen::MatrixXd cu = convection_matrix(space_, t, l.u.head(nR));
      const Eigen::MatrixXd cb = convection_matrix(space_, t, l.b.head(nR));
      fu += cu * l.u - cb * l.b;
      fb += cu * l.b - cb * l.u;
    }
    auto ru = loc.segment(0, nL);
    auto rb = loc.segment(nL, nL);
    auto rp = loc.segment(2 * nL, nS);
    auto rr = loc.segment(2 * nL + nS, nS);
    ru = ops.mass * (l.u - u0) / dt_ + 0.5 * (fu + previous_force_u_[t]);
    rb = ops.mass * (l.b - b0) / dt_ + 0.5 * (fb + previous_force_b_[t]);
    ru.head(nR) += ops.gradient_rhs * l.p - load_u_[t];
    rb.head(nR) += ops.gradient_rhs * l.r - load_b_[t];
    rp = ops.gradient_rhs.transpose() * l.u.head(nR);
    rr = ops.gradient_rhs.transpose() * l.b.head(nR);
    rp.head(nP) += l.lp * ops.scalar_integral;
    rr.head(nP) += l.lr * ops.scalar_integral;
    const auto& faces = space_.mesh().element_faces(t);
    for (std::size_t i = 0; i < 3; ++i) {
      if (!space_.mesh().is_boundary(faces[i])) continue;
      rp.segment(nP + ix(i) * nF, nF) -= u_flux_[faces[i]];
      rr.segment(nP + ix(i) * nF, nF) -= b_flux_[faces[i]];
    }
    loc(2 * nL + 2 * nS) = ops.scalar_integral.dot(l.p.head(nP));
    loc(2 * nL + 2 * nS + 1) = ops.scalar_integral.dot(l.r.head(nP));

    const auto& dofs = layout_.local_dofs(t);
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      if (dofs[i] >= 0) res(dofs[i]) += loc(ix(i));
    }
  }
  return res;
}

SparseMatrix StepProblem::jacobian(const Eigen::VectorXd& x) const {
  if (x.size() != layout_.size()) throw DimensionMismatch("unknown vector has wrong size");
  const auto nR = ix(space_.rtn_dim()), nP = ix(space_.scalar_dim());
  const auto nL = ix(space_.local_vector_dim()), nS = ix(space_.local_scalar_dim());
  const auto n_loc = ix(layout_.local_size());
  const Eigen::Index ou = 0, ob = nL, op = 2 * nL, orr = 2 * nL + nS, olp = 2 * nL + 2 * nS, olr = olp + 1;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(space_.num_elements() * static_cast<std::size_t>(n_loc * n_loc));
  Eigen::MatrixXd k(n_loc, n_loc);
  for (std::size_t t = 0; t < space_.num_elements(); ++t) {
    const LocalOperatorSet& ops = space_.operators(t);
    const Locals l = gather(x, t);
    k.setZero();
    const Eigen::MatrixXd m = ops.mass / dt_;
    k.block(ou, ou, nL, nL) = m + 0.5 * (config_.nu * ops.diffusion + beta_[t] * ops.jump);
    k.block(ob, ob, nL, nL) = m + 0.5 * (config_.mu * ops.diffusion + beta_[t] * ops.jump);
    if (config_.convection) {
      const Eigen::MatrixXd cu = convection_matrix(space_, t, l.u.head(nR));
      const Eigen::MatrixXd cb = convection_matrix(space_, t, l.b.head(nR));
      const Eigen::MatrixXd tu = transport_matrix(space_, t, l.u);
      const Eigen::MatrixXd tb = transport_matrix(space_, t, l.b);
      // momentum: t(u,u,v) - t(b,b,v)
      k.block(ou, ou, nL, nL) += 0.5 * cu;
      k.block(ou, ou, nL, nR) += 0.5 * tu;
      k.block(ou, ob, nL, nL) -= 0.5 * cb;
      k.block(ou, ob, nL, nR) -= 0.5 * tb;
      // induction: t(u,b,w) - t(b,u,w)
      k.block(ob, ob, nL, nL) += 0.5 * cu;
      k.block(ob, ou, nL, nR) += 0.5 * tb;
      k.block(ob, ou, nL, nL) -= 0.5 * cb;
      k.block(ob, ob, nL, nR) -= 0.5 * tu;
    }
    k.block(ou, op, nR, nS) = ops.gradient_rhs;
    k.block(ob, orr, nR, nS) = ops.gradient_rhs;
    k.block(op, ou, nS, nR) = ops.gradient_rhs.transpose();
    k.block(orr, ob, nS, nR) = ops.gradient_rhs.transpose();
    k.block(op, olp, nP, 1) = ops.scalar_integral;
    k.block(orr, olr, nP, 1) = ops.scalar_integral;
    k.block(olp, op, 1, nP) = ops.scalar_integral.transpose();
    k.block(olr, orr, 1, nP) = ops.scalar_integral.transpose();

    const auto& dofs = layout_.local_dofs(t);
    for (Eigen::Index j = 0; j < n_loc; ++j) {
      const Eigen::Index gj = dofs[static_cast<std::size_t>(j)];
      if (gj < 0) continue;
      for (Eigen::Index i = 0; i < n_loc; ++i) {
        const Eigen::Index gi = dofs[static_cast<std::size_t>(i)];
        if (gi >= 0 && k(i, j) != 0.0) trip.emplace_back(gi, gj, k(i, j));
      }
    }
  }
  SparseMatrix jac(layout_.size(), layout_.size());
  jac.setFromTriplets(trip.begin(), trip.end());
  return jac;
}

SimulationState StepProblem::unpack(const Eigen::VectorXd& x) const {
  const auto nR = ix(space_.rtn_dim()), nP = ix(space_.scalar_dim());
  const auto nF = ix(space_.face_scalar_dim()), nFv = ix(space_.face_vector_dim());
  SimulationState s;
  s.step = previous_.step + 1;
  s.time = t_new_;
  s.u = u_data_;
  s.b = b_data_;
  s.p = HybridScalarField(space_, true);
  s.r = HybridScalarField(space_, true);
  for (std::size_t t = 0; t < space_.num_elements(); ++t) {
    s.u.element_block(t) = x.segment(layout_.element_u(t), nR);
    s.b.element_block(t) = x.segment(layout_.element_b(t), nR);
    s.p.element_block(t) = x.segment(layout_.element_p(t), nP);
    s.r.element_block(t) = x.segment(layout_.element_r(t), nP);
  }
  for (std::size_t f = 0; f < space_.num_faces(); ++f) {
    if (layout_.face_u(f) >= 0) {
      s.u.face_block(f) = x.segment(layout_.face_u(f), nFv);
      s.b.face_block(f) = x.segment(layout_.face_b(f), nFv);
    }
    s.p.face_block(f) = x.segment(layout_.face_p(f), nF);
    s.r.face_block(f) = x.segment(layout_.face_r(f), nF);
  }
  s.beta = beta_;
  s.gamma = beta_;
  return s;
}

NewtonResult newton_solve(const StepProblem& problem, const DofLayout& layout, const SolverConfig& config,
                          std::size_t step, RunStatistics* stats) {
  NewtonResult out;
  out.x = problem.initial_guess();
  Eigen::VectorXd res = problem.residual(out.x);
  out.initial_residual = res.norm();
  out.final_residual = out.initial_residual;
  const double tol = std::max(config.newton_rtol * out.initial_residual, config.newton_atol);
  const auto blocks = layout.interior_blocks();
  while (out.final_residual > tol) {
    if (out.iterations >= config.newton_max_iter) {
      throw NewtonFailure(step, "Newton did not converge in " + std::to_string(config.newton_max_iter) +
                                    " iterations (residual " + std::to_string(out.final_residual) + ")");
    }
    const SparseMatrix jac = problem.jacobian(out.x);
    Eigen::VectorXd delta;
    try {
      if (config.linear_solver == LinearSolverKind::condensed || config.cross_check_condensation) {
        const CondensedSolution cs = static_condense_solve(jac, -res, blocks);
        delta = cs.x;
        if (stats) stats->condensed_dim = cs.condensed_dim;
      }
      if (config.linear_solver == LinearSolverKind::direct || config.cross_check_condensation) {
        const Eigen::VectorXd full = direct_solve(jac, -res);
        if (config.cross_check_condensation && stats) {
          stats->max_condensation_difference = std::max(stats->max_condensation_difference, relative_difference(delta, full));
          ++stats->cross_checks;
        }
        if (config.linear_solver == LinearSolverKind::direct) delta = full;
      }
    } catch (const SingularMatrixError& e) {
      throw NewtonFailure(step, std::string("linear solve failed: ") + e.what());
    }
    out.x += delta;
    res = problem.residual(out.x);
    out.final_residual = res.norm();
    ++out.iterations;
    if (!std::isfinite(out.final_residual)) throw NewtonFailure(step, "non-finite residual");
    // A correction at round-off level means the residual cannot drop further.
    if (delta.norm() <= config.newton_stagnation * out.x.norm()) break;
  }
  if (stats) {
    stats->full_dim = layout.size();
    stats->total_newton_iterations += out.iterations;
    stats->max_newton_iterations = std::max(stats->max_newton_iterations, out.iterations);
  }
  return out;
}

SimulationState initial_state(const DiscreteSpace& space, const SolverConfig& config, const ProblemData& data) {
  SimulationState s;
  const auto zero = [](const Point&) { return Eigen::Vector2d::Zero().eval(); };
  s.u = interpolate_velocity(space, data.u0 ? data.u0 : VectorFunction(zero), !data.u_boundary, kMaxQuadratureDegree);
  s.b = interpolate_velocity(space, data.b0 ? data.b0 : VectorFunction(zero), !data.b_boundary, kMaxQuadratureDegree);
  s.p = HybridScalarField(space, true);
  s.r = HybridScalarField(space, true);
  s.beta = upwind_coefficients(space, s.u, s.b, config.c_stab);
  s.gamma = s.beta;
  return s;
}

Trajectory run_simulation(const DiscreteSpace& space, const SolverConfig& config, const ProblemData& data,
                          const std::function<void(const SimulationState&)>& observer) {
  config.validate();
  const int n_steps = config.time_steps > 0 ? config.time_steps
                                            : time_step_count(space.geometry().mesh_size, space.degree());
  Trajectory traj;
  traj.dt = config.final_time / n_steps;
  const DofLayout layout(space);
  traj.stats.full_dim = layout.size();
  traj.states.reserve(static_cast<std::size_t>(n_steps) + 1);
  traj.states.push_back(initial_state(space, config, data));
  if (observer) observer(traj.states.back());
  for (int n = 0; n < n_steps; ++n) {
    SimulationState next;
    {
      const StepProblem step(space, layout, config, data, traj.states.back(), traj.dt);
      const NewtonResult nr = newton_solve(step, layout, config, static_cast<std::size_t>(n + 1), &traj.stats);
      next = step.unpack(nr.x);
      next.newton_iterations = nr.iterations;
    }
    // Use the exact grid time to avoid drift from repeated addition.
    next.time = config.final_time * (n + 1) / n_steps;
    traj.states.push_back(std::move(next));
    if (observer) observer(traj.states.back());
  }
  return traj;
}

}  // namespace mhdhho
