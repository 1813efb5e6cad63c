#include "mhdhho/mms.hpp"

#include "mhdhho/hybrid.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mhdhho {

namespace {

constexpr double kOmega = 2.0 * std::numbers::pi;

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

double scalar_l2_error(const DiscreteSpace& space, const HybridScalarField& q, const std::function<double(const Point&)>& exact) {
  double sum = 0.0;
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const QuadratureRule quad = triangle_quadrature(space.triangle(t), kMaxQuadratureDegree);
    for (std::size_t i = 0; i < quad.size(); ++i) {
      const double d = evaluate_element(space, q, t, quad.points[i]) - exact(quad.points[i]);
      sum += quad.weights[i] * d * d;
    }
  }
  return std::sqrt(sum);
}

}  // namespace

ExactFields exact_solution_2d(double t, const Point& x) {
  const double e = std::exp(-0.5 * t);
  const double sx = std::sin(kOmega * x.x()), cx = std::cos(kOmega * x.x());
  const double sy = std::sin(kOmega * x.y()), cy = std::cos(kOmega * x.y());
  const double w = kOmega;
  ExactFields out;
  out.u = -e * Eigen::Vector2d(sx * sy, cx * cy);
  out.b = -e * Eigen::Vector2d(cx * cy, sx * sy);
  out.p = e * sx * cy;
  out.r = e * cx * sy;
  out.grad_u << -e * w * cx * sy, -e * w * sx * cy,
                 e * w * sx * cy,  e * w * cx * sy;
  out.grad_b <<  e * w * sx * cy,  e * w * cx * sy,
                -e * w * cx * sy, -e * w * sx * cy;
  // Each component is an eigenfunction of the Laplacian.
  out.lap_u = -2.0 * w * w * out.u;
  out.lap_b = -2.0 * w * w * out.b;
  out.dt_u = -0.5 * out.u;
  out.dt_b = -0.5 * out.b;
  out.grad_p = e * w * Eigen::Vector2d(cx * cy, -sx * sy);
  out.grad_r = e * w * Eigen::Vector2d(-sx * sy, cx * cy);
  return out;
}

Forcing forcing_terms_2d(double nu, double mu, double t, const Point& x) {
  const ExactFields s = exact_solution_2d(t, x);
  Forcing out;
  out.f = s.dt_u - nu * s.lap_u + s.grad_u * s.u - s.grad_b * s.b + s.grad_p;
  out.g = s.dt_b - mu * s.lap_b + s.grad_b * s.u - s.grad_u * s.b + s.grad_r;
  return out;
}

ProblemData manufactured_problem(double nu, double mu) {
  ProblemData data;
  data.f = [nu, mu](double t, const Point& x) { return forcing_terms_2d(nu, mu, t, x).f; };
  data.g = [nu, mu](double t, const Point& x) { return forcing_terms_2d(nu, mu, t, x).g; };
  data.u_boundary = [](double t, const Point& x) { return exact_solution_2d(t, x).u; };
  data.b_boundary = [](double t, const Point& x) { return exact_solution_2d(t, x).b; };
  data.u0 = [](const Point& x) { return exact_solution_2d(0.0, x).u; };
  data.b0 = [](const Point& x) { return exact_solution_2d(0.0, x).b; };
  return data;
}

EnergyComponents trajectory_energy(const DiscreteSpace& space, const SolverConfig& config, const Trajectory& traj,
                                   const std::function<HybridVectorField(double)>& u_ref,
                                   const std::function<HybridVectorField(double)>& b_ref, TimeQuadrature rule) {
  if (traj.states.empty()) throw std::invalid_argument("empty trajectory");
  EnergyComponents c;
  HybridVectorField prev_u, prev_b;
  double prev_du = 0.0, prev_db = 0.0, prev_ju = 0.0, prev_jb = 0.0, prev_time = 0.0;
  for (std::size_t n = 0; n < traj.states.size(); ++n) {
    const SimulationState& s = traj.states[n];
    s.u.check_compatible(space);
    if (s.beta.size() != space.num_elements() || s.gamma.size() != space.num_elements())
      throw DimensionMismatch("trajectory does not match the discrete space");
    HybridVectorField eu = s.u, eb = s.b;
    if (u_ref) eu -= u_ref(s.time);
    if (b_ref) eb -= b_ref(s.time);
    const double l2u = norm_0h(space, eu), l2b = norm_0h(space, eb);
    c.max_u = std::max(c.max_u, l2u * l2u);
    c.max_b = std::max(c.max_b, l2b * l2b);
    if (rule == TimeQuadrature::trapezoidal) {
      const double h1u = norm_1h(space, eu), h1b = norm_1h(space, eb);
      const double du = config.nu * h1u * h1u, db = config.mu * h1b * h1b;
      const double ju = upwind_form(space, s.beta, eu, eu), jb = upwind_form(space, s.gamma, eb, eb);
      if (n > 0) {
        const double w = 0.5 * (s.time - prev_time);
        c.diffusion_u += w * (du + prev_du);
        c.diffusion_b += w * (db + prev_db);
        c.upwind_u += w * (ju + prev_ju);
        c.upwind_b += w * (jb + prev_jb);
      }
      prev_du = du;
      prev_db = db;
      prev_ju = ju;
      prev_jb = jb;
    } else if (n > 0) {
      const HybridVectorField mu_h = 0.5 * (eu + prev_u), mb = 0.5 * (eb + prev_b);
      const double w = s.time - prev_time;
      const double h1u = norm_1h(space, mu_h), h1b = norm_1h(space, mb);
      c.diffusion_u += w * config.nu * h1u * h1u;
      c.diffusion_b += w * config.mu * h1b * h1b;
      c.upwind_u += w * upwind_form(space, s.beta, mu_h, mu_h);
      c.upwind_b += w * upwind_form(space, s.gamma, mb, mb);
    }
    prev_u = std::move(eu);
    prev_b = std::move(eb);
    prev_time = s.time;
  }
  return c;
}

ErrorReport energy_error(const DiscreteSpace& space, const SolverConfig& config, const Trajectory& traj,
                         TimeQuadrature rule) {
  ErrorReport report;
  report.components = trajectory_energy(
      space, config, traj,
      [&](double t) {
        return interpolate_velocity(space, [t](const Point& x) { return exact_solution_2d(t, x).u; }, false,
                                    kMaxQuadratureDegree);
      },
      [&](double t) {
        return interpolate_velocity(space, [t](const Point& x) { return exact_solution_2d(t, x).b; }, false,
                                    kMaxQuadratureDegree);
      },
      rule);
  report.energy_error = std::sqrt(report.components.sum());
  const SimulationState& last = traj.states.back();
  const double tf = last.time;
  if (last.p.element_dim() > 0 && traj.states.size() > 1) {
    report.pressure_error = scalar_l2_error(space, last.p, [tf](const Point& x) { return exact_solution_2d(tf, x).p; });
    report.magnetic_pressure_error =
        scalar_l2_error(space, last.r, [tf](const Point& x) { return exact_solution_2d(tf, x).r; });
  }
  report.mesh_size = space.geometry().mesh_size;
  report.full_dim = traj.stats.full_dim;
  report.condensed_dim = traj.stats.condensed_dim;
  return report;
}

std::vector<double> compute_eoc(const std::vector<double>& errors, const std::vector<double>& hs) {
  if (errors.size() != hs.size()) throw std::invalid_argument("compute_eoc: errors and mesh sizes differ in length");
  std::vector<double> rates;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    if (!(errors[i] > 0.0 && errors[i + 1] > 0.0 && hs[i] > 0.0 && hs[i + 1] > 0.0) || hs[i] == hs[i + 1])
      throw std::invalid_argument("compute_eoc: errors and mesh sizes must be positive with distinct h");
    rates.push_back(std::log(errors[i] / errors[i + 1]) / std::log(hs[i] / hs[i + 1]));
  }
  return rates;
}

InfSupMatrices assemble_infsup_matrices(const DiscreteSpace& space) {
  const Mesh& mesh = space.mesh();
  const auto nR = ix(space.rtn_dim()), nP = ix(space.scalar_dim());
  const auto nF = ix(space.face_scalar_dim()), nFv = ix(space.face_vector_dim());
  const auto ne = ix(space.num_elements()), nf = ix(space.num_faces());

  std::vector<Eigen::Index> face_u(space.num_faces(), -1);
  Eigen::Index nu = ne * nR;
  for (std::size_t f = 0; f < space.num_faces(); ++f) {
    if (!mesh.is_boundary(f)) {
      face_u[f] = nu;
      nu += nFv;
    }
  }
  const Eigen::Index np = ne * nP + nf * nF;

  Eigen::MatrixXd n1 = Eigen::MatrixXd::Zero(nu, nu);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(nu, np);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(np, np);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(np);
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const LocalOperatorSet& ops = space.operators(t);
    const auto& faces = mesh.element_faces(t);
    std::vector<Eigen::Index> vmap, pmap;
    for (Eigen::Index i = 0; i < nR; ++i) vmap.push_back(ix(t) * nR + i);
    for (std::size_t f : faces) {
      for (Eigen::Index i = 0; i < nFv; ++i) vmap.push_back(face_u[f] < 0 ? -1 : face_u[f] + i);
    }
    for (Eigen::Index i = 0; i < nP; ++i) pmap.push_back(ix(t) * nP + i);
    for (std::size_t f : faces) {
      for (Eigen::Index i = 0; i < nF; ++i) pmap.push_back(ne * nP + ix(f) * nF + i);
    }
    for (std::size_t i = 0; i < vmap.size(); ++i) {
      if (vmap[i] < 0) continue;
      for (std::size_t j = 0; j < vmap.size(); ++j) {
        if (vmap[j] >= 0) n1(vmap[i], vmap[j]) += ops.norm1(ix(i), ix(j));
      }
    }
    const double h = space.geometry().element_diameter[t];
    const QuadratureRule quad = triangle_quadrature(space.triangle(t), 2 * space.degree() + 2);
    Eigen::MatrixXd local_q = h * h * ops.gradient.transpose() * ops.rtn_mass * ops.gradient;
    local_q.topLeftCorner(nP, nP) += gram_matrix(space.scalar_basis(t), quad);
    for (std::size_t i = 0; i < pmap.size(); ++i) {
      for (std::size_t j = 0; j < pmap.size(); ++j) q(pmap[i], pmap[j]) += local_q(ix(i), ix(j));
      for (Eigen::Index r = 0; r < nR; ++r) b(ix(t) * nR + r, pmap[i]) += ops.gradient_rhs(r, ix(i));
    }
    for (Eigen::Index i = 0; i < nP; ++i) mean(pmap[static_cast<std::size_t>(i)]) = ops.scalar_integral(i);
  }

  return InfSupMatrices{std::move(n1), std::move(b), std::move(q), std::move(mean)};
}

double estimate_infsup_constant(const DiscreteSpace& space) {
  const InfSupMatrices m = assemble_infsup_matrices(space);
  const Eigen::Index np = m.coupling.cols();
  Eigen::LLT<Eigen::MatrixXd> llt(m.velocity_norm);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("velocity norm matrix is not positive definite");
  const Eigen::MatrixXd s = m.coupling.transpose() * llt.solve(m.coupling);

  // Orthonormal basis of the zero-mean subspace.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m.mean);
  const Eigen::MatrixXd full_q = qr.householderQ() * Eigen::MatrixXd::Identity(np, np);
  const Eigen::MatrixXd z = full_q.rightCols(np - 1);
  const Eigen::MatrixXd sz = z.transpose() * s * z;
  const Eigen::MatrixXd qz = z.transpose() * m.pressure_norm * z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(sz, qz, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw SingularMatrixError("inf-sup eigenvalue problem failed");
  return std::sqrt(std::max(0.0, eig.eigenvalues()(0)));
}

PecletReport peclet_report(const DiscreteSpace& space, double eta, const VectorFunction& w,
                           const std::vector<double>& alpha) {
  if (!(eta > 0.0)) throw std::invalid_argument("peclet_report: eta must be positive");
  if (alpha.size() != space.num_elements()) throw DimensionMismatch("one coefficient per element expected");
  PecletReport out;
  out.peclet.resize(space.num_elements());
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    double sup = 0.0;
    for (const Point& x : element_sample_points(space, t)) sup = std::max(sup, w(x).norm());
    out.peclet[t] = (alpha[t] + sup) * space.geometry().element_diameter[t] / eta;
    if (out.peclet[t] > 1.0) {
      const double ratio = alpha[t] > 0.0 ? sup / alpha[t] : (sup > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      out.chi = std::max(out.chi, ratio);
    }
  }
  return out;
}

}  // namespace mhdhho
