#pragma once

#include "mhdhho/solver.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mhdhho {

/// Values and derivatives of the manufactured solution on the unit square.
/// Gradients are stored as J(i, j) = d_j v_i.
struct ExactFields {
  Eigen::Vector2d u, b;
  double p = 0.0, r = 0.0;
  Eigen::Matrix2d grad_u, grad_b;
  Eigen::Vector2d lap_u, lap_b;
  Eigen::Vector2d dt_u, dt_b;
  Eigen::Vector2d grad_p, grad_r;
};

/// u = -e^{-t/2}(sin sin, cos cos), b = -e^{-t/2}(cos cos, sin sin),
/// p = e^{-t/2} sin cos, r = e^{-t/2} cos sin, all with argument 2 pi.
ExactFields exact_solution_2d(double t, const Point& x);

struct Forcing {
  Eigen::Vector2d f, g;
};

/// f = d_t u - nu lap u + (u.grad)u - (b.grad)b + grad p and
/// g = d_t b - mu lap b + (u.grad)b - (b.grad)u + grad r.
Forcing forcing_terms_2d(double nu, double mu, double t, const Point& x);

/// Loads, Dirichlet traces and initial values of the manufactured problem.
ProblemData manufactured_problem(double nu, double mu);

/// Squared energy-norm contributions. The max terms are taken over the time
/// grid and the integrals use the composite trapezoidal rule.
struct EnergyComponents {
  double max_u = 0.0;         // max_n |e_u|_{0,h}^2
  double max_b = 0.0;         // max_n |e_b|_{0,h}^2
  double diffusion_u = 0.0;   // int nu |e_u|_{1,h}^2
  double diffusion_b = 0.0;   // int mu |e_b|_{1,h}^2
  double upwind_u = 0.0;      // int |e_u|_{beta,h}^2
  double upwind_b = 0.0;      // int |e_b|_{gamma,h}^2
  double sum() const { return max_u + max_b + diffusion_u + diffusion_b + upwind_u + upwind_b; }
};

struct ErrorReport {
  double energy_error = 0.0;  // sqrt of components.sum()
  EnergyComponents components;
  double pressure_error = 0.0;           // |p_T - p|_{L2} at the final time
  double magnetic_pressure_error = 0.0;  // |r_T - r|_{L2} at the final time
  double mesh_size = 0.0;
  Eigen::Index full_dim = 0;
  Eigen::Index condensed_dim = 0;
  double wall_time = 0.0;  // filled by the caller
};

/// How the time integrals of the energy norm are discretized. trapezoidal
/// averages the integrand over the two step endpoints. midpoint evaluates it
/// at the step average (e^n + e^{n+1})/2, which is the quantity the
/// Crank-Nicolson energy identity controls; it is a diagnostic only.
enum class TimeQuadrature { trapezoidal, midpoint };

/// Energy-norm components of a trajectory minus a reference. With an empty
/// reference this is the energy norm of the trajectory itself. The upwind
/// weights are the per-step coefficients stored in the states; the midpoint
/// rule uses those of the step's end state, i.e. the ones the step used.
EnergyComponents trajectory_energy(const DiscreteSpace& space, const SolverConfig& config, const Trajectory& traj,
                                   const std::function<HybridVectorField(double)>& u_ref = {},
                                   const std::function<HybridVectorField(double)>& b_ref = {},
                                   TimeQuadrature rule = TimeQuadrature::trapezoidal);

/// Energy error of a trajectory against the manufactured solution, with
/// e_u = u_h - I u (similarly e_b) at every time step. The interpolant uses
/// the highest quadrature degree, like the solver's data projections.
ErrorReport energy_error(const DiscreteSpace& space, const SolverConfig& config, const Trajectory& traj,
                         TimeQuadrature rule = TimeQuadrature::trapezoidal);

/// rate_i = log(e_i / e_{i+1}) / log(h_i / h_{i+1}).
std::vector<double> compute_eoc(const std::vector<double>& errors, const std::vector<double>& hs);

/// Dense matrices behind the inf-sup estimate: velocity unknowns are element
/// blocks then interior face blocks, pressure unknowns are element blocks then
/// all face blocks.
struct InfSupMatrices {
  Eigen::MatrixXd velocity_norm;  // |v|_{1,h}^2
  Eigen::MatrixXd coupling;       // B_h(v, q) = v^T coupling q
  Eigen::MatrixXd pressure_norm;  // |q_h|_{L2}^2 + sum_T h_T^2 |G_T q|^2
  Eigen::VectorXd mean;           // int q_h = mean . q
};
InfSupMatrices assemble_infsup_matrices(const DiscreteSpace& space);

/// Smallest generalized singular value of B_h between |.|_{1,h} on the
/// velocities with zero boundary faces and the weighted pressure norm
/// (|q_h|_{L2}^2 + sum_T h_T^2 |G_T q|^2)^{1/2} on zero-mean pressures.
/// Dense; intended for small meshes.
double estimate_infsup_constant(const DiscreteSpace& space);

struct PecletReport {
  std::vector<double> peclet;  // Pe_T per element
  double chi = 0.0;            // max of |w|_inf / alpha_T over elements with Pe_T > 1, 0 if none
};

/// Pe_T = (alpha_T + |w|_{L^inf(T)}) h_T / eta with sampled sup norms.
PecletReport peclet_report(const DiscreteSpace& space, double eta, const VectorFunction& w,
                           const std::vector<double>& alpha);

}  // namespace mhdhho
