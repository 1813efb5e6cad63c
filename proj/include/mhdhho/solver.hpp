#pragma once

#include "mhdhho/discrete_space.hpp"
#include "mhdhho/linear_solve.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mhdhho {

using TimeVectorFunction = std::function<Eigen::Vector2d(double, const Point&)>;

class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Newton did not reach the tolerance, or a linear solve failed, at a given step.
class NewtonFailure : public std::runtime_error {
 public:
  NewtonFailure(std::size_t step, const std::string& what);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

enum class LinearSolverKind { direct, condensed };

struct SolverConfig {
  double nu = 1.0;
  double mu = 1.0;
  double final_time = 1.0;
  double c_stab = 1.0;
  double newton_rtol = 1e-8;
  // Below this Euclidean residual norm the step is accepted outright. It
  // only matters when the initial residual is already at round-off level.
  double newton_atol = 1e-13;
  // Stop when |correction| <= newton_stagnation |x|: the residual is then at
  // its round-off floor even if that floor exceeds newton_atol.
  double newton_stagnation = 1e-12;
  int newton_max_iter = 25;
  LinearSolverKind linear_solver = LinearSolverKind::condensed;
  bool convection = true;               // false drops every t_h term
  bool cross_check_condensation = false;  // solve both ways at every Newton step
  int time_steps = 0;                   // 0 selects time_step_count(h, k)

  void validate() const;
};

/// Right-hand sides, Dirichlet data and initial values. Empty loads are zero;
/// empty boundary data means homogeneous conditions.
struct ProblemData {
  TimeVectorFunction f, g;
  TimeVectorFunction u_boundary, b_boundary;
  VectorFunction u0, b0;
};

struct SimulationState {
  std::size_t step = 0;
  double time = 0.0;
  HybridVectorField u, b;
  HybridScalarField p, r;
  std::vector<double> beta, gamma;  // upwind coefficients at this time
  int newton_iterations = 0;
};

struct RunStatistics {
  Eigen::Index full_dim = 0;
  Eigen::Index condensed_dim = 0;
  int total_newton_iterations = 0;
  int max_newton_iterations = 0;
  int cross_checks = 0;
  double max_condensation_difference = 0.0;  // relative, over all cross-checked solves
};

struct Trajectory {
  std::vector<SimulationState> states;
  double dt = 0.0;
  RunStatistics stats;
};

/// N = max(10, ceil(h^{-(k+1)/2})).
int time_step_count(double h, int k);

/// beta_T = c_stab max(1e-4, |u_T|_inf + |b_T|_inf) per element.
std::vector<double> upwind_coefficients(const DiscreteSpace& space, const HybridVectorField& u,
                                        const HybridVectorField& b, double c_stab);

/// Global unknown numbering. Boundary face blocks of u and b carry Dirichlet
/// data and are not unknowns. Order: element u | element b | element p |
/// element r | face u | face b | face p | face r | two mean multipliers.
class DofLayout {
 public:
  explicit DofLayout(const DiscreteSpace& space);

  Eigen::Index size() const { return size_; }
  Eigen::Index element_u(std::size_t t) const;
  Eigen::Index element_b(std::size_t t) const;
  Eigen::Index element_p(std::size_t t) const;
  Eigen::Index element_r(std::size_t t) const;
  Eigen::Index face_u(std::size_t f) const;  // -1 on boundary faces
  Eigen::Index face_b(std::size_t f) const;
  Eigen::Index face_p(std::size_t f) const;
  Eigen::Index face_r(std::size_t f) const;
  Eigen::Index multiplier_p() const { return size_ - 2; }
  Eigen::Index multiplier_r() const { return size_ - 1; }

  /// Global index of each local unknown of element t, -1 for Dirichlet
  /// entries. Local order: u local | b local | p local | r local | 2 multipliers.
  const std::vector<Eigen::Index>& local_dofs(std::size_t t) const { return local_[t]; }
  std::size_t local_size() const;
  /// Element-interior unknowns (u_T, b_T, p_T, r_T) of each element.
  std::vector<std::vector<Eigen::Index>> interior_blocks() const;

 private:
  const DiscreteSpace* space_;
  Eigen::Index size_ = 0;
  std::vector<Eigen::Index> interior_face_;  // rank among interior faces, -1 on the boundary
  Eigen::Index n_interior_faces_ = 0;
  std::vector<std::vector<Eigen::Index>> local_;
};

/// One Crank-Nicolson step from a known state. Exposes the residual and its
/// Jacobian so they can be tested independently of the Newton loop.
class StepProblem {
 public:
  StepProblem(const DiscreteSpace& space, const DofLayout& layout, const SolverConfig& config,
              const ProblemData& data, const SimulationState& previous, double dt);

  /// Initial Newton guess: the previous state with the new boundary data.
  Eigen::VectorXd initial_guess() const;
  Eigen::VectorXd residual(const Eigen::VectorXd& x) const;
  SparseMatrix jacobian(const Eigen::VectorXd& x) const;
  /// Unknown vector -> state at the new time (boundary blocks from the data).
  SimulationState unpack(const Eigen::VectorXd& x) const;
  const std::vector<double>& beta() const { return beta_; }

 private:
  struct Locals;
  Locals gather(const Eigen::VectorXd& x, std::size_t t) const;

  const DiscreteSpace& space_;
  const DofLayout& layout_;
  const SolverConfig& config_;
  const SimulationState& previous_;
  double dt_;
  double t_new_;
  std::vector<double> beta_;
  HybridVectorField u_data_, b_data_;     // Dirichlet face values at t_new
  std::vector<Eigen::VectorXd> u_flux_, b_flux_;  // per face: int_F r_i (data . n), boundary faces only
  std::vector<Eigen::VectorXd> load_u_, load_b_;  // averaged element loads
  std::vector<Eigen::VectorXd> previous_force_u_, previous_force_b_;  // spatial forms at the previous state
};

/// Pack the unknown entries of a state.
Eigen::VectorXd pack_state(const DofLayout& layout, const DiscreteSpace& space, const SimulationState& state);

struct NewtonResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double initial_residual = 0.0;
  double final_residual = 0.0;
};

/// Newton iteration on one step. Throws NewtonFailure (step index from
/// previous.step + 1) when the tolerance is not met.
NewtonResult newton_solve(const StepProblem& problem, const DofLayout& layout, const SolverConfig& config,
                          std::size_t step, RunStatistics* stats = nullptr);

/// Initial state from the interpolated initial data.
SimulationState initial_state(const DiscreteSpace& space, const SolverConfig& config, const ProblemData& data);

/// Runs N Crank-Nicolson steps of size final_time / N. The observer, if set,
/// sees each accepted state.
Trajectory run_simulation(const DiscreteSpace& space, const SolverConfig& config, const ProblemData& data,
                          const std::function<void(const SimulationState&)>& observer = {});

}  // namespace mhdhho
