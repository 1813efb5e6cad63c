#include "doctest.h"

#include "mhdhho/hybrid.hpp"
#include "mhdhho/solver.hpp"

#include <array>
#include <cmath>
#include <random>

using namespace mhdhho;

namespace {

// curl of x(1-x)y(1-y)(c0 + c1 x + c2 y + c3 xy): divergence free, zero normal trace on the unit square.
struct StreamField {
  std::array<double, 4> c{};
  Eigen::Vector2d operator()(const Point& p) const {
    const double x = p.x(), y = p.y();
    const double gx = x * (1 - x), gy = y * (1 - y);
    const double m = c[0] + c[1] * x + c[2] * y + c[3] * x * y;
    const double psi_x = (1 - 2 * x) * gy * m + gx * gy * (c[1] + c[3] * y);
    const double psi_y = gx * (1 - 2 * y) * m + gx * gy * (c[2] + c[3] * x);
    return {psi_y, -psi_x};
  }
};

StreamField stream(double a, double b, double c, double d) { return StreamField{{a, b, c, d}}; }

SimulationState zero_state(const DiscreteSpace& space) {
  SimulationState s;
  s.u = HybridVectorField(space, true);
  s.b = HybridVectorField(space, true);
  s.p = HybridScalarField(space, true);
  s.r = HybridScalarField(space, true);
  return s;
}

Eigen::VectorXd random_unknowns(const DofLayout& layout, std::mt19937& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd x(layout.size());
  for (auto& v : x) v = normal(rng);
  return x;
}

// A nontrivial previous state with random coefficients and homogeneous boundary blocks.
SimulationState random_state(const DiscreteSpace& space, std::mt19937& rng) {
  const DofLayout layout(space);
  SimulationState base = zero_state(space);
  const StepProblem shell(space, layout, SolverConfig{}, ProblemData{}, base, 0.1);
  SimulationState s = shell.unpack(random_unknowns(layout, rng));
  s.step = 0;
  s.time = 0.0;
  return s;
}

ProblemData stream_data() {
  ProblemData data;
  data.u0 = stream(1.0, -2.0, 0.5, 3.0);
  data.b0 = stream(-0.5, 1.0, 2.0, -1.0);
  return data;
}

double energy(const DiscreteSpace& space, const SimulationState& s) {
  const double u = norm_0h(space, s.u), b = norm_0h(space, s.b);
  return u * u + b * b;
}

}  // namespace

TEST_CASE("time step count") {
  CHECK(time_step_count(0.5, 0) == 10);
  CHECK(time_step_count(0.01, 1) == 100);
  CHECK(time_step_count(0.01, 2) == 1000);
  CHECK(time_step_count(1.0 / 32, 0) == 10);
  CHECK(time_step_count(1.0 / 400, 0) == 20);
  CHECK_THROWS_AS(time_step_count(0.0, 0), std::invalid_argument);
}

TEST_CASE("upwind coefficients") {
  const DiscreteSpace space(generate_structured_mesh(2), 0);
  const HybridVectorField zero(space, true);
  for (double beta : upwind_coefficients(space, zero, zero, 1.0)) CHECK(beta == doctest::Approx(1e-4).epsilon(1e-14));
  for (double beta : upwind_coefficients(space, zero, zero, 0.0)) CHECK(beta == 0.0);

  const HybridVectorField u = interpolate_velocity(space, [](const Point&) { return Eigen::Vector2d(0.0, 0.7); });
  const HybridVectorField b = interpolate_velocity(space, [](const Point&) { return Eigen::Vector2d(0.3, 0.4); });
  for (double beta : upwind_coefficients(space, u, b, 0.5)) CHECK(beta == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("solver configuration validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.nu = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
  c = SolverConfig{};
  c.newton_rtol = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
  c = SolverConfig{};
  c.final_time = -1.0;
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
  c = SolverConfig{};
  c.c_stab = -1.0;
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
}

TEST_CASE("dof layout") {
  for (int k : {0, 1}) {
    const DiscreteSpace space(generate_structured_mesh(3), k);
    const DofLayout layout(space);
    std::size_t interior = 0;
    for (std::size_t f = 0; f < space.num_faces(); ++f) interior += space.mesh().is_boundary(f) ? 0 : 1;
    const auto ne = space.num_elements(), nf = space.num_faces();
    const auto expected = 2 * ne * (space.rtn_dim() + space.scalar_dim()) + 2 * interior * space.face_vector_dim() +
                          2 * nf * space.face_scalar_dim() + 2;
    CHECK(layout.size() == static_cast<Eigen::Index>(expected));

    // Every unknown is touched by some element, and interior blocks are disjoint.
    std::vector<int> seen(static_cast<std::size_t>(layout.size()), 0);
    for (std::size_t t = 0; t < ne; ++t) {
      CHECK(layout.local_dofs(t).size() == layout.local_size());
      for (Eigen::Index g : layout.local_dofs(t)) {
        if (g >= 0) seen[static_cast<std::size_t>(g)] = 1;
      }
    }
    for (int s : seen) CHECK(s == 1);
    std::vector<int> owner(static_cast<std::size_t>(layout.size()), 0);
    for (const auto& block : layout.interior_blocks()) {
      for (Eigen::Index g : block) ++owner[static_cast<std::size_t>(g)];
    }
    for (int o : owner) CHECK(o <= 1);
  }
}

TEST_CASE("residual of the zero state") {
  const DiscreteSpace space(generate_structured_mesh(3), 1);
  const DofLayout layout(space);
  const SimulationState s = zero_state(space);
  const SolverConfig config;
  const StepProblem step(space, layout, config, ProblemData{}, s, 0.1);
  CHECK(step.residual(step.initial_guess()).norm() == 0.0);
  CHECK_THROWS_AS(step.residual(Eigen::VectorXd::Zero(3)), DimensionMismatch);
}

TEST_CASE("residual is affine in the pressures") {
  std::mt19937 rng(11);
  const DiscreteSpace space(generate_structured_mesh(3), 1);
  const DofLayout layout(space);
  const SimulationState prev = random_state(space, rng);
  const SolverConfig config;
  const StepProblem step(space, layout, config, ProblemData{}, prev, 0.05);

  Eigen::VectorXd d = Eigen::VectorXd::Zero(layout.size());
  std::normal_distribution<double> normal;
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(space.scalar_dim()); ++i) {
      d(layout.element_p(t) + i) = normal(rng);
      d(layout.element_r(t) + i) = normal(rng);
    }
  }
  for (std::size_t f = 0; f < space.num_faces(); ++f) {
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(space.face_scalar_dim()); ++i) {
      d(layout.face_p(f) + i) = normal(rng);
      d(layout.face_r(f) + i) = normal(rng);
    }
  }
  const Eigen::VectorXd x1 = random_unknowns(layout, rng), x2 = random_unknowns(layout, rng);
  const Eigen::VectorXd diff1 = step.residual(x1 + d) - step.residual(x1);
  const Eigen::VectorXd diff2 = step.residual(x2 + d) - step.residual(x2);
  CHECK((diff1 - diff2).norm() <= 1e-11 * diff1.norm());
  CHECK(diff1.norm() > 0.0);
}

TEST_CASE("Jacobian matches finite differences") {
  std::mt19937 rng(5);
  for (int k : {0, 1, 2}) {
    CAPTURE(k);
    const DiscreteSpace space(generate_structured_mesh(2), k);
    const DofLayout layout(space);
    const SimulationState prev = random_state(space, rng);
    SolverConfig config;
    config.nu = 0.3;
    config.mu = 0.7;
    ProblemData data;
    data.u_boundary = [](double t, const Point& x) { return Eigen::Vector2d(std::sin(x.y() + t), x.x() * x.x()); };
    data.b_boundary = [](double, const Point& x) { return Eigen::Vector2d(x.y(), std::cos(x.x())); };
    const StepProblem step(space, layout, config, data, prev, 0.1);

    const Eigen::VectorXd x = random_unknowns(layout, rng);
    const Eigen::VectorXd d = random_unknowns(layout, rng);
    const Eigen::VectorXd r0 = step.residual(x);
    const Eigen::VectorXd jd = step.jacobian(x) * d;
    std::vector<double> logs_eps, logs_err;
    for (double eps : {1e-4, 1e-5, 1e-6, 1e-7}) {
      const double err = ((step.residual(x + eps * d) - r0) / eps - jd).norm();
      logs_eps.push_back(std::log10(eps));
      logs_err.push_back(std::log10(err));
    }
    // least-squares slope of log(err) against log(eps)
    double me = 0, mr = 0;
    for (std::size_t i = 0; i < logs_eps.size(); ++i) {
      me += logs_eps[i] / 4;
      mr += logs_err[i] / 4;
    }
    double num = 0, den = 0;
    for (std::size_t i = 0; i < logs_eps.size(); ++i) {
      num += (logs_eps[i] - me) * (logs_err[i] - mr);
      den += (logs_eps[i] - me) * (logs_eps[i] - me);
    }
    CHECK(num / den == doctest::Approx(1.0).epsilon(0.1));
  }
}

TEST_CASE("Stokes restriction gives a symmetric Jacobian") {
  std::mt19937 rng(8);
  const DiscreteSpace space(generate_structured_mesh(3), 1);
  const DofLayout layout(space);
  const SimulationState prev = random_state(space, rng);
  SolverConfig config;
  config.convection = false;
  config.c_stab = 0.0;
  const StepProblem step(space, layout, config, ProblemData{}, prev, 0.1);
  const SparseMatrix j = step.jacobian(random_unknowns(layout, rng));
  const SparseMatrix jt = j.transpose();
  CHECK((j - jt).norm() <= 1e-12 * j.norm());
}

TEST_CASE("Jacobian at a zero convecting state") {
  // With u_T = b_T = 0 the convective blocks reduce to the transport terms.
  std::mt19937 rng(9);
  const DiscreteSpace space(generate_structured_mesh(2), 1);
  const DofLayout layout(space);
  const SimulationState prev = zero_state(space);
  SolverConfig with, without;
  without.convection = false;
  const StepProblem a(space, layout, with, ProblemData{}, prev, 0.1);
  const StepProblem b(space, layout, without, ProblemData{}, prev, 0.1);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(layout.size());
  CHECK(SparseMatrix(a.jacobian(x) - b.jacobian(x)).norm() == 0.0);
}

TEST_CASE("Newton converges in one iteration for the linear problem") {
  const DiscreteSpace space(generate_structured_mesh(4), 1);
  const DofLayout layout(space);
  SolverConfig config;
  config.convection = false;
  ProblemData data = stream_data();
  data.f = [](double t, const Point& x) { return Eigen::Vector2d(std::cos(t + x.y()), x.x() * x.y()); };
  const SimulationState s0 = initial_state(space, config, data);
  const StepProblem step(space, layout, config, data, s0, 0.1);
  const NewtonResult nr = newton_solve(step, layout, config, 1);
  CHECK(nr.iterations == 1);
  CHECK(nr.final_residual <= 1e-8 * nr.initial_residual);
}

TEST_CASE("Newton on the nonlinear problem") {
  const DiscreteSpace space(generate_structured_mesh(4), 0);
  const DofLayout layout(space);
  SolverConfig config;
  ProblemData data = stream_data();
  data.g = [](double, const Point& x) { return Eigen::Vector2d(x.y() * x.y(), 1.0); };
  const SimulationState s0 = initial_state(space, config, data);
  const StepProblem step(space, layout, config, data, s0, 0.1);
  RunStatistics stats;
  const NewtonResult nr = newton_solve(step, layout, config, 1, &stats);
  CHECK(nr.iterations >= 2);
  CHECK(nr.iterations <= 5);
  CHECK(nr.final_residual <= 1e-8 * nr.initial_residual);
  CHECK(stats.total_newton_iterations == nr.iterations);

  SolverConfig strict = config;
  strict.newton_max_iter = 1;
  strict.newton_rtol = 1e-14;
  try {
    newton_solve(step, layout, strict, 7);
    FAIL("expected NewtonFailure");
  } catch (const NewtonFailure& e) {
    CHECK(e.step() == 7);
  }
}

TEST_CASE("static condensation matches the direct solve") {
  SUBCASE("diagonal system") {
    SparseMatrix a(4, 4);
    for (int i = 0; i < 4; ++i) a.insert(i, i) = i + 1.0;
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(4, 1.0, 4.0);
    const CondensedSolution cs = static_condense_solve(a, b, {{0}, {2}});
    CHECK((cs.x - direct_solve(a, b)).norm() <= 1e-14);
    CHECK(cs.condensed_dim == 2);
  }
  SUBCASE("coupled interior blocks are rejected") {
    SparseMatrix a(3, 3);
    a.insert(0, 0) = 1.0;
    a.insert(1, 1) = 1.0;
    a.insert(2, 2) = 1.0;
    a.insert(0, 1) = 0.5;
    CHECK_THROWS_AS(static_condense_solve(a, Eigen::VectorXd::Ones(3), {{0}, {1}}), std::invalid_argument);
  }
  SUBCASE("step Jacobians") {
    std::mt19937 rng(3);
    for (bool convection : {false, true}) {
      const DiscreteSpace space(generate_structured_mesh(2), 0);
      const DofLayout layout(space);
      SolverConfig config;
      config.convection = convection;
      const SimulationState prev = random_state(space, rng);
      const StepProblem step(space, layout, config, ProblemData{}, prev, 0.1);
      const Eigen::VectorXd x = random_unknowns(layout, rng);
      const SparseMatrix j = step.jacobian(x);
      const Eigen::VectorXd r = step.residual(x);
      const Eigen::VectorXd full = direct_solve(j, r);
      const CondensedSolution cs = static_condense_solve(j, r, layout.interior_blocks());
      CHECK((cs.x - full).norm() <= 1e-10 * full.norm());

      std::size_t face_dofs = 0;
      for (std::size_t f = 0; f < space.num_faces(); ++f) {
        face_dofs += 2 * space.face_scalar_dim();
        if (!space.mesh().is_boundary(f)) face_dofs += 2 * space.face_vector_dim();
      }
      CHECK(cs.condensed_dim == static_cast<Eigen::Index>(face_dofs + 2));
      CHECK(cs.condensed_dim < layout.size());
    }
  }
}

TEST_CASE("zero data gives the zero trajectory") {
  const DiscreteSpace space(generate_structured_mesh(3), 1);
  SolverConfig config;
  config.time_steps = 4;
  const Trajectory traj = run_simulation(space, config, ProblemData{});
  REQUIRE(traj.states.size() == 5);
  for (const auto& s : traj.states) {
    CHECK(s.u.elements().norm() == 0.0);
    CHECK(s.b.faces().norm() == 0.0);
    CHECK(s.p.elements().norm() == 0.0);
  }
  CHECK(traj.states.back().time == doctest::Approx(1.0));
  CHECK(traj.dt == doctest::Approx(0.25));
}

TEST_CASE("energy is non-increasing without forcing") {
  for (int k : {0, 1}) {
    CAPTURE(k);
    const DiscreteSpace space(generate_structured_mesh(4), k);
    SolverConfig config;
    config.final_time = 0.5;
    config.time_steps = 10;
    std::vector<double> e;
    run_simulation(space, config, stream_data(), [&](const SimulationState& s) { e.push_back(energy(space, s)); });
    REQUIRE(e.size() == 11);
    for (std::size_t n = 1; n < e.size(); ++n) CHECK(e[n] <= e[n - 1] * (1.0 + 1e-10));
    CHECK(e.back() < e.front());
  }
}

TEST_CASE("accepted states are divergence free") {
  const DiscreteSpace space(generate_structured_mesh(4), 1);
  SolverConfig config;
  config.final_time = 0.2;
  config.time_steps = 4;
  config.cross_check_condensation = true;
  ProblemData data = stream_data();
  data.f = [](double t, const Point& x) { return Eigen::Vector2d(std::sin(3 * x.y()) + t, x.x()); };
  data.g = [](double, const Point& x) { return Eigen::Vector2d(x.y() * x.y(), -x.x()); };
  int checked = 0;
  const Trajectory traj = run_simulation(space, config, data, [&](const SimulationState& s) {
    CHECK(check_divergence_free(space, s.u).passes(1e-10));
    CHECK(check_divergence_free(space, s.b).passes(1e-10));
    ++checked;
  });
  CHECK(checked == 5);
  CHECK(traj.stats.cross_checks == traj.stats.total_newton_iterations);
  CHECK(traj.stats.max_condensation_difference <= 1e-9);
  CHECK(traj.stats.condensed_dim < traj.stats.full_dim);
}
