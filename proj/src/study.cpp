#include "mhdhho/study.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace mhdhho {

StudyFailure::StudyFailure(std::string mesh, const std::string& what)
    : std::runtime_error("mesh " + mesh + ": " + what), mesh_(std::move(mesh)) {}

void StudyConfig::validate() const {
  if (k < 0 || k > 3) throw UsageError("--k: degree must be in [0, 3], got " + std::to_string(k));
  if (!(nu > 0.0)) throw UsageError("--nu: must be positive");
  if (!(mu > 0.0)) throw UsageError("--mu: must be positive");
  if (!(c_stab >= 0.0)) throw UsageError("--cstab: must be nonnegative");
  if (!(final_time > 0.0)) throw UsageError("--tf: must be positive");
  if (meshes.empty() && mesh_files.empty()) throw UsageError("--meshes: no meshes given (or use --mesh-files)");
  if (!meshes.empty() && !mesh_files.empty()) throw UsageError("--meshes and --mesh-files are exclusive");
  for (int n : meshes)
    if (n < 1) throw UsageError("--meshes: mesh divisions must be positive, got " + std::to_string(n));
}

SolverConfig StudyConfig::solver_config() const {
  SolverConfig c;
  c.nu = nu;
  c.mu = mu;
  c.final_time = final_time;
  c.c_stab = upwind ? c_stab : 0.0;
  c.newton_max_iter = newton_max_iter;
  c.linear_solver = condense ? LinearSolverKind::condensed : LinearSolverKind::direct;
  return c;
}

std::string StudyConfig::mesh_label(std::size_t i) const {
  return mesh_files.empty() ? "n=" + std::to_string(meshes.at(i)) : mesh_files.at(i);
}

StudyConfig parse_config(const std::vector<std::string>& args) {
  StudyConfig c;
  CLI::App app{"Convergence study of the HHO scheme for unsteady MHD on the manufactured solution", "mhd_hho"};
  app.set_config("--config", "", "TOML/INI file with default flag values");
  app.allow_config_extras(false);
  app.add_option("--k", c.k, "Polynomial degree k")->check(CLI::Range(0, 3));
  app.add_option("--nu", c.nu, "Kinematic viscosity");
  app.add_option("--mu", c.mu, "Magnetic diffusivity");
  app.add_option("--cstab", c.c_stab, "Upwind constant C_stab");
  auto* meshes = app.add_option("--meshes", c.meshes, "Structured mesh divisions, comma separated")->delimiter(',');
  auto* files = app.add_option("--mesh-files", c.mesh_files, "Mesh files, in refinement order")->delimiter(',');
  meshes->excludes(files);
  app.add_option("--tf", c.final_time, "Final time");
  app.add_option("--out", c.output, "CSV output path (default stdout)");
  std::string condense = "on";
  app.add_option("--condense", condense, "Static condensation")->check(CLI::IsMember({"on", "off"}));
  bool no_upwind = false;
  app.add_flag("--no-upwind", no_upwind, "Disable upwinding (C_stab = 0)");

  // CLI11 wants the arguments in reverse order.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  c.condense = condense == "on";
  c.upwind = !no_upwind;
  c.validate();
  return c;
}

std::string format_csv_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.11e", x);
  return buf;
}

std::string csv_header() { return "MeshSize,TotalEnergyComponentNormError,Rate"; }

std::string csv_row(const StudyRow& row) {
  std::string line = format_csv_number(row.mesh_size) + "," + format_csv_number(row.error) + ",";
  if (row.rate) line += format_csv_number(*row.rate);
  return line;
}

std::vector<StudyRow> run_convergence_study(const StudyConfig& config, std::ostream& csv, std::ostream* log) {
  config.validate();
  const SolverConfig solver = config.solver_config();
  const ProblemData data = manufactured_problem(config.nu, config.mu);

  std::vector<StudyRow> rows;
  csv << csv_header() << '\n' << std::flush;
  for (std::size_t i = 0; i < config.mesh_count(); ++i) {
    StudyRow row;
    row.mesh = config.mesh_label(i);
    const auto start = std::chrono::steady_clock::now();
    try {
      Mesh mesh = config.mesh_files.empty() ? generate_structured_mesh(config.meshes[i])
                                            : load_mesh_file(config.mesh_files[i]);
      DiscreteSpace space(std::move(mesh), config.k);
      const Trajectory traj = run_simulation(space, solver, data);
      const ErrorReport report = energy_error(space, solver, traj);
      row.mesh_size = report.mesh_size;
      row.error = report.energy_error;
      row.time_steps = traj.states.size() - 1;
      row.newton_iterations = traj.stats.total_newton_iterations;
    } catch (const NewtonFailure& e) {
      csv << std::flush;
      throw StudyFailure(row.mesh, e.what());
    } catch (const SingularMatrixError& e) {
      csv << std::flush;
      throw StudyFailure(row.mesh, e.what());
    } catch (const MeshError& e) {
      csv << std::flush;
      throw UsageError("--mesh-files: " + row.mesh + ": " + e.what());
    }
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!rows.empty())
      row.rate = compute_eoc({rows.back().error, row.error}, {rows.back().mesh_size, row.mesh_size}).front();
    csv << csv_row(row) << '\n' << std::flush;
    if (log) {
      *log << row.mesh << ": h=" << row.mesh_size << " error=" << row.error << " steps=" << row.time_steps
           << " newton=" << row.newton_iterations << " time=" << row.wall_time << "s";
      if (row.rate) *log << " rate=" << *row.rate;
      *log << std::endl;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mhdhho
