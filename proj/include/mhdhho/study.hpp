#pragma once

#include "mhdhho/mms.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mhdhho {

/// Bad command line or config file. The message names the offending flag.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// --help was given; what() holds the help text.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mesh of the study failed. Rows of earlier meshes were already written.
class StudyFailure : public std::runtime_error {
 public:
  StudyFailure(std::string mesh, const std::string& what);
  const std::string& mesh() const { return mesh_; }

 private:
  std::string mesh_;
};

struct StudyConfig {
  int k = 0;
  double nu = 1.0;
  double mu = 1.0;
  double c_stab = 1.0;
  std::vector<int> meshes;               // structured n x n meshes
  std::vector<std::string> mesh_files;   // used instead of meshes when set
  double final_time = 1.0;
  std::string output;                    // empty writes to stdout
  bool condense = true;
  bool upwind = true;                    // false forces c_stab = 0
  int newton_max_iter = 25;              // library only, no flag

  void validate() const;  // throws UsageError
  SolverConfig solver_config() const;
  std::size_t mesh_count() const { return mesh_files.empty() ? meshes.size() : mesh_files.size(); }
  std::string mesh_label(std::size_t i) const;
};

/// Parses command-line arguments (without the program name). A file given by
/// --config supplies defaults in TOML/INI form; flags override it.
StudyConfig parse_config(const std::vector<std::string>& args);

struct StudyRow {
  std::string mesh;
  double mesh_size = 0.0;
  double error = 0.0;
  std::optional<double> rate;  // against the previous row
  std::size_t time_steps = 0;
  int newton_iterations = 0;
  double wall_time = 0.0;
};

/// Formats one number the way the CSV does: 12 significant digits, scientific.
std::string format_csv_number(double x);
std::string csv_header();
std::string csv_row(const StudyRow& row);

/// Runs the manufactured problem on every mesh in order and writes
/// MeshSize,TotalEnergyComponentNormError,Rate rows to csv, flushing after
/// each one. Progress goes to log when given. Throws StudyFailure naming the
/// mesh on a solver failure.
std::vector<StudyRow> run_convergence_study(const StudyConfig& config, std::ostream& csv,
                                            std::ostream* log = nullptr);

}  // namespace mhdhho
