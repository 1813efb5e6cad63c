// Convergence-study driver. Exit codes: 0 success, 1 usage error, 2 solver failure.
#include "mhdhho/study.hpp"

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  using namespace mhdhho;
  StudyConfig config;
  try {
    config = parse_config(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const HelpRequested& e) {
    std::cout << e.what();
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nrun with --help for the list of flags\n";
    return 1;
  }

  std::ofstream file;
  if (!config.output.empty()) {
    file.open(config.output);
    if (!file) {
      std::cerr << "usage error: --out: cannot open " << config.output << "\n";
      return 1;
    }
  }
  std::ostream& csv = config.output.empty() ? std::cout : file;

  try {
    run_convergence_study(config, csv, &std::cerr);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
