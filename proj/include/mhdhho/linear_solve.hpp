#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace mhdhho {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Name of the sparse direct backend compiled in ("UMFPACK" or "SparseLU").
std::string direct_solver_name();

/// Solves A x = b with a sparse LU factorization. Throws SingularMatrixError.
Eigen::VectorXd direct_solve(const SparseMatrix& a, const Eigen::VectorXd& b);

struct CondensedSolution {
  Eigen::VectorXd x;
  Eigen::Index condensed_dim = 0;
};

/// Solves A x = b by eliminating the listed interior blocks through their
/// local Schur complements. Each block must couple only to itself and to
/// the indices outside every block; a violation throws std::invalid_argument.
CondensedSolution static_condense_solve(const SparseMatrix& a, const Eigen::VectorXd& b,
                                        const std::vector<std::vector<Eigen::Index>>& interior_blocks);

}  // namespace mhdhho
