#include "mhdhho/linear_solve.hpp"

#include "mhdhho/polyspace.hpp"

#include <Eigen/SparseLU>
#ifdef MHDHHO_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include <cmath>
#include <stdexcept>

namespace mhdhho {

std::string direct_solver_name() {
#ifdef MHDHHO_HAVE_UMFPACK
  return "UMFPACK";
#else
  return "SparseLU";
#endif
}

Eigen::VectorXd direct_solve(const SparseMatrix& a, const Eigen::VectorXd& b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) throw std::invalid_argument("direct_solve: size mismatch");
  if (a.rows() == 0) return Eigen::VectorXd();
  SparseMatrix m = a;
  m.makeCompressed();
#ifdef MHDHHO_HAVE_UMFPACK
  Eigen::UmfPackLU<SparseMatrix> lu;
#else
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
#endif
  lu.compute(m);
  if (lu.info() != Eigen::Success) throw SingularMatrixError("sparse factorization failed");
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SingularMatrixError("sparse solve failed");
  return x;
}

CondensedSolution static_condense_solve(const SparseMatrix& a, const Eigen::VectorXd& b,
                                        const std::vector<std::vector<Eigen::Index>>& interior_blocks) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.size() != n) throw std::invalid_argument("static_condense_solve: size mismatch");

  // owner[i] = block index for interior dofs, -1 for skeleton dofs.
  std::vector<long> owner(static_cast<std::size_t>(n), -1);
  for (std::size_t e = 0; e < interior_blocks.size(); ++e) {
    for (Eigen::Index i : interior_blocks[e]) {
      if (i < 0 || i >= n || owner[static_cast<std::size_t>(i)] >= 0)
        throw std::invalid_argument("static_condense_solve: invalid or repeated interior index");
      owner[static_cast<std::size_t>(i)] = static_cast<long>(e);
    }
  }
  std::vector<Eigen::Index> skeleton_index(static_cast<std::size_t>(n), -1);
  Eigen::Index ns = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (owner[static_cast<std::size_t>(i)] < 0) skeleton_index[static_cast<std::size_t>(i)] = ns++;
  }

  const Eigen::SparseMatrix<double, Eigen::RowMajor> rows = a;
  const SparseMatrix& cols = a;  // column major

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs(ns);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index s = skeleton_index[static_cast<std::size_t>(i)];
    if (s < 0) continue;
    rhs(s) = b(i);
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, i); it; ++it) {
      const Eigen::Index sj = skeleton_index[static_cast<std::size_t>(it.col())];
      if (sj >= 0) trip.emplace_back(s, sj, it.value());
    }
  }

  struct BlockData {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    std::vector<Eigen::Index> cols;  // skeleton columns touched by the block rows
    Eigen::MatrixXd a_is;            // interior rows x those skeleton columns
  };
  std::vector<BlockData> blocks(interior_blocks.size());
  // Scratch maps, reset after each block so the total cost stays linear.
  std::vector<Eigen::Index> local(static_cast<std::size_t>(n), -1);
  std::vector<Eigen::Index> col_pos(static_cast<std::size_t>(ns), -1);
  std::vector<Eigen::Index> row_pos(static_cast<std::size_t>(ns), -1);

  for (std::size_t e = 0; e < interior_blocks.size(); ++e) {
    const auto& idx = interior_blocks[e];
    const auto ni = static_cast<Eigen::Index>(idx.size());
    if (ni == 0) continue;
    for (Eigen::Index l = 0; l < ni; ++l) local[static_cast<std::size_t>(idx[static_cast<std::size_t>(l)])] = l;

    // Row side: A_II and A_IS.
    Eigen::MatrixXd a_ii = Eigen::MatrixXd::Zero(ni, ni);
    BlockData& bd = blocks[e];
    std::vector<Eigen::Triplet<double>> is_entries;
    for (Eigen::Index l = 0; l < ni; ++l) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, idx[static_cast<std::size_t>(l)]); it; ++it) {
        const auto j = static_cast<std::size_t>(it.col());
        if (owner[j] == static_cast<long>(e)) {
          a_ii(l, local[j]) += it.value();
        } else if (owner[j] >= 0) {
          if (it.value() != 0.0) throw std::invalid_argument("static_condense_solve: interior blocks are coupled");
        } else {
          const Eigen::Index s = skeleton_index[j];
          if (col_pos[static_cast<std::size_t>(s)] < 0) {
            col_pos[static_cast<std::size_t>(s)] = static_cast<Eigen::Index>(bd.cols.size());
            bd.cols.push_back(s);
          }
          is_entries.emplace_back(l, col_pos[static_cast<std::size_t>(s)], it.value());
        }
      }
    }
    bd.a_is = Eigen::MatrixXd::Zero(ni, static_cast<Eigen::Index>(bd.cols.size()));
    for (const auto& t : is_entries) bd.a_is(t.row(), t.col()) += t.value();

    // Column side: A_SI.
    std::vector<Eigen::Index> si_rows;
    std::vector<Eigen::Triplet<double>> si_entries;
    for (Eigen::Index l = 0; l < ni; ++l) {
      for (SparseMatrix::InnerIterator it(cols, idx[static_cast<std::size_t>(l)]); it; ++it) {
        const auto r = static_cast<std::size_t>(it.row());
        if (owner[r] >= 0) continue;
        const Eigen::Index s = skeleton_index[r];
        if (row_pos[static_cast<std::size_t>(s)] < 0) {
          row_pos[static_cast<std::size_t>(s)] = static_cast<Eigen::Index>(si_rows.size());
          si_rows.push_back(s);
        }
        si_entries.emplace_back(row_pos[static_cast<std::size_t>(s)], l, it.value());
      }
    }
    Eigen::MatrixXd a_si = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(si_rows.size()), ni);
    for (const auto& t : si_entries) a_si(t.row(), t.col()) += t.value();
    for (Eigen::Index i : idx) local[static_cast<std::size_t>(i)] = -1;
    for (Eigen::Index s : bd.cols) col_pos[static_cast<std::size_t>(s)] = -1;
    for (Eigen::Index s : si_rows) row_pos[static_cast<std::size_t>(s)] = -1;

    bd.lu.compute(a_ii);
    if (!(bd.lu.rcond() > 1e-15))
      throw SingularMatrixError("singular interior block in static condensation");

    Eigen::VectorXd b_i(ni);
    for (Eigen::Index l = 0; l < ni; ++l) b_i(l) = b(idx[static_cast<std::size_t>(l)]);
    const Eigen::MatrixXd schur = a_si * bd.lu.solve(bd.a_is);
    const Eigen::VectorXd schur_rhs = a_si * bd.lu.solve(b_i);
    for (std::size_t r = 0; r < si_rows.size(); ++r) {
      rhs(si_rows[r]) -= schur_rhs(static_cast<Eigen::Index>(r));
      for (std::size_t c = 0; c < bd.cols.size(); ++c) {
        trip.emplace_back(si_rows[r], bd.cols[c], -schur(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
      }
    }
  }

  SparseMatrix condensed(ns, ns);
  condensed.setFromTriplets(trip.begin(), trip.end());
  const Eigen::VectorXd xs = direct_solve(condensed, rhs);

  CondensedSolution out;
  out.condensed_dim = ns;
  out.x.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index s = skeleton_index[static_cast<std::size_t>(i)];
    if (s >= 0) out.x(i) = xs(s);
  }
  for (std::size_t e = 0; e < interior_blocks.size(); ++e) {
    const auto& idx = interior_blocks[e];
    if (idx.empty()) continue;
    const BlockData& bd = blocks[e];
    Eigen::VectorXd r(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t l = 0; l < idx.size(); ++l) r(static_cast<Eigen::Index>(l)) = b(idx[l]);
    Eigen::VectorXd xs_local(static_cast<Eigen::Index>(bd.cols.size()));
    for (std::size_t c = 0; c < bd.cols.size(); ++c) xs_local(static_cast<Eigen::Index>(c)) = xs(bd.cols[c]);
    const Eigen::VectorXd xi = bd.lu.solve(r - bd.a_is * xs_local);
    for (std::size_t l = 0; l < idx.size(); ++l) out.x(idx[l]) = xi(static_cast<Eigen::Index>(l));
  }
  return out;
}

}  // namespace mhdhho
