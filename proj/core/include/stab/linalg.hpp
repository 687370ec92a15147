#pragma once

#include <Eigen/Core>
#include <cstddef>

namespace stab {

// ============================================================================
// Small dense linear algebra helpers shared across the library.
// ============================================================================

// Eigendecomposition of a symmetric matrix.  Eigenvalues ascending;
// eigenvector columns orthonormal.  Sign convention: each column is flipped
// so its largest-magnitude entry (first such index on ties) is positive,
// which makes decompositions reproducible across runs and platforms.
struct SymEigen {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

[[nodiscard]] SymEigen sym_eigen(const Eigen::MatrixXd& A, int dim_cap = 64,
                                 double asym_tol = 1e-12);

// Kronecker product; result entry count capped.
[[nodiscard]] Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                   std::size_t entry_cap = 1000000);

// k-fold Kronecker power v^(x)k of a vector, entry (i1..ik) = v_i1 * ... * v_ik
// in mixed-radix order with i1 most significant.  k = 0 gives the scalar 1.
[[nodiscard]] Eigen::VectorXd kron_power(const Eigen::VectorXd& v, int k,
                                         std::size_t entry_cap = 1000000);

// Largest singular value via power iteration on A^T A with a deterministic
// seeded start vector.  Throws on non-convergence.
[[nodiscard]] double operator_norm(const Eigen::MatrixXd& A, double rel_tol = 1e-10,
                                   int max_iters = 10000);

}  // namespace stab
