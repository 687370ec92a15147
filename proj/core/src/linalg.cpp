#include "stab/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "stab/errors.hpp"
#include "stab/rng.hpp"

namespace stab {

SymEigen sym_eigen(const Eigen::MatrixXd& A, int dim_cap, double asym_tol) {
  if (A.rows() != A.cols()) throw Error(ErrorCode::DimensionMismatch, "sym_eigen: not square");
  if (A.rows() > dim_cap)
    throw Error(ErrorCode::SizeCapExceeded,
                "sym_eigen: dimension " + std::to_string(A.rows()) + " exceeds cap " +
                    std::to_string(dim_cap));
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
  if (asym > asym_tol * scale)
    throw Error(ErrorCode::NonSymmetricInput,
                "sym_eigen: asymmetry " + std::to_string(asym));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::NonConvergence, "sym_eigen: eigensolver failed");

  SymEigen out;
  out.eigenvalues = solver.eigenvalues();
  out.eigenvectors = solver.eigenvectors();
  // Deterministic sign: largest-magnitude entry (first on ties) made positive.
  for (int c = 0; c < out.eigenvectors.cols(); ++c) {
    int arg = 0;
    double best = std::abs(out.eigenvectors(0, c));
    for (int r = 1; r < out.eigenvectors.rows(); ++r) {
      const double a = std::abs(out.eigenvectors(r, c));
      if (a > best) {
        best = a;
        arg = r;
      }
    }
    if (out.eigenvectors(arg, c) < 0.0) out.eigenvectors.col(c) = -out.eigenvectors.col(c);
  }
  return out;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     std::size_t entry_cap) {
  const std::size_t rows = static_cast<std::size_t>(A.rows()) * B.rows();
  const std::size_t cols = static_cast<std::size_t>(A.cols()) * B.cols();
  if (rows * cols > entry_cap)
    throw Error(ErrorCode::SizeCapExceeded, "kron: result would have " +
                                                std::to_string(rows * cols) + " entries");
  Eigen::MatrixXd K(rows, cols);
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

Eigen::VectorXd kron_power(const Eigen::VectorXd& v, int k, std::size_t entry_cap) {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "kron_power: negative order");
  const std::size_t d = static_cast<std::size_t>(v.size());
  std::size_t n = 1;
  for (int i = 0; i < k; ++i) {
    if (d != 0 && n > entry_cap / d)
      throw Error(ErrorCode::SizeCapExceeded, "kron_power: result exceeds entry cap");
    n *= d;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Ones(1);
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd next(out.size() * v.size());
    for (Eigen::Index a = 0; a < out.size(); ++a)
      next.segment(a * v.size(), v.size()) = out[a] * v;
    out = std::move(next);
  }
  return out;
}

double operator_norm(const Eigen::MatrixXd& A, double rel_tol, int max_iters) {
  if (!A.allFinite()) throw Error(ErrorCode::NonFiniteValue, "operator_norm: non-finite input");
  if (A.size() == 0) return 0.0;

  // Deterministic pseudo-random start vector (fixed internal seed).
  SplitMix64 rng(0x9E3779B97F4A7C15ULL);
  Eigen::VectorXd v(A.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.next_double(-1.0, 1.0);
  const double vn = v.norm();
  if (vn == 0.0) return 0.0;
  v /= vn;

  double sigma = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd w = A * v;
    Eigen::VectorXd u = A.transpose() * w;  // (A^T A) v
    const double un = u.norm();
    const double sigma_new = std::sqrt(std::max(0.0, v.dot(u)));  // sqrt of Rayleigh quotient
    if (un == 0.0) return 0.0;  // v in the null space of A^T A: norm 0 matrix (v generic)
    if (it > 0 && std::abs(sigma_new - sigma) <= rel_tol * std::max(sigma_new, 1e-300))
      return sigma_new;
    sigma = sigma_new;
    v = u / un;
  }
  throw Error(ErrorCode::NonConvergence, "operator_norm: power iteration did not converge");
}

}  // namespace stab
