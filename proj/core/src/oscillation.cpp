#include "stab/oscillation.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "stab/errors.hpp"

namespace stab {

MinimumProfile profile_minimum(const Loss& loss, const Eigen::VectorXd& x_star,
                               double grad_tol, double gap_tol) {
  DerivativeTensors tensors = loss.derivative_tensors(x_star);
  const double gnorm = tensors.grad.norm();
  if (gnorm > grad_tol)
    throw Error(ErrorCode::GradientNotZero,
                "gradient norm " + std::to_string(gnorm) + " at the supplied point");

  SymEigen eigen = sym_eigen(tensors.hess);
  const int d = static_cast<int>(x_star.size());
  const double lambda_min = eigen.eigenvalues[0];
  if (lambda_min <= 0.0)
    throw Error(ErrorCode::HessianNotPD,
                "smallest Hessian eigenvalue " + std::to_string(lambda_min));

  MinimumProfile p{loss, x_star, std::move(tensors), std::move(eigen)};
  p.lambda_max = p.eigen.eigenvalues[d - 1];
  p.v_max = p.eigen.eigenvectors.col(d - 1);
  p.spectral_gap = d == 1 ? std::numeric_limits<double>::infinity()
                          : (p.lambda_max - p.eigen.eigenvalues[d - 2]) / p.lambda_max;
  p.multiplicity_ok = p.spectral_gap > gap_tol;
  p.eta_lin = 2.0 / p.lambda_max;
  return p;
}

Eigen::VectorXd q_vector(const MinimumProfile& profile) {
  const Eigen::VectorXd w = 3.0 * profile.tensors.d3.contract2(profile.v_max);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(profile.tensors.hess);
  if (ldlt.info() != Eigen::Success)
    throw Error(ErrorCode::SingularHessian, "q_vector: Hessian solve failed");
  return ldlt.solve(w);
}

double alternative_form(const MinimumProfile& profile) {
  const Eigen::VectorXd w = profile.tensors.d3.contract2(profile.v_max);
  double sum = 0.0;
  for (int i = 0; i < profile.eigen.eigenvalues.size(); ++i) {
    const double proj = profile.eigen.eigenvectors.col(i).dot(w);
    sum += proj * proj / profile.eigen.eigenvalues[i];
  }
  return 3.0 * sum;
}

double lyapunov_coefficient(const MinimumProfile& profile, double eta) {
  const Eigen::VectorXd q = q_vector(profile);
  const double lhs = profile.tensors.d3.contract3(profile.v_max, profile.v_max, q);
  const double rhs = profile.tensors.d4.contract4(profile.v_max);
  return eta / 6.0 * (lhs - rhs);
}

double lyapunov_coefficient(const MinimumProfile& profile) {
  return lyapunov_coefficient(profile, profile.eta_lin);
}

bool hypothesized_sufficient_check(const MinimumProfile& profile) {
  const double d3v = profile.tensors.d3.contract3(profile.v_max, profile.v_max, profile.v_max);
  const double rhs = profile.tensors.d4.contract4(profile.v_max);
  return 3.0 * d3v * d3v / profile.lambda_max > rhs || rhs < 0.0;
}

OscillationReport stable_oscillation_criterion(const MinimumProfile& profile) {
  OscillationReport r;
  r.eta = profile.eta_lin;
  r.q = q_vector(profile);
  r.lhs = profile.tensors.d3.contract3(profile.v_max, profile.v_max, r.q);
  r.rhs = profile.tensors.d4.contract4(profile.v_max);
  r.lhs_alt = alternative_form(profile);
  r.c0 = r.eta / 6.0 * (r.lhs - r.rhs);
  r.multiplicity_ok = profile.multiplicity_ok;
  r.degeneracy_tol = kDegeneracyTol * (1.0 + std::abs(r.rhs));
  r.hypothesized_sufficient = hypothesized_sufficient_check(profile);
  if (!profile.multiplicity_ok || std::abs(r.lhs - r.rhs) <= r.degeneracy_tol)
    r.verdict = CycleVerdict::Degenerate;
  else
    r.verdict = r.lhs > r.rhs ? CycleVerdict::StableCycle : CycleVerdict::UnstableCycle;
  return r;
}

}  // namespace stab
