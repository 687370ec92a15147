#pragma once

#include "stab/linalg.hpp"
#include "stab/loss.hpp"
#include "stab/tensor.hpp"

namespace stab {

// ============================================================================
// Local analysis of gradient descent at the edge of stability: given a strict
// minimum, decide from third/fourth derivatives whether the first unstable
// step size produces a stable period-2 oscillation or an escape.
// ============================================================================

// Curvature profile of a loss at a strict local minimum.
struct MinimumProfile {
  Loss loss;
  Eigen::VectorXd x_star;
  DerivativeTensors tensors;
  SymEigen eigen;              // Hessian eigensystem, ascending
  double lambda_max = 0.0;     // top Hessian eigenvalue
  Eigen::VectorXd v_max;       // unit top eigenvector (deterministic sign)
  double spectral_gap = 0.0;   // (lambda_max - second) / lambda_max; +inf when d == 1
  bool multiplicity_ok = false;
  double eta_lin = 0.0;        // 2 / lambda_max, the linear stability limit
};

// Validates the minimum (gradient ~ 0, Hessian positive definite) and builds
// the profile.  Throws GradientNotZero / HessianNotPD.
[[nodiscard]] MinimumProfile profile_minimum(const Loss& loss, const Eigen::VectorXd& x_star,
                                             double grad_tol = 1e-8, double gap_tol = 1e-6);

// q = H^{-1} * 3 D3L[v_max, v_max, .], the curvature-adjusted response of the
// third derivative along the top eigenvector.
[[nodiscard]] Eigen::VectorXd q_vector(const MinimumProfile& profile);

enum class CycleVerdict { StableCycle, UnstableCycle, Degenerate };

[[nodiscard]] constexpr const char* to_string(CycleVerdict v) {
  switch (v) {
    case CycleVerdict::StableCycle: return "StableCycle";
    case CycleVerdict::UnstableCycle: return "UnstableCycle";
    case CycleVerdict::Degenerate: return "Degenerate";
  }
  return "Unknown";
}

// Outcome of the sharpness test at eta = eta_lin.  The oscillation is a
// stable cycle iff lhs > rhs, where
//   lhs = D3L[v_max, v_max, q]      (computed through the Hessian solve)
//   rhs = D4L[v_max, v_max, v_max, v_max]
// lhs_alt re-derives lhs in the eigenbasis as a consistency check, and c0 is
// the cubic coefficient of the reduced one-dimensional return map (positive
// for a stable cycle).
struct OscillationReport {
  double eta = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_alt = 0.0;
  double c0 = 0.0;
  CycleVerdict verdict = CycleVerdict::Degenerate;
  bool multiplicity_ok = false;
  double degeneracy_tol = 0.0;
  bool hypothesized_sufficient = false;
  Eigen::VectorXd q;
};

// Near-equality band reported as Degenerate: |lhs - rhs| <= 1e-9 * (1 + |rhs|).
inline constexpr double kDegeneracyTol = 1e-9;

[[nodiscard]] OscillationReport stable_oscillation_criterion(const MinimumProfile& profile);

// lhs rewritten as 3 sum_i D3L[v_max, v_max, v_i]^2 / lambda_i over the
// Hessian eigensystem; equal to lhs up to rounding.
[[nodiscard]] double alternative_form(const MinimumProfile& profile);

// First Lyapunov-style coefficient of the reduced return map at step size
// eta: c0 = (eta/6) * (lhs - rhs).  Defaults to eta = eta_lin.
[[nodiscard]] double lyapunov_coefficient(const MinimumProfile& profile, double eta);
[[nodiscard]] double lyapunov_coefficient(const MinimumProfile& profile);

// Easier sufficient check: 3 (D3L[v,v,v])^2 / lambda_max > rhs, or rhs < 0.
// Implies a stable cycle but is not necessary.
[[nodiscard]] bool hypothesized_sufficient_check(const MinimumProfile& profile);

}  // namespace stab
