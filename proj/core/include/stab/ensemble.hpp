#pragma once

#include <cstdint>
#include <vector>

#include "stab/dynamics.hpp"
#include "stab/loss.hpp"

namespace stab {

// ============================================================================
// Finite loss ensembles for minibatch SGD: the objective is the mean of n
// member losses and a batch is a size-B subset, so there are C(n, B) distinct
// batch losses.  Batches are enumerated once, in lexicographic order.
// ============================================================================

inline constexpr std::size_t kDefaultBatchCap = 1000000;

class LossEnsemble {
 public:
  LossEnsemble(std::vector<Loss> losses, int batch_size, Eigen::VectorXd x_star,
               std::size_t batch_cap = kDefaultBatchCap);

  [[nodiscard]] int dim() const { return static_cast<int>(x_star_.size()); }
  [[nodiscard]] int size() const { return static_cast<int>(losses_.size()); }
  [[nodiscard]] int batch_size() const { return batch_size_; }
  [[nodiscard]] const Eigen::VectorXd& x_star() const { return x_star_; }
  [[nodiscard]] const std::vector<Loss>& losses() const { return losses_; }
  [[nodiscard]] const std::vector<std::vector<int>>& batches() const { return batches_; }
  [[nodiscard]] std::size_t num_batches() const { return batches_.size(); }
  [[nodiscard]] const Loss& batch_loss(std::size_t b) const { return batch_losses_[b]; }
  [[nodiscard]] const Eigen::MatrixXd& batch_hessian(std::size_t b) const {
    return batch_hessians_[b];
  }
  // Mean over all members (the full-batch objective).
  [[nodiscard]] const Loss& mean() const { return mean_holder_.front(); }

 private:
  std::vector<Loss> losses_;
  int batch_size_;
  Eigen::VectorXd x_star_;
  std::vector<std::vector<int>> batches_;
  std::vector<Loss> batch_losses_;
  std::vector<Eigen::MatrixXd> batch_hessians_;  // at x_star
  std::vector<Loss> mean_holder_;
};

// Two-loss univariate ensemble {x^2/2 + x^4/4, (a/2) x^2} with B = 1; the
// "two-point" config preset.
[[nodiscard]] LossEnsemble make_ensemble_two_point(double a);

struct InterpolationCheck {
  bool interpolating = false;
  std::vector<double> grad_norms;  // per member, at x_star
  std::vector<double> min_eigs;    // per member Hessian
  double grad_tol = 0.0;
};

// A shared minimum: every member has (numerically) zero gradient and positive
// definite Hessian at x_star.
[[nodiscard]] InterpolationCheck check_interpolating(const LossEnsemble& ensemble,
                                                     double grad_tol = 1e-8);

// min over batches of 2 / lambda_max(batch Hessian): below this step size
// every batch map is a local contraction.
[[nodiscard]] double sufficient_threshold(const LossEnsemble& ensemble);

// Univariate mean-square stability limit: with member curvatures h_i, sample
// mean h and population variance s^2, and p = (n-B)/(B(n-1)), the second
// moment of the linearized iteration is bounded iff eta <= 2h/(h^2 + p s^2).
// Returns 2/h when n == B (full batch).
[[nodiscard]] double meansquare_threshold_univariate(const LossEnsemble& ensemble);

struct ThresholdReport {
  double eta_sufficient = 0.0;
  double eta_meansquare = 0.0;          // NaN for multivariate ensembles
  std::vector<double> batch_lambda_max;
  bool strict_gap = false;              // eta_meansquare > eta_sufficient
};

[[nodiscard]] ThresholdReport threshold_report(const LossEnsemble& ensemble);

struct WorstCaseBatchReport {
  std::vector<DivergenceVerdict> verdicts;     // per batch
  std::vector<std::size_t> superlinear_batches;
  bool any_superlinear = false;
};

// Runs the divergence-speed test on every batch loss at the given step size.
// One superlinear batch certifies that the SGD expectation E||x_t - x_star||
// cannot stay bounded at that step size.
[[nodiscard]] WorstCaseBatchReport worst_case_batch_report(const LossEnsemble& ensemble,
                                                           double eta,
                                                           const Eigen::VectorXd& x0,
                                                           long horizon);

}  // namespace stab
