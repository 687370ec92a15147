#include "stab/ensemble.hpp"

#include <cmath>
#include <limits>

#include "stab/errors.hpp"
#include "stab/linalg.hpp"
#include "stab/presets.hpp"

namespace stab {
namespace {

// C(n, b), saturating at cap + 1.  The running product r = C(n - b + i, i)
// stays integral at every step of the multiplicative recurrence.
std::size_t binomial_capped(int n, int b, std::size_t cap) {
  if (b < 0 || b > n) return 0;
  b = std::min(b, n - b);
  std::size_t r = 1;
  for (int i = 1; i <= b; ++i) {
    if (r > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(n)) {
      return cap + 1;
    }
    r = r * static_cast<std::size_t>(n - b + i) / static_cast<std::size_t>(i);
    if (r > cap) return cap + 1;
  }
  return r;
}

std::vector<std::vector<int>> all_combinations(int n, int b) {
  std::vector<std::vector<int>> out;
  std::vector<int> idx(b);
  for (int i = 0; i < b; ++i) idx[i] = i;
  for (;;) {
    out.push_back(idx);
    int i = b - 1;
    while (i >= 0 && idx[i] == n - b + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < b; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

double top_eigenvalue(const Eigen::MatrixXd& H) {
  const SymEigen e = sym_eigen(H);
  return e.eigenvalues[e.eigenvalues.size() - 1];
}

}  // namespace

LossEnsemble::LossEnsemble(std::vector<Loss> losses, int batch_size, Eigen::VectorXd x_star,
                           std::size_t batch_cap)
    : losses_(std::move(losses)), batch_size_(batch_size), x_star_(std::move(x_star)) {
  const int n = static_cast<int>(losses_.size());
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "ensemble needs at least one loss");
  if (batch_size_ < 1 || batch_size_ > n)
    throw Error(ErrorCode::InvalidArgument, "batch size must lie in [1, n]");
  const int d = static_cast<int>(x_star_.size());
  for (const auto& l : losses_)
    if (l.dim() != d)
      throw Error(ErrorCode::DimensionMismatch, "ensemble member dimension mismatch");

  if (binomial_capped(n, batch_size_, batch_cap) > batch_cap)
    throw Error(ErrorCode::EnumerationCapExceeded,
                "C(n, B) exceeds the batch enumeration cap of " + std::to_string(batch_cap));
  batches_ = all_combinations(n, batch_size_);

  std::vector<Eigen::MatrixXd> member_hessians;
  member_hessians.reserve(losses_.size());
  for (const auto& l : losses_) member_hessians.push_back(l.derivative_tensors(x_star_).hess);

  batch_losses_.reserve(batches_.size());
  batch_hessians_.reserve(batches_.size());
  for (const auto& batch : batches_) {
    batch_losses_.push_back(mean_loss(losses_, batch));
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, d);
    for (int i : batch) H += member_hessians[i];
    batch_hessians_.push_back(H / static_cast<double>(batch.size()));
  }

  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  mean_holder_.push_back(mean_loss(losses_, all));
}

LossEnsemble make_ensemble_two_point(double a) {
  std::vector<Loss> losses{Loss(preset_f_plus()), Loss(preset_f_a(a))};
  return LossEnsemble(std::move(losses), 1, Eigen::VectorXd::Zero(1));
}

InterpolationCheck check_interpolating(const LossEnsemble& ensemble, double grad_tol) {
  InterpolationCheck chk;
  chk.grad_tol = grad_tol;
  chk.interpolating = true;
  for (const auto& l : ensemble.losses()) {
    const DerivativeTensors t = l.derivative_tensors(ensemble.x_star());
    chk.grad_norms.push_back(t.grad.norm());
    chk.min_eigs.push_back(sym_eigen(t.hess).eigenvalues[0]);
    chk.interpolating = chk.interpolating && chk.grad_norms.back() <= grad_tol &&
                        chk.min_eigs.back() > 0.0;
  }
  return chk;
}

double sufficient_threshold(const LossEnsemble& ensemble) {
  double eta = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < ensemble.num_batches(); ++b) {
    const double lam = top_eigenvalue(ensemble.batch_hessian(b));
    if (lam <= 0.0)
      throw Error(ErrorCode::HessianNotPD, "batch Hessian with non-positive top eigenvalue");
    eta = std::min(eta, 2.0 / lam);
  }
  return eta;
}

double meansquare_threshold_univariate(const LossEnsemble& ensemble) {
  if (ensemble.dim() != 1)
    throw Error(ErrorCode::InvalidArgument, "mean-square threshold is univariate");
  const int n = ensemble.size();
  const int B = ensemble.batch_size();
  std::vector<double> h;
  h.reserve(n);
  for (const auto& l : ensemble.losses())
    h.push_back(l.derivative_tensors(ensemble.x_star()).hess(0, 0));
  double hbar = 0.0;
  for (double v : h) hbar += v;
  hbar /= n;
  if (hbar <= 0.0) throw Error(ErrorCode::HessianNotPD, "mean curvature not positive");
  if (n == B) return 2.0 / hbar;
  double s2 = 0.0;
  for (double v : h) s2 += (v - hbar) * (v - hbar);
  s2 /= n;  // population variance
  const double p = static_cast<double>(n - B) / (static_cast<double>(B) * (n - 1));
  return 2.0 * hbar / (hbar * hbar + p * s2);
}

ThresholdReport threshold_report(const LossEnsemble& ensemble) {
  ThresholdReport rep;
  rep.eta_sufficient = sufficient_threshold(ensemble);
  for (std::size_t b = 0; b < ensemble.num_batches(); ++b)
    rep.batch_lambda_max.push_back(top_eigenvalue(ensemble.batch_hessian(b)));
  if (ensemble.dim() == 1) {
    rep.eta_meansquare = meansquare_threshold_univariate(ensemble);
    rep.strict_gap = rep.eta_meansquare > rep.eta_sufficient;
  } else {
    rep.eta_meansquare = std::numeric_limits<double>::quiet_NaN();
    rep.strict_gap = false;
  }
  return rep;
}

WorstCaseBatchReport worst_case_batch_report(const LossEnsemble& ensemble, double eta,
                                             const Eigen::VectorXd& x0, long horizon) {
  WorstCaseBatchReport rep;
  for (std::size_t b = 0; b < ensemble.num_batches(); ++b) {
    const SuperlinearReport r =
        superlinear_divergence_test(ensemble.batch_loss(b), x0, ensemble.x_star(), eta, horizon);
    rep.verdicts.push_back(r.verdict);
    if (r.verdict == DivergenceVerdict::Superlinear) {
      rep.superlinear_batches.push_back(b);
      rep.any_superlinear = true;
    }
  }
  return rep;
}

}  // namespace stab
