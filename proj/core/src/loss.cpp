#include "stab/loss.hpp"

#include <utility>

#include "stab/errors.hpp"

namespace stab {

Loss::Loss(PolyLoss poly) : impl_(std::move(poly)) {}

Loss::Loss(FunctionLoss fn) : impl_(std::move(fn)) {
  const auto& f = std::get<FunctionLoss>(impl_);
  if (f.dim < 1 || !f.value)
    throw Error(ErrorCode::InvalidArgument, "black-box loss needs a dimension and a value fn");
}

int Loss::dim() const {
  if (const auto* p = std::get_if<PolyLoss>(&impl_)) return p->dim();
  return std::get<FunctionLoss>(impl_).dim;
}

double Loss::value(const Eigen::VectorXd& x) const {
  if (const auto* p = std::get_if<PolyLoss>(&impl_)) return p->value(x);
  return std::get<FunctionLoss>(impl_).value(x);
}

Eigen::VectorXd Loss::gradient(const Eigen::VectorXd& x) const {
  if (const auto* p = std::get_if<PolyLoss>(&impl_)) return p->gradient(x);
  const auto& f = std::get<FunctionLoss>(impl_);
  if (f.gradient) return f.gradient(x);
  return fd_gradient(f.value, x);
}

DerivativeTensors Loss::derivative_tensors(const Eigen::VectorXd& x) const {
  if (const auto* p = std::get_if<PolyLoss>(&impl_)) return poly_derivative_tensors(*p, x);
  return fd_derivative_tensors(std::get<FunctionLoss>(impl_).value, x);
}

bool Loss::analytic() const { return std::holds_alternative<PolyLoss>(impl_); }

const PolyLoss* Loss::poly() const { return std::get_if<PolyLoss>(&impl_); }

Loss mean_loss(const std::vector<Loss>& losses, const std::vector<int>& indices) {
  if (indices.empty()) throw Error(ErrorCode::InvalidArgument, "mean_loss: empty batch");
  bool all_poly = true;
  for (int i : indices) {
    if (i < 0 || i >= static_cast<int>(losses.size()))
      throw Error(ErrorCode::InvalidArgument, "mean_loss: index out of range");
    all_poly = all_poly && losses[i].analytic();
  }
  if (all_poly) {
    std::vector<PolyLoss> members;
    members.reserve(indices.size());
    for (int i : indices) members.push_back(*losses[i].poly());
    return Loss(PolyLoss::mean(members));
  }
  const int dim = losses[indices[0]].dim();
  const double w = 1.0 / static_cast<double>(indices.size());
  // Copy what the closures need; the ensemble owns the member losses.
  std::vector<Loss> members;
  members.reserve(indices.size());
  for (int i : indices) members.push_back(losses[i]);
  FunctionLoss f;
  f.dim = dim;
  f.value = [members, w](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (const auto& m : members) s += m.value(x);
    return s * w;
  };
  f.gradient = [members, w, dim](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    for (const auto& m : members) g += m.gradient(x);
    return Eigen::VectorXd(g * w);
  };
  return Loss(std::move(f));
}

}  // namespace stab
