#pragma once

#include <functional>
#include <optional>
#include <variant>

#include "stab/derivatives.hpp"
#include "stab/poly.hpp"

namespace stab {

// Black-box scalar loss.  Gradient falls back to central differences when no
// analytic gradient is supplied; derivative tensors always come from finite
// differences.
struct FunctionLoss {
  int dim = 0;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;  // optional
};

// ============================================================================
// Value-semantic loss: either a polynomial (exact derivatives) or a black-box
// function (finite-difference derivatives, flagged as such).
// ============================================================================
class Loss {
 public:
  Loss(PolyLoss poly);          // NOLINT(google-explicit-constructor)
  Loss(FunctionLoss fn);        // NOLINT(google-explicit-constructor)

  [[nodiscard]] int dim() const;
  [[nodiscard]] double value(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  [[nodiscard]] DerivativeTensors derivative_tensors(const Eigen::VectorXd& x) const;

  [[nodiscard]] bool analytic() const;
  [[nodiscard]] const PolyLoss* poly() const;  // nullptr for black-box losses

 private:
  std::variant<PolyLoss, FunctionLoss> impl_;
};

// Pointwise mean of losses.  Polynomial inputs average exactly (coefficient
// mean); any black-box member makes the result a black-box loss.
[[nodiscard]] Loss mean_loss(const std::vector<Loss>& losses,
                             const std::vector<int>& indices);

}  // namespace stab
