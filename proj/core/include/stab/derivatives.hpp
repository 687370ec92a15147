#pragma once

#include <functional>

#include "stab/poly.hpp"
#include "stab/tensor.hpp"

namespace stab {

// Dense order-4 tensors are only stored for small dimensions.
inline constexpr int kMaxTensorDim = 8;

// Exact derivative tensors (orders 1..4) of a polynomial loss.
[[nodiscard]] DerivativeTensors poly_derivative_tensors(const PolyLoss& loss,
                                                        const Eigen::VectorXd& x);

// Central finite-difference derivative tensors (orders 1..4) of a black-box
// scalar function.  The order-k tensor uses step h_k = 1e-16^(1/(k+2)), the
// standard truncation/rounding balance for second-order-accurate stencils.
// Entries are computed once per index multiset and broadcast to all
// permutations, so the result is exactly symmetric.
[[nodiscard]] DerivativeTensors fd_derivative_tensors(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x);

[[nodiscard]] double fd_step(int order);

// Central-difference mixed partial of per-variable orders `orders` (order-k
// stencil step chosen from the total order).  Building block of
// fd_derivative_tensors, exposed for tests.
[[nodiscard]] double fd_mixed_partial(const std::function<double(const Eigen::VectorXd&)>& f,
                                      const Eigen::VectorXd& x,
                                      const std::vector<int>& orders);

// Central-difference gradient with the order-1 step.
[[nodiscard]] Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x);

}  // namespace stab
