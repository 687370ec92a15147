#pragma once

#include <Eigen/Core>
#include <vector>

namespace stab {

// One monomial: coeff * prod_i x_i^exponents[i].
struct PolyTerm {
  std::vector<int> exponents;
  double coeff = 0.0;
};

// ============================================================================
// Multivariate polynomial with exact derivatives of every order.
//
// Terms are canonicalized on construction: duplicate exponent patterns are
// merged, zero coefficients dropped, and the list sorted lexicographically so
// that evaluation order (and therefore floating point rounding) is
// deterministic.  Total degree is capped (default 6).
// ============================================================================
class PolyLoss {
 public:
  static constexpr int kDefaultMaxDegree = 6;

  PolyLoss(int dim, std::vector<PolyTerm> terms, int max_degree = kDefaultMaxDegree);

  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] int max_degree() const noexcept { return max_degree_; }
  [[nodiscard]] int degree() const noexcept;  // max total degree over terms (0 if empty)
  [[nodiscard]] const std::vector<PolyTerm>& terms() const noexcept { return terms_; }

  [[nodiscard]] double value(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

  // Mixed partial d^|orders| / prod_i dx_i^orders[i], evaluated at x.  Exact.
  [[nodiscard]] double mixed_partial(const std::vector<int>& orders,
                                     const Eigen::VectorXd& x) const;

  [[nodiscard]] PolyLoss scaled(double factor) const;

  // Coefficient-wise average of same-dimension polynomials.
  [[nodiscard]] static PolyLoss mean(const std::vector<PolyLoss>& members);

 private:
  int dim_;
  int max_degree_;
  std::vector<PolyTerm> terms_;
};

}  // namespace stab
