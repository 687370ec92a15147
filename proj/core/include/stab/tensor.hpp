#pragma once

#include <Eigen/Core>
#include <vector>

namespace stab {

// ============================================================================
// Dense symmetric order-3 / order-4 tensors for third and fourth derivatives.
// Dimensions stay small (d <= 8), so flat dense storage is fine.
// ============================================================================

class Tensor3 {
 public:
  Tensor3() : dim_(0) {}
  explicit Tensor3(int dim);

  [[nodiscard]] int dim() const noexcept { return dim_; }

  double& operator()(int i, int j, int k) { return data_[(i * dim_ + j) * dim_ + k]; }
  double operator()(int i, int j, int k) const { return data_[(i * dim_ + j) * dim_ + k]; }

  // w_k = sum_ij T_ijk a_i b_j
  [[nodiscard]] Eigen::VectorXd contract2(const Eigen::VectorXd& a,
                                          const Eigen::VectorXd& b) const;
  [[nodiscard]] Eigen::VectorXd contract2(const Eigen::VectorXd& v) const {
    return contract2(v, v);
  }
  // sum_ijk T_ijk a_i b_j c_k
  [[nodiscard]] double contract3(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                 const Eigen::VectorXd& c) const;

  [[nodiscard]] double max_abs() const;
  [[nodiscard]] double max_asymmetry() const;  // max |T_perm - T| over index permutations

 private:
  int dim_;
  std::vector<double> data_;
};

class Tensor4 {
 public:
  Tensor4() : dim_(0) {}
  explicit Tensor4(int dim);

  [[nodiscard]] int dim() const noexcept { return dim_; }

  double& operator()(int i, int j, int k, int l) {
    return data_[((i * dim_ + j) * dim_ + k) * dim_ + l];
  }
  double operator()(int i, int j, int k, int l) const {
    return data_[((i * dim_ + j) * dim_ + k) * dim_ + l];
  }

  // sum T_ijkl a_i b_j c_k d_l
  [[nodiscard]] double contract4(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                 const Eigen::VectorXd& c, const Eigen::VectorXd& d) const;
  [[nodiscard]] double contract4(const Eigen::VectorXd& v) const {
    return contract4(v, v, v, v);
  }

  [[nodiscard]] double max_abs() const;
  [[nodiscard]] double max_asymmetry() const;

 private:
  int dim_;
  std::vector<double> data_;
};

enum class DerivativeSource { Analytic, FiniteDifference };

[[nodiscard]] constexpr const char* to_string(DerivativeSource s) {
  return s == DerivativeSource::Analytic ? "analytic" : "finite_difference";
}

// Derivatives of a scalar loss at a point, orders 1..4.
struct DerivativeTensors {
  Eigen::VectorXd point;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  Tensor3 d3;
  Tensor4 d4;
  DerivativeSource source = DerivativeSource::Analytic;

  [[nodiscard]] int dim() const { return static_cast<int>(point.size()); }
};

}  // namespace stab
