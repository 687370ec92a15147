#include "stab/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "stab/errors.hpp"

namespace stab {

Tensor3::Tensor3(int dim) : dim_(dim) {
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "tensor dimension must be >= 1");
  data_.assign(static_cast<std::size_t>(dim) * dim * dim, 0.0);
}

Eigen::VectorXd Tensor3::contract2(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  if (a.size() != dim_ || b.size() != dim_)
    throw Error(ErrorCode::DimensionMismatch, "Tensor3::contract2");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) {
      const double aij = a[i] * b[j];
      if (aij == 0.0) continue;
      for (int k = 0; k < dim_; ++k) w[k] += (*this)(i, j, k) * aij;
    }
  return w;
}

double Tensor3::contract3(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& c) const {
  if (c.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "Tensor3::contract3");
  return contract2(a, b).dot(c);
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Tensor3::max_asymmetry() const {
  double m = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k) {
        const double t = (*this)(i, j, k);
        m = std::max({m, std::abs(t - (*this)(i, k, j)), std::abs(t - (*this)(j, i, k)),
                      std::abs(t - (*this)(j, k, i)), std::abs(t - (*this)(k, i, j)),
                      std::abs(t - (*this)(k, j, i))});
      }
  return m;
}

Tensor4::Tensor4(int dim) : dim_(dim) {
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "tensor dimension must be >= 1");
  data_.assign(static_cast<std::size_t>(dim) * dim * dim * dim, 0.0);
}

double Tensor4::contract4(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& c, const Eigen::VectorXd& d) const {
  if (a.size() != dim_ || b.size() != dim_ || c.size() != dim_ || d.size() != dim_)
    throw Error(ErrorCode::DimensionMismatch, "Tensor4::contract4");
  double sum = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) {
      const double ab = a[i] * b[j];
      if (ab == 0.0) continue;
      for (int k = 0; k < dim_; ++k) {
        const double abc = ab * c[k];
        if (abc == 0.0) continue;
        for (int l = 0; l < dim_; ++l) sum += (*this)(i, j, k, l) * abc * d[l];
      }
    }
  return sum;
}

double Tensor4::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Tensor4::max_asymmetry() const {
  int idx[4];
  double m = 0.0;
  for (idx[0] = 0; idx[0] < dim_; ++idx[0])
    for (idx[1] = 0; idx[1] < dim_; ++idx[1])
      for (idx[2] = 0; idx[2] < dim_; ++idx[2])
        for (idx[3] = 0; idx[3] < dim_; ++idx[3]) {
          const double t = (*this)(idx[0], idx[1], idx[2], idx[3]);
          int p[4] = {idx[0], idx[1], idx[2], idx[3]};
          std::sort(p, p + 4);
          do {
            m = std::max(m, std::abs(t - (*this)(p[0], p[1], p[2], p[3])));
          } while (std::next_permutation(p, p + 4));
        }
  return m;
}

}  // namespace stab
