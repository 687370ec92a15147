#include "stab/derivatives.hpp"

#include <array>
#include <cmath>

#include "stab/errors.hpp"

namespace stab {
namespace {

void check_dim(int dim) {
  if (dim > kMaxTensorDim)
    throw Error(ErrorCode::SizeCapExceeded,
                "order-4 tensors are limited to dimension " + std::to_string(kMaxTensorDim));
}

// Mixed partial of a polynomial for an index multiset given as counts.
std::vector<int> counts_of(const std::vector<int>& indices, int dim) {
  std::vector<int> c(dim, 0);
  for (int i : indices) ++c[i];
  return c;
}

// --------------------------------------------------------------------------
// Central-difference stencils, second-order accurate.
// --------------------------------------------------------------------------

struct StencilPoint {
  std::vector<int> offset;  // per-variable multiples of h
  double weight;
};

// 1-D stencil for the m-th derivative (weights exclude the 1/h^m factor).
const std::vector<std::pair<int, double>>& stencil_1d(int m) {
  static const std::vector<std::pair<int, double>> s1{{-1, -0.5}, {1, 0.5}};
  static const std::vector<std::pair<int, double>> s2{{-1, 1.0}, {0, -2.0}, {1, 1.0}};
  static const std::vector<std::pair<int, double>> s3{
      {-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}};
  static const std::vector<std::pair<int, double>> s4{
      {-2, 1.0}, {-1, -4.0}, {0, 6.0}, {1, -4.0}, {2, 1.0}};
  switch (m) {
    case 1: return s1;
    case 2: return s2;
    case 3: return s3;
    case 4: return s4;
    default: throw Error(ErrorCode::InvalidArgument, "stencil order must be 1..4");
  }
}

// Tensor-product stencil for per-variable derivative orders.
std::vector<StencilPoint> product_stencil(const std::vector<int>& orders) {
  const int dim = static_cast<int>(orders.size());
  std::vector<StencilPoint> pts{{std::vector<int>(dim, 0), 1.0}};
  for (int var = 0; var < dim; ++var) {
    const int m = orders[var];
    if (m == 0) continue;
    const auto& s = stencil_1d(m);
    std::vector<StencilPoint> next;
    next.reserve(pts.size() * s.size());
    for (const auto& p : pts)
      for (const auto& [off, w] : s) {
        StencilPoint q = p;
        q.offset[var] += off;
        q.weight *= w;
        next.push_back(std::move(q));
      }
    pts = std::move(next);
  }
  return pts;
}

}  // namespace

double fd_step(int order) { return std::pow(1e-16, 1.0 / (order + 2)); }

double fd_mixed_partial(const std::function<double(const Eigen::VectorXd&)>& f,
                        const Eigen::VectorXd& x, const std::vector<int>& orders) {
  if (static_cast<int>(orders.size()) != x.size())
    throw Error(ErrorCode::DimensionMismatch, "fd_mixed_partial: orders/point dimension");
  int total = 0;
  for (int m : orders) total += m;
  if (total < 1 || total > 4)
    throw Error(ErrorCode::InvalidArgument, "fd_mixed_partial supports total orders 1..4");
  const double h = fd_step(total);
  double sum = 0.0;
  for (const auto& p : product_stencil(orders)) {
    Eigen::VectorXd y = x;
    for (int i = 0; i < x.size(); ++i) y[i] += p.offset[i] * h;
    sum += p.weight * f(y);
  }
  return sum / std::pow(h, total);
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x) {
  const double h = fd_step(1);
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

DerivativeTensors poly_derivative_tensors(const PolyLoss& loss, const Eigen::VectorXd& x) {
  const int d = loss.dim();
  check_dim(d);
  if (x.size() != d) throw Error(ErrorCode::DimensionMismatch, "poly_derivative_tensors");

  DerivativeTensors out;
  out.point = x;
  out.source = DerivativeSource::Analytic;
  out.grad = loss.gradient(x);
  out.hess = Eigen::MatrixXd::Zero(d, d);
  out.d3 = Tensor3(d);
  out.d4 = Tensor4(d);

  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const double v = loss.mixed_partial(counts_of({i, j}, d), x);
      out.hess(i, j) = out.hess(j, i) = v;
    }
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      for (int k = j; k < d; ++k) {
        const double v = loss.mixed_partial(counts_of({i, j, k}, d), x);
        int p[3] = {i, j, k};
        std::sort(p, p + 3);
        do {
          out.d3(p[0], p[1], p[2]) = v;
        } while (std::next_permutation(p, p + 3));
      }
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      for (int k = j; k < d; ++k)
        for (int l = k; l < d; ++l) {
          const double v = loss.mixed_partial(counts_of({i, j, k, l}, d), x);
          int p[4] = {i, j, k, l};
          std::sort(p, p + 4);
          do {
            out.d4(p[0], p[1], p[2], p[3]) = v;
          } while (std::next_permutation(p, p + 4));
        }
  return out;
}

DerivativeTensors fd_derivative_tensors(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x) {
  const int d = static_cast<int>(x.size());
  check_dim(d);

  DerivativeTensors out;
  out.point = x;
  out.source = DerivativeSource::FiniteDifference;
  out.grad = fd_gradient(f, x);
  out.hess = Eigen::MatrixXd::Zero(d, d);
  out.d3 = Tensor3(d);
  out.d4 = Tensor4(d);

  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const double v = fd_mixed_partial(f, x, counts_of({i, j}, d));
      out.hess(i, j) = out.hess(j, i) = v;
    }
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      for (int k = j; k < d; ++k) {
        const double v = fd_mixed_partial(f, x, counts_of({i, j, k}, d));
        int p[3] = {i, j, k};
        std::sort(p, p + 3);
        do {
          out.d3(p[0], p[1], p[2]) = v;
        } while (std::next_permutation(p, p + 3));
      }
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      for (int k = j; k < d; ++k)
        for (int l = k; l < d; ++l) {
          const double v = fd_mixed_partial(f, x, counts_of({i, j, k, l}, d));
          int p[4] = {i, j, k, l};
          std::sort(p, p + 4);
          do {
            out.d4(p[0], p[1], p[2], p[3]) = v;
          } while (std::next_permutation(p, p + 4));
        }
  return out;
}

}  // namespace stab
