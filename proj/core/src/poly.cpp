#include "stab/poly.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "stab/errors.hpp"

namespace stab {
namespace {

double pow_int(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

// Falling factorial e (e-1) ... (e-m+1); 1 for m == 0.
double falling(int e, int m) {
  double r = 1.0;
  for (int i = 0; i < m; ++i) r *= static_cast<double>(e - i);
  return r;
}

}  // namespace

PolyLoss::PolyLoss(int dim, std::vector<PolyTerm> terms, int max_degree)
    : dim_(dim), max_degree_(max_degree) {
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "polynomial dimension must be >= 1");
  if (max_degree < 0) throw Error(ErrorCode::InvalidArgument, "negative degree cap");
  std::map<std::vector<int>, double> merged;
  for (auto& t : terms) {
    if (static_cast<int>(t.exponents.size()) != dim)
      throw Error(ErrorCode::DimensionMismatch, "term exponent list does not match dimension");
    int total = 0;
    for (int e : t.exponents) {
      if (e < 0) throw Error(ErrorCode::InvalidArgument, "negative exponent");
      total += e;
    }
    if (total > max_degree_)
      throw Error(ErrorCode::DegreeCapExceeded,
                  "term degree " + std::to_string(total) + " exceeds cap " +
                      std::to_string(max_degree_));
    merged[t.exponents] += t.coeff;
  }
  for (auto& [exps, c] : merged)
    if (c != 0.0) terms_.push_back({exps, c});
}

int PolyLoss::degree() const noexcept {
  int deg = 0;
  for (const auto& t : terms_)
    deg = std::max(deg, std::accumulate(t.exponents.begin(), t.exponents.end(), 0));
  return deg;
}

double PolyLoss::value(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "value: point dimension");
  double sum = 0.0;
  for (const auto& t : terms_) {
    double m = t.coeff;
    for (int i = 0; i < dim_; ++i) m *= pow_int(x[i], t.exponents[i]);
    sum += m;
  }
  return sum;
}

Eigen::VectorXd PolyLoss::gradient(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "gradient: point dimension");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
  for (const auto& t : terms_) {
    for (int i = 0; i < dim_; ++i) {
      const int e = t.exponents[i];
      if (e == 0) continue;
      double m = t.coeff * e * pow_int(x[i], e - 1);
      for (int j = 0; j < dim_; ++j)
        if (j != i) m *= pow_int(x[j], t.exponents[j]);
      g[i] += m;
    }
  }
  return g;
}

double PolyLoss::mixed_partial(const std::vector<int>& orders, const Eigen::VectorXd& x) const {
  if (static_cast<int>(orders.size()) != dim_ || x.size() != dim_)
    throw Error(ErrorCode::DimensionMismatch, "mixed_partial: orders/point dimension");
  double sum = 0.0;
  for (const auto& t : terms_) {
    double m = t.coeff;
    for (int i = 0; i < dim_ && m != 0.0; ++i) {
      const int e = t.exponents[i], o = orders[i];
      if (e < o) {
        m = 0.0;
        break;
      }
      m *= falling(e, o) * pow_int(x[i], e - o);
    }
    sum += m;
  }
  return sum;
}

PolyLoss PolyLoss::scaled(double factor) const {
  std::vector<PolyTerm> terms = terms_;
  for (auto& t : terms) t.coeff *= factor;
  return PolyLoss(dim_, std::move(terms), max_degree_);
}

PolyLoss PolyLoss::mean(const std::vector<PolyLoss>& members) {
  if (members.empty()) throw Error(ErrorCode::InvalidArgument, "mean of zero polynomials");
  const int dim = members[0].dim();
  int cap = 0;
  const double w = 1.0 / static_cast<double>(members.size());
  std::vector<PolyTerm> terms;
  for (const auto& p : members) {
    if (p.dim() != dim) throw Error(ErrorCode::DimensionMismatch, "mean: mixed dimensions");
    cap = std::max(cap, p.max_degree());
    for (const auto& t : p.terms()) terms.push_back({t.exponents, t.coeff * w});
  }
  return PolyLoss(dim, std::move(terms), cap);
}

}  // namespace stab
