#include "stab/moment_operator.hpp"

#include <cmath>
#include <limits>

#include "stab/errors.hpp"

namespace stab {
namespace {

std::size_t pow_size(int d, int p) {
  std::size_t r = 1;
  for (int i = 0; i < p; ++i) r *= static_cast<std::size_t>(d);
  return r;
}

// Column c of a d x d^p derivative matrix corresponds to the multi-index
// (j_1..j_p) in mixed-radix order, j_1 most significant (matches kron_power).
std::vector<int> column_orders(std::size_t c, int d, int p, int extra_index) {
  std::vector<int> orders(d, 0);
  ++orders[extra_index];
  for (int pos = p - 1; pos >= 0; --pos) {
    ++orders[static_cast<int>(c % d)];
    c /= d;
  }
  return orders;
}

double factorial(int p) {
  double f = 1.0;
  for (int i = 2; i <= p; ++i) f *= i;
  return f;
}

}  // namespace

BatchMapDerivatives batch_map_derivatives(const LossEnsemble& ensemble, double eta) {
  BatchMapDerivatives out;
  out.eta = eta;
  const int d = ensemble.dim();
  out.dim = d;

  std::vector<int> order_by_batch(ensemble.num_batches());
  for (std::size_t b = 0; b < ensemble.num_batches(); ++b) {
    const Loss& l = ensemble.batch_loss(b);
    if (const PolyLoss* p = l.poly()) {
      order_by_batch[b] = std::max(1, p->degree() - 1);
    } else {
      order_by_batch[b] = 3;  // finite differences stop at fourth loss derivatives
      out.certified = false;
    }
    out.max_order = std::max(out.max_order, order_by_batch[b]);
  }
  if (pow_size(d, out.max_order + 1) > 1000000)
    throw Error(ErrorCode::SizeCapExceeded, "batch map derivative tensors too large");

  const Eigen::VectorXd& xs = ensemble.x_star();
  out.Y.resize(ensemble.num_batches());
  for (std::size_t b = 0; b < ensemble.num_batches(); ++b) {
    auto& Yb = out.Y[b];
    Yb.reserve(out.max_order);
    Yb.push_back(Eigen::MatrixXd::Identity(d, d) - eta * ensemble.batch_hessian(b));
    const Loss& l = ensemble.batch_loss(b);
    const PolyLoss* poly = l.poly();
    DerivativeTensors fd;
    if (!poly) fd = l.derivative_tensors(xs);
    for (int p = 2; p <= out.max_order; ++p) {
      const std::size_t cols = pow_size(d, p);
      Eigen::MatrixXd Yp = Eigen::MatrixXd::Zero(d, cols);
      const double scale = -eta / factorial(p);
      if (p > order_by_batch[b]) {
        Yb.push_back(std::move(Yp));  // higher order than this batch needs: zero
        continue;
      }
      for (int i = 0; i < d; ++i)
        for (std::size_t c = 0; c < cols; ++c) {
          double deriv;
          if (poly) {
            deriv = poly->mixed_partial(column_orders(c, d, p, i), xs);
          } else if (p == 2) {
            const std::size_t j1 = c / d, j2 = c % d;
            deriv = fd.d3(i, static_cast<int>(j1), static_cast<int>(j2));
          } else {  // p == 3
            const std::size_t j1 = c / (d * d), j2 = (c / d) % d, j3 = c % d;
            deriv = fd.d4(i, static_cast<int>(j1), static_cast<int>(j2),
                          static_cast<int>(j3));
          }
          Yp(i, static_cast<Eigen::Index>(c)) = scale * deriv;
        }
      Yb.push_back(std::move(Yp));
    }
  }
  return out;
}

std::vector<std::vector<int>> compositions(int p, int k) {
  if (k < 1 || p < k) return {};
  std::vector<std::vector<int>> out;
  // Lexicographic enumeration of (k1..kk), ki >= 1, sum = p.
  std::vector<int> cur(k, 1);
  auto rec = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == k - 1) {
      cur[pos] = remaining;
      out.push_back(cur);
      return;
    }
    for (int v = 1; v <= remaining - (k - 1 - pos); ++v) {
      cur[pos] = v;
      self(self, pos + 1, remaining - v);
    }
  };
  rec(rec, 0, p);
  return out;
}

Eigen::MatrixXd assemble_block(const BatchMapDerivatives& derivs, int k, int p) {
  if (k < 1 || p < k)
    throw Error(ErrorCode::InvalidArgument, "assemble_block requires 1 <= k <= p");
  const int d = derivs.dim;
  const std::size_t rows = pow_size(d, k), cols = pow_size(d, p);
  if (rows * cols > 8000000)
    throw Error(ErrorCode::SizeCapExceeded, "assemble_block: block too large");
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(rows, cols);
  if (p > k * derivs.max_order) return sum;  // every composition has a vanishing factor

  const auto comps = compositions(p, k);
  for (const auto& Yb : derivs.Y) {
    for (const auto& comp : comps) {
      bool zero = false;
      for (int part : comp)
        if (part > derivs.max_order) {
          zero = true;
          break;
        }
      if (zero) continue;
      Eigen::MatrixXd term = Yb[comp[0] - 1];
      for (int i = 1; i < k; ++i) term = kron(term, Yb[comp[i] - 1], 8000000);
      sum += term;
    }
  }
  return sum / static_cast<double>(derivs.Y.size());
}

MomentOperatorTruncation assemble_truncation(const BatchMapDerivatives& derivs, int K,
                                             double rho, std::size_t dim_cap) {
  if (K < 1) throw Error(ErrorCode::InvalidArgument, "truncation order K must be >= 1");
  if (rho <= 0.0) throw Error(ErrorCode::InvalidArgument, "rho must be > 0");
  const int d = derivs.dim;
  std::size_t total = 0;
  for (int k = 1; k <= K; ++k) {
    total += pow_size(d, k);
    if (total > dim_cap)
      throw Error(ErrorCode::SizeCapExceeded,
                  "truncation dimension exceeds cap " + std::to_string(dim_cap));
  }

  MomentOperatorTruncation tr;
  tr.K = K;
  tr.rho = rho;
  tr.dim = d;
  tr.blocks.assign(K, std::vector<Eigen::MatrixXd>(K));
  tr.dense = Eigen::MatrixXd::Zero(total, total);

  std::vector<std::size_t> offset(K + 1, 0);
  for (int k = 1; k <= K; ++k) offset[k] = offset[k - 1] + pow_size(d, k);

  std::vector<std::vector<double>> norms(K, std::vector<double>(K, 0.0));
  for (int k = 1; k <= K; ++k)
    for (int p = k; p <= K; ++p) {
      Eigen::MatrixXd block = std::pow(rho, p - k) * assemble_block(derivs, k, p);
      norms[k - 1][p - 1] = operator_norm(block);
      tr.dense.block(offset[k - 1], offset[p - 1], pow_size(d, k), pow_size(d, p)) = block;
      tr.blocks[k - 1][p - 1] = std::move(block);
    }

  tr.alpha = 0.0;
  for (int p = 1; p <= K; ++p) {
    double col = 0.0;
    for (int k = 1; k <= p; ++k) col += norms[k - 1][p - 1];
    tr.alpha = std::max(tr.alpha, col);
  }
  tr.beta = 0.0;
  for (int k = 1; k <= K; ++k) {
    double row = 0.0;
    for (int p = k; p <= K; ++p) row += norms[k - 1][p - 1];
    tr.beta = std::max(tr.beta, row);
  }
  tr.diag_norms.resize(K);
  tr.spectral_radius = 0.0;
  tr.diag_norms_bounded = true;
  for (int k = 1; k <= K; ++k) {
    tr.diag_norms[k - 1] = norms[k - 1][k - 1];
    tr.spectral_radius = std::max(tr.spectral_radius, tr.diag_norms[k - 1]);
    tr.diag_norms_bounded = tr.diag_norms_bounded && tr.diag_norms[k - 1] < 1.0;
  }
  return tr;
}

double schur_norm_bound(const MomentOperatorTruncation& trunc) {
  return std::sqrt(trunc.alpha * trunc.beta);
}

RhoCertificate rho_certificate(const LossEnsemble& ensemble, double eta, double rho) {
  const BatchMapDerivatives derivs = batch_map_derivatives(ensemble, eta);
  const int d = derivs.dim;

  RhoCertificate cert;
  double contraction = 0.0;
  double C = 0.0;
  for (const auto& Yb : derivs.Y) {
    contraction = std::max(contraction, operator_norm(Yb[0]));
    for (std::size_t p = 0; p < Yb.size(); ++p) {
      const double m = Yb[p].size() == 0 ? 0.0 : Yb[p].cwiseAbs().maxCoeff();
      if (m > 0.0) C = std::max(C, std::pow(m, 1.0 / static_cast<double>(p + 2)));
    }
  }
  cert.epsilon = 1.0 - contraction;
  if (cert.epsilon <= 0.0)
    throw Error(ErrorCode::EpsilonNonPositive,
                "a batch map is not a local contraction (max ||I - eta H_B|| = " +
                    std::to_string(contraction) + ")");
  cert.C = C;
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  cert.rho_star = C == 0.0 ? std::numeric_limits<double>::infinity()
                           : cert.epsilon / (C * C * C * d * sqrt_d + cert.epsilon * C * sqrt_d);
  cert.rho = rho < 0.0 ? std::min(cert.rho_star / 2.0, 0.1) : rho;
  if (!(cert.rho < cert.rho_star) || cert.rho <= 0.0)
    throw Error(ErrorCode::RadiusTooLarge, "rho is not strictly inside the certified radius");
  cert.gamma = C == 0.0 ? 1.0 - cert.epsilon
                        : 1.0 - cert.epsilon +
                              C * C * C * d * sqrt_d * cert.rho / (1.0 - C * sqrt_d * cert.rho);
  return cert;
}

MomentDecayTable moment_decay_check(const LossEnsemble& ensemble, double eta,
                                    const Eigen::VectorXd& x0, int K, double rho, long t_max,
                                    std::size_t path_budget) {
  if (x0.size() != ensemble.dim())
    throw Error(ErrorCode::DimensionMismatch, "moment_decay_check: x0");
  const Eigen::VectorXd dx0 = x0 - ensemble.x_star();
  if (!(dx0.norm() < rho))
    throw Error(ErrorCode::RadiusTooLarge, "moment comparison requires ||x0 - x_star|| < rho");

  const BatchMapDerivatives derivs = batch_map_derivatives(ensemble, eta);
  const MomentOperatorTruncation tr = assemble_truncation(derivs, K, rho);

  MomentDecayTable table;
  table.K = K;
  table.rho = rho;
  table.t_max = t_max;
  for (int k = 1; k <= K; ++k) table.trunc_scale.push_back(std::pow(rho, K + 1 - k));

  const int d = ensemble.dim();
  std::vector<std::size_t> offset(K + 1, 0);
  for (int k = 1; k <= K; ++k) offset[k] = offset[k - 1] + pow_size(d, k);
  const std::size_t total = offset[K];

  Eigen::VectorXd mu(total);
  for (int k = 1; k <= K; ++k)
    mu.segment(offset[k - 1], pow_size(d, k)) = kron_power(dx0 / rho, k);

  std::vector<std::vector<Eigen::VectorXd>> exact_by_k(K);
  for (int k = 1; k <= K; ++k)
    exact_by_k[k - 1] = exact_moment_sequence(ensemble, x0, eta, static_cast<int>(t_max), k,
                                              path_budget);

  for (long t = 0; t <= t_max; ++t) {
    if (t > 0) mu = tr.dense * mu;
    std::vector<Eigen::VectorXd> ex_row, pr_row;
    std::vector<double> err_row;
    for (int k = 1; k <= K; ++k) {
      const Eigen::VectorXd ex = exact_by_k[k - 1][t] / std::pow(rho, k);
      const Eigen::VectorXd pr = mu.segment(offset[k - 1], pow_size(d, k));
      err_row.push_back((ex - pr).cwiseAbs().maxCoeff());
      ex_row.push_back(ex);
      pr_row.push_back(pr);
    }
    table.exact.push_back(std::move(ex_row));
    table.predicted.push_back(std::move(pr_row));
    table.abs_error.push_back(std::move(err_row));
  }
  return table;
}

}  // namespace stab
