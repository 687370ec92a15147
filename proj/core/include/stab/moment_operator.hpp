#pragma once

#include <vector>

#include "stab/ensemble.hpp"
#include "stab/linalg.hpp"

namespace stab {

// ============================================================================
// Moment-transfer operator for SGD near a shared minimum.
//
// Around x_star the batch update psi_B(x) = x - eta grad L_B(x) expands as
//   Delta x' = sum_p Y_p [Delta x^(x)p],   Y_p = (1/p!) D^p psi_B(x_star),
// so stacked Kronecker moments evolve linearly: the (k, p) block of the
// transfer operator is
//   Psi_{k,p} = E_B [ sum over compositions p = k1+...+kk (ki >= 1) of
//                     Y_{k1} (x) ... (x) Y_{kk} ].
// Scaling moments by rho^{-k} multiplies the block by rho^{p-k}; truncating
// at total order K leaves a finite block upper-triangular matrix whose norm
// can be certified from block row/column sums.
// ============================================================================

struct BatchMapDerivatives {
  double eta = 0.0;
  int dim = 0;
  int max_order = 0;  // P: highest derivative order of the batch maps kept
  // Y[b][p-1] is the d x d^p matrix of order-p map derivatives for batch b
  // (columns in mixed-radix index order, leftmost index most significant).
  std::vector<std::vector<Eigen::MatrixXd>> Y;
  bool certified = true;  // false when any batch needed finite differences
};

// Derivatives of every batch map at x_star.  Polynomial batches are exact
// with max_order = degree - 1; black-box batches use central differences up
// to order 3 and clear `certified`.
[[nodiscard]] BatchMapDerivatives batch_map_derivatives(const LossEnsemble& ensemble,
                                                        double eta);

// Unscaled block Psi_{k,p}; requires 1 <= k <= p.  Zero when p > k * max_order.
[[nodiscard]] Eigen::MatrixXd assemble_block(const BatchMapDerivatives& derivs, int k, int p);

// Enumerates compositions of p into k positive parts (lexicographic); there
// are C(p-1, k-1) of them.
[[nodiscard]] std::vector<std::vector<int>> compositions(int p, int k);

struct MomentOperatorTruncation {
  int K = 0;
  double rho = 0.0;
  int dim = 0;
  // blocks[k-1][p-1] = rho^{p-k} * Psi_{k,p} for k <= p, empty otherwise.
  std::vector<std::vector<Eigen::MatrixXd>> blocks;
  std::vector<double> diag_norms;  // ||Psi_{k,k}||, k = 1..K
  double alpha = 0.0;              // max over block columns of sum_k ||block||
  double beta = 0.0;               // max over block rows of sum_p ||block||
  double spectral_radius = 0.0;    // max_k ||Psi_{k,k}|| (diagonal blocks are symmetric)
  bool diag_norms_bounded = true;  // all diagonal norms < 1
  Eigen::MatrixXd dense;           // assembled (sum_k d^k) square matrix
};

inline constexpr std::size_t kDefaultTruncationDimCap = 4096;

[[nodiscard]] MomentOperatorTruncation assemble_truncation(
    const BatchMapDerivatives& derivs, int K, double rho,
    std::size_t dim_cap = kDefaultTruncationDimCap);

// Norm certificate for block matrices: ||T|| <= sqrt(alpha * beta) where
// alpha / beta bound the block column / row sums of spectral norms.
[[nodiscard]] double schur_norm_bound(const MomentOperatorTruncation& trunc);

struct RhoCertificate {
  double epsilon = 0.0;   // 1 - max_B ||I - eta H_B||; must be > 0
  double C = 0.0;         // derivative growth constant of the batch maps
  double rho_star = 0.0;  // epsilon / (C^3 d^{3/2} + epsilon C sqrt(d))
  double rho = 0.0;       // chosen radius, default min(rho_star / 2, 0.1)
  double gamma = 0.0;     // contraction factor at `rho`; < 1 for rho < rho_star
};

// Certifies a moment-contraction radius from the batch Hessians and the
// derivative growth constant C = max over batches and orders p of
// max_abs(Y_p)^(1/(p+1)).  Throws EpsilonNonPositive when some batch map is
// not a local contraction, RadiusTooLarge when the requested rho is not
// certified.  Pass rho < 0 to use the default.
[[nodiscard]] RhoCertificate rho_certificate(const LossEnsemble& ensemble, double eta,
                                             double rho = -1.0);

struct MomentDecayTable {
  int K = 0;
  double rho = 0.0;
  long t_max = 0;
  // exact[t][k-1] / predicted[t][k-1]: normalized moment vectors rho^{-k} E[dx^(x)k].
  std::vector<std::vector<Eigen::VectorXd>> exact;
  std::vector<std::vector<Eigen::VectorXd>> predicted;
  std::vector<std::vector<double>> abs_error;  // [t][k-1], max-abs entry difference
  std::vector<double> trunc_scale;             // [k-1] = rho^(K+1-k)
};

// Compares exact enumerated moments against the truncated linear model
// mu_{t+1} = Psi_rho mu_t started from mu_0^k = ((x0 - x_star)/rho)^(x)k.
// Requires ||x0 - x_star|| < rho.
[[nodiscard]] MomentDecayTable moment_decay_check(const LossEnsemble& ensemble, double eta,
                                                  const Eigen::VectorXd& x0, int K, double rho,
                                                  long t_max,
                                                  std::size_t path_budget = kDefaultPathBudget);

}  // namespace stab
