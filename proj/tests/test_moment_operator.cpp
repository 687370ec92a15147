#include <doctest.h>

#include <stab/ensemble.hpp>
#include <stab/errors.hpp>
#include <stab/linalg.hpp>
#include <stab/moment_operator.hpp>
#include <stab/presets.hpp>
#include <stab/rng.hpp>

#include <cmath>
#include <vector>

using stab::BatchMapDerivatives;
using stab::Error;
using stab::ErrorCode;
using stab::Loss;
using stab::LossEnsemble;
using stab::PolyLoss;

namespace {

Eigen::VectorXd scalar(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

LossEnsemble single_hard_quartic() {
  return LossEnsemble({Loss(stab::preset_f_plus())}, 1, scalar(0.0));
}

}  // namespace

TEST_CASE("batch map derivatives of the hard quartic at eta 2 are the textbook values") {
  // psi(x) = x - 2 (x + x^3) = -x - 2 x^3, so the order-1..3 map coefficients
  // are -1, 0, -2.
  const BatchMapDerivatives d = stab::batch_map_derivatives(single_hard_quartic(), 2.0);
  CHECK(d.dim == 1);
  CHECK(d.max_order == 3);
  CHECK(d.certified);
  REQUIRE(d.Y.size() == 1);
  REQUIRE(d.Y[0].size() == 3);
  CHECK(d.Y[0][0](0, 0) == doctest::Approx(-1.0));
  CHECK(d.Y[0][1](0, 0) == doctest::Approx(0.0));
  CHECK(d.Y[0][2](0, 0) == doctest::Approx(-2.0));
}

TEST_CASE("two-loss preset ensemble at eta 1 produces the expected map coefficients") {
  const BatchMapDerivatives d =
      stab::batch_map_derivatives(stab::make_ensemble_two_point(0.5), 1.0);
  REQUIRE(d.Y.size() == 2);
  REQUIRE(d.max_order == 3);
  // Quartic member: multiplier 0, cubic coefficient -1.
  CHECK(d.Y[0][0](0, 0) == doctest::Approx(0.0));
  CHECK(d.Y[0][1](0, 0) == doctest::Approx(0.0));
  CHECK(d.Y[0][2](0, 0) == doctest::Approx(-1.0));
  // Quadratic member: multiplier 1 - 1 * 0.5, nothing above order 1.
  CHECK(d.Y[1][0](0, 0) == doctest::Approx(0.5));
  CHECK(d.Y[1][1](0, 0) == doctest::Approx(0.0));
  CHECK(d.Y[1][2](0, 0) == doctest::Approx(0.0));
}

TEST_CASE("purely quadratic ensembles keep only the linear term") {
  const LossEnsemble ens({Loss(PolyLoss(1, {{{2}, 0.5}})), Loss(PolyLoss(1, {{{2}, 0.25}}))},
                         1, scalar(0.0));
  const BatchMapDerivatives d = stab::batch_map_derivatives(ens, 1.5);
  CHECK(d.max_order == 1);
  CHECK(d.Y[0][0](0, 0) == doctest::Approx(1.0 - 1.5));
  CHECK(d.Y[1][0](0, 0) == doctest::Approx(1.0 - 0.75));
}

TEST_CASE("compositions enumerate p into k positive parts") {
  const auto c32 = stab::compositions(3, 2);
  REQUIRE(c32.size() == 2);  // C(2, 1)
  CHECK(c32[0] == std::vector<int>{1, 2});
  CHECK(c32[1] == std::vector<int>{2, 1});

  const auto c53 = stab::compositions(5, 3);
  CHECK(c53.size() == 6);  // C(4, 2)
  for (const auto& parts : c53) {
    int sum = 0;
    for (int part : parts) {
      CHECK(part >= 1);
      sum += part;
    }
    CHECK(sum == 5);
  }
  CHECK(stab::compositions(4, 1).size() == 1);
  CHECK(stab::compositions(4, 4).size() == 1);
}

TEST_CASE("transfer blocks match the worked scalar examples") {
  // k = 1, p = 3 for the lone hard quartic at eta 2: E Y_3 = [-2].
  const BatchMapDerivatives hard = stab::batch_map_derivatives(single_hard_quartic(), 2.0);
  CHECK(stab::assemble_block(hard, 1, 3)(0, 0) == doctest::Approx(-2.0));
  // k = 2, p = 3: compositions (1,2) and (2,1) both involve Y_2 = 0.
  CHECK(stab::assemble_block(hard, 2, 3).cwiseAbs().maxCoeff() == 0.0);

  const BatchMapDerivatives mix =
      stab::batch_map_derivatives(stab::make_ensemble_two_point(0.5), 1.0);
  CHECK(stab::assemble_block(mix, 1, 1)(0, 0) == doctest::Approx(0.25));
  CHECK(stab::assemble_block(mix, 2, 2)(0, 0) == doctest::Approx(0.125));
  CHECK(stab::assemble_block(mix, 3, 3)(0, 0) == doctest::Approx(0.0625));
  CHECK(stab::assemble_block(mix, 1, 3)(0, 0) == doctest::Approx(-0.5));

  CHECK_THROWS_AS((void)stab::assemble_block(mix, 2, 1), Error);
  CHECK_THROWS_AS((void)stab::assemble_block(mix, 0, 1), Error);
}

TEST_CASE("blocks past k times the max order vanish") {
  const LossEnsemble ens({Loss(PolyLoss(1, {{{2}, 0.5}}))}, 1, scalar(0.0));
  const BatchMapDerivatives d = stab::batch_map_derivatives(ens, 0.7);
  CHECK(d.max_order == 1);
  CHECK(stab::assemble_block(d, 1, 2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(stab::assemble_block(d, 2, 3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("block assembly agrees with a direct composition sum in two dimensions") {
  // Random two-dimensional quartic pair; oracle below recomputes each block
  // from the definition: average over batches of the sum over compositions
  // of Kronecker products of map derivative matrices.
  stab::SplitMix64 rng(61);
  std::vector<stab::PolyTerm> t1, t2;
  for (int e0 = 2; e0 <= 4; ++e0)
    for (int e1 = 0; e0 + e1 <= 4; ++e1) {
      t1.push_back({{e0, e1}, rng.next_double(-0.3, 0.3)});
      t2.push_back({{e0, e1}, rng.next_double(-0.3, 0.3)});
    }
  t1.push_back({{2, 0}, 0.8});
  t1.push_back({{0, 2}, 0.6});
  t2.push_back({{2, 0}, 0.7});
  t2.push_back({{0, 2}, 0.9});
  const LossEnsemble ens({Loss(PolyLoss(2, t1)), Loss(PolyLoss(2, t2))}, 1,
                         Eigen::VectorXd::Zero(2));
  const BatchMapDerivatives d = stab::batch_map_derivatives(ens, 1.1);

  for (int k = 1; k <= 3; ++k) {
    for (int p = k; p <= 4; ++p) {
      Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(static_cast<int>(std::pow(2, k)),
                                                     static_cast<int>(std::pow(2, p)));
      for (std::size_t b = 0; b < d.Y.size(); ++b) {
        for (const auto& parts : stab::compositions(p, k)) {
          Eigen::MatrixXd prod = Eigen::MatrixXd::Ones(1, 1);
          bool in_range = true;
          for (int part : parts) {
            if (part > d.max_order) {
              in_range = false;
              break;
            }
            prod = stab::kron(prod, d.Y[b][static_cast<std::size_t>(part) - 1]);
          }
          if (!in_range) continue;
          expect += prod;
        }
      }
      expect /= static_cast<double>(d.Y.size());
      const Eigen::MatrixXd got = stab::assemble_block(d, k, p);
      REQUIRE(got.rows() == expect.rows());
      REQUIRE(got.cols() == expect.cols());
      CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-13);
    }
  }
}

TEST_CASE("truncation of the preset ensemble reports the known spectrum") {
  const BatchMapDerivatives d =
      stab::batch_map_derivatives(stab::make_ensemble_two_point(0.5), 1.0);
  const stab::MomentOperatorTruncation tr = stab::assemble_truncation(d, 3, 0.1);
  CHECK(tr.K == 3);
  CHECK(tr.dim == 1);
  REQUIRE(tr.diag_norms.size() == 3);
  CHECK(tr.diag_norms[0] == doctest::Approx(0.25));
  CHECK(tr.diag_norms[1] == doctest::Approx(0.125));
  CHECK(tr.diag_norms[2] == doctest::Approx(0.0625));
  CHECK(tr.spectral_radius == doctest::Approx(0.25));
  CHECK(tr.diag_norms_bounded);
  // Off-diagonal block (1, 3) picks up rho^2.
  CHECK(tr.blocks[0][2](0, 0) == doctest::Approx(0.01 * -0.5));
  // Dense assembly is 3 x 3 (scalar state, three moment orders) and upper
  // block triangular.
  REQUIRE(tr.dense.rows() == 3);
  CHECK(tr.dense(1, 0) == 0.0);
  CHECK(tr.dense(2, 0) == 0.0);
  CHECK(tr.dense(0, 0) == doctest::Approx(0.25));
  CHECK(tr.dense(0, 2) == doctest::Approx(-0.005));
}

TEST_CASE("diagonal blocks are symmetric and the certificate dominates the dense norm") {
  stab::SplitMix64 rng(67);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Loss> losses;
    for (int m = 0; m < 2; ++m) {
      std::vector<stab::PolyTerm> terms = {{{2, 0}, 0.5 + 0.2 * rng.next_double()},
                                           {{0, 2}, 0.4 + 0.2 * rng.next_double()},
                                           {{1, 1}, 0.2 * rng.next_double()},
                                           {{3, 1}, 0.1 * rng.next_double()},
                                           {{4, 0}, 0.1 * rng.next_double()}};
      losses.push_back(Loss(PolyLoss(2, terms)));
    }
    const LossEnsemble ens(std::move(losses), 1, Eigen::VectorXd::Zero(2));
    const BatchMapDerivatives d = stab::batch_map_derivatives(ens, 0.9);
    const stab::MomentOperatorTruncation tr = stab::assemble_truncation(d, 4, 0.05);

    for (int k = 1; k <= 4; ++k) {
      const Eigen::MatrixXd& diag = tr.blocks[k - 1][k - 1];
      CHECK((diag - diag.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
    const double bound = stab::schur_norm_bound(tr);
    CHECK(bound >= stab::operator_norm(tr.dense) - 1e-12);
    CHECK(tr.alpha > 0.0);
    CHECK(tr.beta > 0.0);
    CHECK(bound == doctest::Approx(std::sqrt(tr.alpha * tr.beta)));
  }
}

TEST_CASE("single-order truncation makes the certificate exact") {
  const BatchMapDerivatives d =
      stab::batch_map_derivatives(stab::make_ensemble_two_point(0.5), 1.0);
  const stab::MomentOperatorTruncation tr = stab::assemble_truncation(d, 1, 0.1);
  CHECK(stab::schur_norm_bound(tr) == doctest::Approx(0.25));
  CHECK(stab::operator_norm(tr.dense) == doctest::Approx(0.25));
}

TEST_CASE("truncation dimension cap rejects exponential state sizes") {
  std::vector<Loss> losses = {Loss(PolyLoss(2, {{{2, 0}, 0.5}, {{0, 2}, 0.4}}))};
  const LossEnsemble ens(std::move(losses), 1, Eigen::VectorXd::Zero(2));
  const BatchMapDerivatives d = stab::batch_map_derivatives(ens, 0.9);
  try {
    (void)stab::assemble_truncation(d, 12, 0.1);  // sum 2^k, k<=12 is 8190 > 4096
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SizeCapExceeded);
  }
}

TEST_CASE("radius certificate reproduces the worked numbers for the preset pair") {
  const stab::RhoCertificate cert =
      stab::rho_certificate(stab::make_ensemble_two_point(0.5), 1.0, 0.1);
  CHECK(cert.epsilon == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(cert.C == doctest::Approx(1.0).epsilon(1e-14));
  // rho* = eps / (C^3 d^1.5 + eps C sqrt(d)) = 0.5 / 1.5.
  CHECK(cert.rho_star == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(cert.rho == 0.1);
  // gamma(0.1) = 1 - eps + rho / (1 - rho) = 0.5 + 1/9.
  CHECK(cert.gamma == doctest::Approx(0.5 + 0.1 / 0.9).epsilon(1e-12));
  CHECK(cert.gamma < 1.0);

  // Default radius: min(rho*/2, 0.1).
  const stab::RhoCertificate def = stab::rho_certificate(stab::make_ensemble_two_point(0.5), 1.0);
  CHECK(def.rho == doctest::Approx(0.1));
}

TEST_CASE("radius certificate refuses non-contracting and oversized requests") {
  try {
    (void)stab::rho_certificate(stab::make_ensemble_two_point(0.5), 2.1);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EpsilonNonPositive);
  }
  // eta exactly at 2 / h for a single quadratic: multiplier -1, epsilon 0.
  const LossEnsemble edge({Loss(PolyLoss(1, {{{2}, 0.5}}))}, 1, scalar(0.0));
  CHECK_THROWS_AS((void)stab::rho_certificate(edge, 2.0), Error);

  try {
    (void)stab::rho_certificate(stab::make_ensemble_two_point(0.5), 1.0, 0.5);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RadiusTooLarge);
  }
}

TEST_CASE("moment decay prediction is exact for linear batch maps") {
  // Purely quadratic members: the update is linear, the transfer operator has
  // no off-diagonal feed, and the truncated model is the whole story.
  const LossEnsemble ens({Loss(PolyLoss(1, {{{2}, 0.5}})), Loss(PolyLoss(1, {{{2}, 0.25}}))},
                         1, scalar(0.0));
  const stab::MomentDecayTable table =
      stab::moment_decay_check(ens, 1.2, scalar(0.05), 4, 0.1, 8);
  REQUIRE(table.abs_error.size() == 9);
  for (const auto& row : table.abs_error)
    for (double err : row) CHECK(err < 1e-12);
  CHECK(table.trunc_scale[0] == doctest::Approx(std::pow(0.1, 4)));
}

TEST_CASE("moment decay check enforces the radius hypothesis") {
  CHECK_THROWS_AS((void)stab::moment_decay_check(stab::make_ensemble_two_point(0.5), 1.0,
                                                 scalar(0.2), 6, 0.1, 5),
                  Error);
}

TEST_CASE("truncated model tracks the exact moments of the preset pair") {
  const stab::MomentDecayTable table = stab::moment_decay_check(
      stab::make_ensemble_two_point(0.5), 1.0, scalar(0.05), 6, 0.1, 10);
  // First-moment error stays within ten times the truncation scale rho^6.
  double worst = 0.0;
  for (const auto& row : table.abs_error) worst = std::max(worst, row[0]);
  CHECK(worst <= 10.0 * std::pow(0.1, 6));
}
