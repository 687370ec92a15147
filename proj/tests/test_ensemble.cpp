#include <doctest.h>

#include <stab/dynamics.hpp>
#include <stab/ensemble.hpp>
#include <stab/errors.hpp>
#include <stab/presets.hpp>

#include <cmath>
#include <vector>

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

// n univariate quadratics (h_i / 2) x^2 sharing the minimum at 0.
LossEnsemble quadratic_ensemble(const std::vector<double>& hs, int B) {
  std::vector<Loss> losses;
  for (double h : hs) losses.push_back(Loss(PolyLoss(1, {{{2}, h / 2.0}})));
  return LossEnsemble(std::move(losses), B, scalar(0.0));
}

// Oracle for the univariate mean-square stability limit, written straight
// from its definition: sample mean curvature, population variance, and the
// sampling factor p = (n - B) / (B (n - 1)).
double meansquare_oracle(const std::vector<double>& hs, int B) {
  const double n = static_cast<double>(hs.size());
  double mean = 0.0;
  for (double h : hs) mean += h;
  mean /= n;
  double var = 0.0;
  for (double h : hs) var += (h - mean) * (h - mean);
  var /= n;
  if (hs.size() == static_cast<std::size_t>(B)) return 2.0 / mean;
  const double p = (n - B) / (B * (n - 1.0));
  return 2.0 * mean / (mean * mean + p * var);
}

}  // namespace

TEST_CASE("batches are enumerated lexicographically") {
  const LossEnsemble ens = quadratic_ensemble({1.0, 2.0, 3.0, 4.0}, 2);
  // Oracle: the 6 two-element subsets of {0,1,2,3} in lexicographic order.
  const std::vector<std::vector<int>> expect = {{0, 1}, {0, 2}, {0, 3},
                                                {1, 2}, {1, 3}, {2, 3}};
  REQUIRE(ens.num_batches() == 6);
  for (std::size_t b = 0; b < 6; ++b) CHECK(ens.batches()[b] == expect[b]);
}

TEST_CASE("batch losses and hessians average their members") {
  const LossEnsemble ens = quadratic_ensemble({1.0, 2.0, 3.0, 4.0}, 2);
  // Batch {0, 3} has mean curvature (1 + 4) / 2.
  const std::size_t b03 = 2;
  REQUIRE(ens.batches()[b03] == std::vector<int>{0, 3});
  CHECK(ens.batch_hessian(b03)(0, 0) == doctest::Approx(2.5));
  const Eigen::VectorXd x = scalar(0.8);
  CHECK(ens.batch_loss(b03).value(x) == doctest::Approx(0.5 * 2.5 * 0.64));

  // The full objective is the mean over all four members.
  CHECK(ens.mean().value(x) == doctest::Approx(0.5 * 2.5 * 0.64));
  CHECK(ens.mean().gradient(x)(0) == doctest::Approx(2.5 * 0.8));
}

TEST_CASE("constructor validates its inputs") {
  CHECK_THROWS_AS(quadratic_ensemble({}, 1), Error);
  CHECK_THROWS_AS(quadratic_ensemble({1.0, 2.0}, 3), Error);
  CHECK_THROWS_AS(quadratic_ensemble({1.0, 2.0}, 0), Error);

  // Members must share the dimension of x_star.
  std::vector<Loss> mixed = {Loss(PolyLoss(1, {{{2}, 0.5}})),
                             Loss(PolyLoss(2, {{{2, 0}, 0.5}}))};
  CHECK_THROWS_AS(LossEnsemble(std::move(mixed), 1, scalar(0.0)), Error);

  // C(20, 10) = 184756 fits a generous cap but not a tight one.
  std::vector<double> many(20, 1.0);
  CHECK_NOTHROW(quadratic_ensemble(many, 10));
  std::vector<Loss> losses;
  for (double h : many) losses.push_back(Loss(PolyLoss(1, {{{2}, h / 2.0}})));
  try {
    LossEnsemble(std::move(losses), 10, scalar(0.0), 1000);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EnumerationCapExceeded);
  }
}

TEST_CASE("two-loss preset ensemble has the advertised exact thresholds") {
  const LossEnsemble ens = stab::make_ensemble_two_point(0.5);
  REQUIRE(ens.num_batches() == 2);
  // Curvatures at the shared minimum are 1 and 1/2, so the mean-square
  // limit 2 h / (h^2 + s^2) = 2 * 0.75 / (0.5625 + 0.0625) evaluates to
  // exactly 2.4 in binary arithmetic, and the worst single curvature gives
  // the sufficient limit 2 / 1 = 2.
  CHECK(stab::meansquare_threshold_univariate(ens) == 2.4);
  CHECK(stab::sufficient_threshold(ens) == 2.0);

  const stab::ThresholdReport rep = stab::threshold_report(ens);
  CHECK(rep.eta_meansquare == 2.4);
  CHECK(rep.eta_sufficient == 2.0);
  CHECK(rep.strict_gap);
  REQUIRE(rep.batch_lambda_max.size() == 2);
  CHECK(rep.batch_lambda_max[0] == doctest::Approx(1.0));
  CHECK(rep.batch_lambda_max[1] == doctest::Approx(0.5));
}

TEST_CASE("mean-square threshold matches its definition on random curvatures") {
  const std::vector<std::vector<double>> cases = {
      {1.0, 0.9},            // preset-like pair
      {1.0, 2.0, 3.0},       // spread triple
      {0.5, 0.5, 0.5, 0.5},  // zero variance: reduces to 2 / h
  };
  for (const auto& hs : cases) {
    for (int B = 1; B <= static_cast<int>(hs.size()); ++B) {
      CAPTURE(hs.size());
      CAPTURE(B);
      const LossEnsemble ens = quadratic_ensemble(hs, B);
      CHECK(stab::meansquare_threshold_univariate(ens) ==
            doctest::Approx(meansquare_oracle(hs, B)).epsilon(1e-14));
    }
  }
  // Worked instance: h = {1, 0.9}, B = 1 gives 2 * 0.95 / (0.9025 + 0.0025).
  const LossEnsemble pair = quadratic_ensemble({1.0, 0.9}, 1);
  CHECK(stab::meansquare_threshold_univariate(pair) == doctest::Approx(1.9 / 0.905));
}

TEST_CASE("full-batch ensembles collapse both thresholds to 2 over the mean curvature") {
  const LossEnsemble ens = quadratic_ensemble({1.0, 0.5}, 2);
  REQUIRE(ens.num_batches() == 1);
  CHECK(stab::meansquare_threshold_univariate(ens) == doctest::Approx(2.0 / 0.75));
  CHECK(stab::sufficient_threshold(ens) == doctest::Approx(2.0 / 0.75));
  CHECK_FALSE(stab::threshold_report(ens).strict_gap);
}

TEST_CASE("mean-square threshold is univariate-only") {
  std::vector<Loss> losses = {Loss(PolyLoss(2, {{{2, 0}, 0.5}, {{0, 2}, 0.5}})),
                              Loss(PolyLoss(2, {{{2, 0}, 1.0}, {{0, 2}, 0.25}}))};
  const LossEnsemble ens(std::move(losses), 1, Eigen::VectorXd::Zero(2));
  try {
    (void)stab::meansquare_threshold_univariate(ens);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
  // The report degrades gracefully instead of throwing.
  const stab::ThresholdReport rep = stab::threshold_report(ens);
  CHECK(std::isnan(rep.eta_meansquare));
  CHECK_FALSE(rep.strict_gap);
  CHECK(rep.eta_sufficient > 0.0);
}

TEST_CASE("degenerate curvature rejects the threshold formulas") {
  const LossEnsemble ens = quadratic_ensemble({1.0, -1.0}, 1);
  CHECK_THROWS_AS((void)stab::sufficient_threshold(ens), Error);
  try {
    (void)stab::meansquare_threshold_univariate(ens);  // mean curvature 0
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::HessianNotPD);
  }
}

TEST_CASE("interpolation check distinguishes shared from conflicting minima") {
  const stab::InterpolationCheck good =
      stab::check_interpolating(stab::make_ensemble_two_point(0.5));
  CHECK(good.interpolating);
  REQUIRE(good.grad_norms.size() == 2);
  CHECK(good.grad_norms[0] < 1e-12);
  CHECK(good.min_eigs[0] > 0.0);

  // Shift one member's minimum away from x_star: gradients no longer vanish.
  std::vector<Loss> losses = {Loss(PolyLoss(1, {{{2}, 0.5}})),
                              Loss(PolyLoss(1, {{{2}, 0.5}, {{1}, 0.3}}))};
  const LossEnsemble off(std::move(losses), 1, scalar(0.0));
  CHECK_FALSE(stab::check_interpolating(off).interpolating);
}

TEST_CASE("per-batch divergence survey flags the hard batch past its own limit") {
  const LossEnsemble ens = stab::make_ensemble_two_point(0.5);
  // eta = 2.5 exceeds 2 / lambda for the quartic member (batch 0) only.
  const stab::WorstCaseBatchReport rep =
      stab::worst_case_batch_report(ens, 2.5, scalar(0.5), 60);
  REQUIRE(rep.verdicts.size() == 2);
  CHECK(rep.any_superlinear);
  REQUIRE(rep.superlinear_batches.size() == 1);
  CHECK(rep.superlinear_batches[0] == 0);
  CHECK(rep.verdicts[0] == stab::DivergenceVerdict::Superlinear);
  // The quadratic member contracts at eta = 2.5 (multiplier -0.25).
  CHECK(rep.verdicts[1] != stab::DivergenceVerdict::Superlinear);
}
