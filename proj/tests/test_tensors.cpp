#include <doctest.h>

#include <stab/derivatives.hpp>
#include <stab/errors.hpp>
#include <stab/poly.hpp>
#include <stab/rng.hpp>
#include <stab/tensor.hpp>

#include <cmath>
#include <vector>

using stab::DerivativeSource;
using stab::DerivativeTensors;
using stab::PolyLoss;
using stab::Tensor3;
using stab::Tensor4;

namespace {

Eigen::VectorXd random_vec(stab::SplitMix64& rng, int d) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.next_double(-1.0, 1.0);
  return v;
}

// Reference contractions by explicit loops, written against the definition
// rather than the class internals.
Eigen::VectorXd contract2_ref(const Tensor3& t, const Eigen::VectorXd& a,
                              const Eigen::VectorXd& b) {
  const int d = t.dim();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) w(k) += t(i, j, k) * a(i) * b(j);
  return w;
}

double contract4_ref(const Tensor4& t, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                     const Eigen::VectorXd& c, const Eigen::VectorXd& e) {
  const int d = t.dim();
  double s = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) s += t(i, j, k, l) * a(i) * b(j) * c(k) * e(l);
  return s;
}

}  // namespace

TEST_CASE("tensor contractions agree with definition loops") {
  stab::SplitMix64 rng(11);
  const int d = 3;
  Tensor3 t3(d);
  Tensor4 t4(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        t3(i, j, k) = rng.next_double(-1.0, 1.0);
        for (int l = 0; l < d; ++l) t4(i, j, k, l) = rng.next_double(-1.0, 1.0);
      }

  const Eigen::VectorXd a = random_vec(rng, d), b = random_vec(rng, d);
  const Eigen::VectorXd c = random_vec(rng, d), e = random_vec(rng, d);

  const Eigen::VectorXd w = t3.contract2(a, b);
  const Eigen::VectorXd w_ref = contract2_ref(t3, a, b);
  CHECK((w - w_ref).norm() < 1e-13);
  CHECK(t3.contract3(a, b, c) == doctest::Approx(w_ref.dot(c)).epsilon(1e-12));
  CHECK(t4.contract4(a, b, c, e) == doctest::Approx(contract4_ref(t4, a, b, c, e)).epsilon(1e-12));
  CHECK(t4.contract4(a) == doctest::Approx(contract4_ref(t4, a, a, a, a)).epsilon(1e-12));
}

TEST_CASE("max_abs and max_asymmetry report what they claim") {
  Tensor3 t(2);
  t(0, 1, 1) = 3.0;
  t(1, 0, 1) = -5.0;
  CHECK(t.max_abs() == 5.0);
  // Entries t_011 and t_101 differ by 8, the largest permutation mismatch.
  CHECK(t.max_asymmetry() == 8.0);

  Tensor3 sym(2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) sym(i, j, k) = static_cast<double>(i + j + k);
  CHECK(sym.max_asymmetry() == 0.0);
}

TEST_CASE("polynomial derivative tensors match hand-expanded derivatives") {
  // L(x, y) = x^2 y^2 + y^3: all nonzero partials are easy to enumerate.
  const PolyLoss loss(2, {{{2, 2}, 1.0}, {{0, 3}, 1.0}});
  Eigen::VectorXd p(2);
  p << 0.5, -1.0;
  const DerivativeTensors dt = stab::poly_derivative_tensors(loss, p);

  CHECK(dt.source == DerivativeSource::Analytic);
  CHECK(dt.grad(0) == doctest::Approx(2 * 0.5 * 1.0));            // 2 x y^2
  CHECK(dt.grad(1) == doctest::Approx(2 * 0.25 * -1.0 + 3.0));    // 2 x^2 y + 3 y^2
  CHECK(dt.hess(0, 0) == doctest::Approx(2.0));                   // 2 y^2
  CHECK(dt.hess(0, 1) == doctest::Approx(4 * 0.5 * -1.0));        // 4 x y
  CHECK(dt.hess(1, 1) == doctest::Approx(2 * 0.25 - 6.0));        // 2 x^2 + 6 y
  CHECK(dt.hess(1, 0) == dt.hess(0, 1));
  CHECK(dt.d3(0, 0, 1) == doctest::Approx(4.0 * -1.0));           // 4 y
  CHECK(dt.d3(0, 1, 0) == dt.d3(0, 0, 1));
  CHECK(dt.d3(0, 1, 1) == doctest::Approx(4.0 * 0.5));            // 4 x
  CHECK(dt.d3(1, 1, 1) == doctest::Approx(6.0));
  CHECK(dt.d3(0, 0, 0) == 0.0);
  CHECK(dt.d4(0, 0, 1, 1) == doctest::Approx(4.0));
  CHECK(dt.d4(0, 0, 0, 0) == 0.0);
  CHECK(dt.d4(1, 1, 1, 1) == 0.0);
  CHECK(dt.d3.max_asymmetry() == 0.0);
  CHECK(dt.d4.max_asymmetry() == 0.0);
}

TEST_CASE("finite-difference tensors approximate a smooth black-box function") {
  // f(x, y) = sin(x) * exp(y/2): every partial has a closed form, so the
  // oracle below is independent of the stencil code.
  const auto f = [](const Eigen::VectorXd& v) { return std::sin(v(0)) * std::exp(0.5 * v(1)); };
  Eigen::VectorXd p(2);
  p << 0.4, -0.3;
  const double s = std::sin(0.4), c = std::cos(0.4), E = std::exp(-0.15);

  const DerivativeTensors dt = stab::fd_derivative_tensors(f, p);
  CHECK(dt.source == DerivativeSource::FiniteDifference);
  CHECK(dt.grad(0) == doctest::Approx(c * E).epsilon(1e-8));
  CHECK(dt.grad(1) == doctest::Approx(0.5 * s * E).epsilon(1e-8));
  CHECK(dt.hess(0, 0) == doctest::Approx(-s * E).epsilon(1e-6));
  CHECK(dt.hess(0, 1) == doctest::Approx(0.5 * c * E).epsilon(1e-6));
  CHECK(dt.hess(1, 1) == doctest::Approx(0.25 * s * E).epsilon(1e-6));
  CHECK(dt.d3(0, 0, 0) == doctest::Approx(-c * E).epsilon(1e-4));
  CHECK(dt.d3(0, 0, 1) == doctest::Approx(-0.5 * s * E).epsilon(1e-4));
  CHECK(dt.d3(1, 1, 1) == doctest::Approx(0.125 * s * E).epsilon(1e-4));
  CHECK(dt.d4(0, 0, 0, 0) == doctest::Approx(s * E).epsilon(1e-3));
  CHECK(dt.d4(0, 0, 1, 1) == doctest::Approx(-0.25 * s * E).epsilon(1e-3));
  // Broadcast construction makes the stencil output exactly symmetric.
  CHECK(dt.d3.max_asymmetry() == 0.0);
  CHECK(dt.d4.max_asymmetry() == 0.0);
}

TEST_CASE("fd tensors agree with exact polynomial tensors") {
  stab::SplitMix64 rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const int d = 2;
    std::vector<stab::PolyTerm> terms;
    for (int e0 = 0; e0 <= 4; ++e0)
      for (int e1 = 0; e0 + e1 <= 4; ++e1)
        terms.push_back({{e0, e1}, rng.next_double(-0.5, 0.5)});
    const PolyLoss loss(2, terms);
    const Eigen::VectorXd p = random_vec(rng, d);

    const DerivativeTensors exact = stab::poly_derivative_tensors(loss, p);
    const DerivativeTensors fd = stab::fd_derivative_tensors(
        [&](const Eigen::VectorXd& v) { return loss.value(v); }, p);

    CHECK((fd.grad - exact.grad).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((fd.hess - exact.hess).cwiseAbs().maxCoeff() < 1e-5);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          CHECK(fd.d3(i, j, k) == doctest::Approx(exact.d3(i, j, k)).epsilon(2e-4));
          for (int l = 0; l < d; ++l)
            CHECK(fd.d4(i, j, k, l) ==
                  doctest::Approx(exact.d4(i, j, k, l)).epsilon(5e-3).scale(1.0));
        }
  }
}

TEST_CASE("fd_mixed_partial handles per-variable stencil orders") {
  const auto f = [](const Eigen::VectorXd& v) {
    return v(0) * v(0) * v(0) * v(1) * v(1);  // x^3 y^2
  };
  Eigen::VectorXd p(2);
  p << 1.1, 0.7;
  // d3/dx2dy = 6 x * 2 y = 12 x y.
  CHECK(stab::fd_mixed_partial(f, p, {2, 1}) ==
        doctest::Approx(12.0 * 1.1 * 0.7).epsilon(1e-4));
  // d2/dxdy = 3 x^2 * 2 y.
  CHECK(stab::fd_mixed_partial(f, p, {1, 1}) ==
        doctest::Approx(6.0 * 1.1 * 1.1 * 0.7).epsilon(1e-5));
}

TEST_CASE("fd step sizes shrink with the derivative order") {
  CHECK(stab::fd_step(1) == doctest::Approx(std::pow(1e-16, 1.0 / 3.0)));
  CHECK(stab::fd_step(4) == doctest::Approx(std::pow(1e-16, 1.0 / 6.0)));
  CHECK(stab::fd_step(1) < stab::fd_step(2));
}

TEST_CASE("dimension cap for dense tensors is enforced") {
  const auto f = [](const Eigen::VectorXd& v) { return v.squaredNorm(); };
  const Eigen::VectorXd big = Eigen::VectorXd::Zero(stab::kMaxTensorDim + 1);
  CHECK_THROWS_AS((void)stab::fd_derivative_tensors(f, big), stab::Error);
}
