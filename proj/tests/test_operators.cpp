#include "hinf/operators.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace hinf;
using namespace hinf::operators;

namespace {

ComplexMatrix diag(std::initializer_list<cplx> d) {
  ComplexMatrix m = ComplexMatrix::Zero(d.size(), d.size());
  int i = 0;
  for (auto v : d) m(i, i) = v, ++i;
  return m;
}

ComplexMatrix mat2(cplx a, cplx b, cplx c, cplx d) {
  ComplexMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("resolvent examples") {
  CHECK((resolvent(ComplexMatrix::Zero(2, 2), 2.0) - 0.5 * identity(2)).norm() < 1e-15);
  CHECK((resolvent(diag({0.5, -0.25}), 1.0) - diag({2.0, 0.8})).norm() < 1e-14);
  // (I − J)^{-1} for J = [[.5, 1], [0, .5]]: [[2, 4], [0, 2]]
  CHECK((resolvent(mat2(0.5, 1, 0, 0.5), 1.0) - mat2(2, 4, 0, 2)).norm() < 1e-14);
  CHECK_THROWS_AS(resolvent(diag({0.5, 0.3}), 0.5), SpectralPointError);
}

TEST_CASE("resolvent identity") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    ComplexMatrix T = ComplexMatrix::Random(4, 4) * 0.3;
    const cplx l(2.0 + g(rng) * 0.1, g(rng)), m(-2.0 + g(rng) * 0.1, g(rng));
    const ComplexMatrix lhs = resolvent(T, l) - resolvent(T, m);
    const ComplexMatrix rhs = (m - l) * resolvent(T, l) * resolvent(T, m);
    CHECK((lhs - rhs).norm() < 1e-9);
  }
}

TEST_CASE("commutator_check") {
  CHECK(commutator_check(CommutingTuple({diag({1, 2}), diag({3, 4})})).pass);
  const ComplexMatrix J = mat2(0.5, 1, 0, 0.5);
  const auto r = commutator_check(CommutingTuple({J, J * J}));
  CHECK(r.pass);
  CHECK(r.max_relative < 1e-15);
  const auto bad = commutator_check(CommutingTuple({J, mat2(0, 0, 1, 0)}));
  CHECK_FALSE(bad.pass);
  // [J, N] = [[1, 0], [0, -1]]: norm 1; ‖J‖‖N‖ = ‖J‖
  CHECK(bad.max_relative == doctest::Approx(1.0 / oracle::opnorm(J)).epsilon(1e-12));
  CHECK_THROWS_AS(CommutingTuple({diag({1, 2}), diag({1, 2, 3})}), ValidationError);
  CHECK_THROWS_AS(require_commuting(CommutingTuple({J, mat2(0, 0, 1, 0)})), ValidationError);
}

TEST_CASE("matrix_power_family") {
  const ComplexMatrix T = mat2(1, 1, 0, 1);
  const auto P = matrix_power_family(T, 6);
  CHECK(P.size() == 7);
  for (int n = 0; n <= 6; ++n) CHECK((P[n] - mat2(1, n, 0, 1)).norm() == 0.0);
  const auto D = matrix_power_family(diag({0.5, 0.3}), 3);
  CHECK((D[3] - diag({0.125, 0.027})).norm() < 1e-16);
}

TEST_CASE("classify_ritt examples") {
  const auto id = classify_ritt(identity(2));
  CHECK(id.verdict == Verdict::ritt);
  for (auto [beta, K] : id.K_beta) CHECK(K == doctest::Approx(1.0).epsilon(1e-12));

  const auto d = classify_ritt(diag({0.5, 0.3}));
  CHECK(d.verdict == Verdict::ritt);
  CHECK(d.alpha_hat == doctest::Approx(kPi / 48));

  const auto j = classify_ritt(mat2(1, 1, 0, 1));
  CHECK(j.verdict == Verdict::not_ritt);
  CHECK(j.difference_bound == doctest::Approx(256.0));
  CHECK(j.growth_exponent > 0.9);

  CHECK(classify_ritt(diag({1.2, 0.3})).verdict == Verdict::not_ritt);
}

TEST_CASE("classify_ritt on well-conditioned diagonalizable matrices") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 12; ++t) {
    std::vector<cplx> ev;
    for (int i = 0; i < 3; ++i) {
      if (t % 4 == 0 && i == 0) {
        ev.push_back(1.0);
        continue;
      }
      ev.push_back(std::polar(0.95 * std::sqrt(u(rng)), 2 * kPi * u(rng)));
    }
    const ComplexMatrix U = oracle::random_conditioned(3, 1.0 + 9.0 * u(rng), rng);
    const auto rep = classify_ritt(oracle::conjugate_diag(U, ev));
    CHECK(rep.verdict == Verdict::ritt);
    // unitary conjugation leaves the estimate unchanged
    const ComplexMatrix W = oracle::random_unitary(3, rng);
    const auto rep2 = classify_ritt(W * oracle::conjugate_diag(U, ev) * W.adjoint());
    CHECK(rep2.alpha_hat == doctest::Approx(rep.alpha_hat));
  }
}

TEST_CASE("classify_sectorial") {
  const auto id = classify_sectorial(identity(2));
  CHECK(id.verdict == Verdict::sectorial);
  CHECK(id.omega_hat == doctest::Approx(kPi / 48));
  const auto z = classify_sectorial(ComplexMatrix::Zero(2, 2));
  CHECK(z.verdict == Verdict::sectorial);
  for (auto [theta, C] : z.C_theta) CHECK(C == doctest::Approx(1.0));
  const auto a = classify_sectorial(identity(2) - diag({0.5, 0.3}));
  CHECK(a.omega_hat < kPi / 2);
  CHECK(classify_sectorial(diag({-1.0, 1.0})).verdict == Verdict::not_sectorial);
  // Ritt T ⇒ I − T sectorial of type < π/2
  const ComplexMatrix T = mat2(0.5, 10, 0, 0.5);
  CHECK(classify_ritt(T).verdict == Verdict::ritt);
  const auto s = classify_sectorial(identity(2) - T);
  CHECK(s.verdict == Verdict::sectorial);
  CHECK(s.omega_hat < kPi / 2);
}

TEST_CASE("ℓp operator norm") {
  const ComplexMatrix M = mat2(1, 2, 3, 4);
  CHECK(lp_operator_norm(M, 1.0) == doctest::Approx(6.0));
  CHECK(lp_operator_norm(M, 2.0) == doctest::Approx(oracle::opnorm(M)));
  // ℓ∞ norm is the max row sum; p large approaches it from the ℓp side
  const double n3 = lp_operator_norm(M, 3.0);
  CHECK(n3 > 0.0);
  // brute force over the unit sphere of ℓ3 (real directions suffice for a positive matrix)
  double best = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const double th = 2 * kPi * k / 20000;
    const double x = std::cos(th), y = std::sin(th);
    const double nx = std::cbrt(std::pow(std::abs(x), 3) + std::pow(std::abs(y), 3));
    const double a = std::abs(x + 2 * y) / nx, b = std::abs(3 * x + 4 * y) / nx;
    best = std::max(best, std::cbrt(a * a * a + b * b * b));
  }
  CHECK(n3 == doctest::Approx(best).epsilon(1e-6));
}
