#include "hinf/catalog.hpp"
#include "hinf/domains.hpp"
#include "hinf/funcalc.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace hinf;
using namespace hinf::funcalc;

namespace {

ComplexMatrix diag(std::initializer_list<cplx> d) {
  ComplexMatrix m = ComplexMatrix::Zero(d.size(), d.size());
  int i = 0;
  for (auto v : d) m(i, i) = v, ++i;
  return m;
}

double rel(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

DecayCertificate ritt_cert(std::size_t arity, double c, std::map<std::size_t, double> s) {
  DecayCertificate out{CalculusKind::ritt, c, std::vector<double>(arity, 0.0)};
  for (auto [i, e] : s) out.exponents[i] = e;
  return out;
}

HoloFn holo(std::size_t arity, VarSet J, Evaluator f, DecayCertificate c, std::vector<double> angles,
            bool regular = true) {
  HoloFn h;
  h.arity = arity;
  h.active = J;
  h.eval = std::move(f);
  h.certificate = std::move(c);
  h.domain_angles = std::move(angles);
  h.vertex_regular = regular;
  return h;
}

const double g3 = kPi / 3;

}  // namespace

TEST_CASE("eval_h0_ritt examples") {
  const auto f = holo(1, VarSet::of({0}), [](auto z) { return 1.0 - z[0]; }, ritt_cert(1, 1, {{0, 1}}), {g3});
  const CommutingTuple T({diag({0.5, 0.3})});
  CHECK(rel(eval_h0(T, f), diag({0.5, 0.7})) < 1e-10);

  const auto zero = holo(1, VarSet::of({0}), [](auto) { return cplx(0.0); }, ritt_cert(1, 1, {{0, 1}}), {g3});
  CHECK(eval_h0(T, zero).norm() < 1e-15);

  const auto f2 = holo(2, VarSet::of({0, 1}), [](auto z) { return (1.0 - z[0]) * (1.0 - z[1]); },
                       ritt_cert(2, 1, {{0, 1}, {1, 1}}), {g3, g3});
  const CommutingTuple Z({ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(2, 2)});
  CHECK(rel(eval_h0(Z, f2), identity(2)) < 1e-10);

  auto nocert = f;
  nocert.certificate.reset();
  CHECK_THROWS_AS(eval_h0(T, nocert), CertificateError);
}

TEST_CASE("eval_h0_sectorial examples") {
  const auto f = make_catalog_holo("sect/z-over-one-plus-z-squared", {kPi / 2});
  CHECK(rel(eval_h0(CommutingTuple({diag({1, 2})}), f), diag({0.25, 2.0 / 9})) < 1e-9);
  const auto f2 = make_catalog_holo("sect/product-z-over-one-plus-z-squared", {kPi / 2, kPi / 2});
  CHECK(rel(eval_h0(CommutingTuple({identity(2), identity(2)}), f2), identity(2) / 16.0) < 1e-9);
}

TEST_CASE("q_i limits") {
  const auto sq = make_catalog_function("ritt/sqrt-plus-constant", {g3});
  const auto q = project_qi(sq, 0);
  const cplx z[] = {cplx(0.2, 0.1)};
  CHECK(std::abs(q(z) - 3.0) < 1e-8);
  const auto c5 = h01_constant(2, CalculusKind::ritt, {g3, g3}, 5.0);
  const cplx w[] = {0.3, cplx(0.1, -0.2)};
  CHECK(std::abs(project_qi(c5, 1)(w) - 5.0) < 1e-12);

  Polynomial p(2);
  p.add_term({0, 0}, 1.0);
  p.add_term({1, 0}, -1.0);
  p.add_term({0, 1}, -1.0);
  p.add_term({1, 1}, 1.0);  // (1 − λ1)(1 − λ2)
  const auto q1 = project_qi(h01_from_polynomial(p, {g3, g3}), 0);
  CHECK(std::abs(q1(w)) < 1e-12);

  CHECK_THROWS_AS(h01_from_function(1, CalculusKind::ritt, {g3},
                                    [](auto z) { return std::sin(1.0 / (1.0 - z[0])); }, {}, false),
                  LimitDivergenceError);
}

TEST_CASE("Q_J projections") {
  const auto f = h01_from_function(
      2, CalculusKind::ritt, {g3, g3}, [](auto z) { return 2.0 + (1.0 - z[0]) + (1.0 - z[0]) * (1.0 - z[1]); },
      {{VarSet::of({0}), ritt_cert(2, 1, {{0, 1}})}, {VarSet::of({0, 1}), ritt_cert(2, 1, {{0, 1}, {1, 1}})}},
      true);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t) {
    const cplx a = oracle::random_stolz_point(g3, rng, 0.05), b = oracle::random_stolz_point(g3, rng, 0.05);
    const cplx z[] = {a, b};
    CHECK(std::abs(project_QJ(f, VarSet{})(z) - 2.0) < 1e-8);
    CHECK(std::abs(project_QJ(f, VarSet::of({0}))(z) - (1.0 - a)) < 1e-8);
    CHECK(std::abs(project_QJ(f, VarSet::of({1}))(z)) < 1e-8);
    CHECK(std::abs(project_QJ(f, VarSet::of({0, 1}))(z) - (1.0 - a) * (1.0 - b)) < 1e-8);
  }

  Polynomial phi(2);
  phi.add_term({1, 1}, 1.0);
  const auto h = h01_from_polynomial(phi, {g3, g3});
  const cplx z[] = {cplx(0.3, 0.2), cplx(-0.4, 0.1)};
  CHECK(std::abs(h.constant_term - 1.0) < 1e-15);
  CHECK(std::abs(h.pieces.at(VarSet::of({0}))(z) - (z[0] - 1.0)) < 1e-14);
  CHECK(std::abs(h.pieces.at(VarSet::of({1}))(z) - (z[1] - 1.0)) < 1e-14);
  CHECK(std::abs(h.pieces.at(VarSet::of({0, 1}))(z) - (z[0] - 1.0) * (z[1] - 1.0)) < 1e-14);
  CHECK(std::abs(h.sum_of_pieces(z) - z[0] * z[1]) < 1e-14);
  // idempotence and annihilation on the numeric projections
  for (auto J : subsets_of(VarSet::full(2))) {
    const auto QJ = project_QJ(h, J);
    const auto again = project_QJ(h01_from_holo(QJ), J);
    CHECK(std::abs(again(z) - QJ(z)) < 1e-8);
    for (auto K : subsets_of(VarSet::full(2)))
      if (K != J && !J.empty()) CHECK(std::abs(project_QJ(h01_from_holo(QJ), K)(z)) < 1e-8);
  }

  const auto a = h01_constant(3, CalculusKind::ritt, {g3, g3, g3}, 2.5);
  const cplx w[] = {0.1, 0.2, 0.3};
  for (auto J : subsets_of(VarSet::full(3)))
    CHECK(std::abs(project_QJ(a, J)(w) - (J.empty() ? 2.5 : 0.0)) < 1e-12);
}

TEST_CASE("eval_h01 examples") {
  const ComplexMatrix T = oracle::conjugate_diag(
      (ComplexMatrix(2, 2) << 1, 0.5, 0.2, 1).finished(), {cplx(0.4, 0.2), cplx(-0.3, 0.0)});
  const CommutingTuple tup({T});
  CHECK(rel(eval_h01(tup, h01_constant(1, CalculusKind::ritt, {g3}, 2.0), CalculusKind::ritt), 2.0 * identity(2)) <
        1e-15);
  CHECK(rel(eval_h01(tup, make_catalog_function("ritt/identity", {g3}), CalculusKind::ritt), T) < 1e-9);

  const ComplexMatrix T2 = T * T - 0.2 * T;
  const CommutingTuple pair({T, T2});
  CHECK(rel(eval_h01(pair, make_catalog_function("ritt/product", {g3, g3}), CalculusKind::ritt), T * T2) < 1e-9);
}

TEST_CASE("eval_poly") {
  CHECK(rel(eval_poly(CommutingTuple({diag({1, 2})}), Polynomial::constant(1, 1.0)), identity(2)) == 0.0);
  Polynomial phi(2);
  phi.add_term({2, 1}, 1.0);
  CHECK(rel(eval_poly(CommutingTuple({diag({0.5, 0.3}), diag({0.2, 0.4})}), phi), diag({0.05, 0.036})) < 1e-15);
}

TEST_CASE("polynomial consistency") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 4; ++t) {
    const ComplexMatrix M = oracle::conjugate_diag(oracle::random_conditioned(3, 4.0, rng),
                                                   {cplx(0.5, 0.1), cplx(0.2, -0.3), cplx(-0.4, 0.0)});
    const CommutingTuple pair({M, 0.5 * M * M + 0.3 * M});
    const auto phi = Polynomial::random(2, 3, rng);
    const double gamma = (spectral_stolz_angle(M) + kPi / 2) / 2;
    const auto P = eval_poly(pair, phi);
    CHECK(rel(eval_h01(pair, h01_from_polynomial(phi, {gamma, gamma}), CalculusKind::ritt), P) < 1e-8);
  }
}

TEST_CASE("separable polynomial pieces match the product-grid quadrature") {
  std::mt19937_64 rng(12);
  const ComplexMatrix M = oracle::conjugate_diag(oracle::random_conditioned(2, 3.0, rng), {cplx(0.4, 0.1), -0.3});
  const CommutingTuple triple({M, M * M, 0.5 * M});
  const auto phi = Polynomial::random(3, 3, rng);
  const auto f = h01_from_polynomial(phi, {1.2, 1.2, 1.2});
  QuadratureOptions o;
  o.initial_nodes = 16;
  o.max_nodes = 16;
  for (const auto& [J, piece] : f.pieces) {
    CAPTURE(to_string(J));
    REQUIRE_FALSE(piece.shifted_terms.empty());
    auto brute = piece;
    brute.shifted_terms.clear();
    CHECK(rel(eval_h0(triple, piece, o), eval_h0(triple, brute, o)) < 1e-11);
  }
}

TEST_CASE("spectral mapping and contour independence") {
  std::mt19937_64 rng(5);
  const ComplexMatrix U = oracle::random_conditioned(3, 5.0, rng);
  const std::vector<cplx> ev{cplx(0.6, 0.2), cplx(0.1, -0.5), 0.9};
  const ComplexMatrix T = oracle::conjugate_diag(U, ev);
  const auto f = make_catalog_holo("ritt/resolvent-shift", {kPi / 2 - 0.05});
  const CommutingTuple tup({T});
  std::vector<cplx> fe;
  for (auto l : ev) fe.push_back((1.0 - l) / (2.0 - l));
  const ComplexMatrix expected = oracle::conjugate_diag(U, fe);
  const double a = spectral_stolz_angle(T), g = kPi / 2 - 0.05;
  QuadratureOptions o1, o2;
  o1.contour_angles = {a + 0.25 * (g - a)};
  o2.contour_angles = {a + 0.75 * (g - a)};
  const auto r1 = eval_h0(tup, f, o1), r2 = eval_h0(tup, f, o2);
  CHECK(rel(r1, expected) < 1e-9);
  CHECK(rel(r1, r2) < 1e-9);
  CHECK_THROWS_AS(eval_h0(tup, f, [&] {
                    QuadratureOptions o;
                    o.contour_angles = {a * 0.5};
                    return o;
                  }()),
                  DomainError);
}

TEST_CASE("subfamily restriction and linearity") {
  std::mt19937_64 rng(9);
  const ComplexMatrix M = oracle::conjugate_diag(oracle::random_conditioned(2, 3.0, rng), {0.3, cplx(0.2, 0.4)});
  const CommutingTuple pair({M, M * M});
  const auto f = make_catalog_holo("ritt/resolvent-shift", {g3});
  auto f2 = f;
  f2.arity = 2;
  f2.domain_angles = {g3, g3};
  f2.certificate = ritt_cert(2, 1, {{1, 1}});
  f2.active = VarSet::of({1});
  f2.eval = [f](std::span<const cplx> z) {
    const cplx w[] = {z[1]};
    return f(w);
  };
  CHECK(rel(eval_h0(pair, f2), eval_h0(CommutingTuple({M * M}), f)) < 1e-10);

  auto g = f;
  g.eval = [f](std::span<const cplx> z) { return cplx(2.0, -1.0) * f(z); };
  g.certificate->c *= std::abs(cplx(2.0, -1.0));
  const CommutingTuple one({M});
  CHECK(rel(eval_h0(one, g), cplx(2.0, -1.0) * eval_h0(one, f)) < 1e-10);
}

TEST_CASE("sup norms") {
  Polynomial z1(1);
  z1.add_term({1}, 1.0);
  CHECK(poly_supnorm(z1, {kPi / 4}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(poly_supnorm(Polynomial::constant(2, cplx(3, 4)), {g3, g3}) == doctest::Approx(5.0));
  Polynomial sq(1);
  sq.add_term({0}, 1.0);
  sq.add_term({1}, -2.0);
  sq.add_term({2}, 1.0);
  const double s = poly_supnorm(sq, {g3});
  // dense interior sampling never exceeds the boundary value
  double interior = 0.0;
  for (int i = 0; i < 400; ++i)
    for (int j = 0; j < 400; ++j) {
      const cplx z(-1.0 + 2.0 * i / 399, -1.0 + 2.0 * j / 399);
      if (domains::stolz_contains(g3, z)) interior = std::max(interior, std::norm(1.0 - z));
    }
  CHECK(interior <= s + 1e-9);
  CHECK(s == doctest::Approx(std::norm(1.0 + std::sin(g3))).epsilon(1e-4));
}

TEST_CASE("fc_bound_estimate") {
  FcBoundOptions o;
  o.trials = 10;
  const auto id = fc_bound_estimate(CommutingTuple({identity(2)}), o);
  CHECK(id.K_hat == doctest::Approx(1.0).epsilon(1e-12));
  std::mt19937_64 rng(2);
  const ComplexMatrix W = oracle::random_unitary(3, rng);
  const CommutingTuple normal({oracle::conjugate_diag(W, {cplx(0.5, 0.1), -0.3, cplx(0, 0.6)}),
                               oracle::conjugate_diag(W, {0.2, cplx(0.3, 0.3), -0.1})});
  const auto n = fc_bound_estimate(normal, o);
  CHECK(n.K_hat <= 1.0 + 1e-8);
  for (std::size_t i = 1; i < n.running_max.size(); ++i) CHECK(n.running_max[i] >= n.running_max[i - 1]);
  const auto nn = fc_bound_estimate(CommutingTuple({(ComplexMatrix(2, 2) << 0.5, 10, 0, 0.5).finished()}), o);
  CHECK(nn.K_hat > 1.0);
}

TEST_CASE("homomorphism") {
  const auto f = holo(1, VarSet::of({0}), [](auto z) { return 1.0 - z[0]; }, ritt_cert(1, 1, {{0, 1}}), {g3});
  const auto r = homomorphism_check(CommutingTuple({diag({0.5})}), f, f, CalculusKind::ritt);
  CHECK(r.residual < 1e-10);

  std::mt19937_64 rng(4);
  const ComplexMatrix M = oracle::conjugate_diag(oracle::random_conditioned(3, 3.0, rng),
                                                 {cplx(0.3, 0.2), -0.2, cplx(0.6, -0.1)});
  const CommutingTuple pair({M, 0.5 * M * M + 0.2 * M});
  const auto a = holo(2, VarSet::of({0}), [](auto z) { return (1.0 - z[0]) / (2.0 - z[0]); },
                      ritt_cert(2, 1, {{0, 1}}), {g3, g3});
  const auto b = holo(2, VarSet::of({1}), [](auto z) { return std::sqrt(1.0 - z[1]); }, ritt_cert(2, 1, {{1, 0.5}}),
                      {g3, g3}, false);
  CHECK(homomorphism_check(pair, a, b, CalculusKind::ritt).residual < 1e-7);
  const auto c = holo(2, VarSet::of({0, 1}), [](auto z) { return (1.0 - z[0]) * (1.0 - z[1]) / (3.0 - z[0] * z[1]); },
                      ritt_cert(2, 0.5, {{0, 1}, {1, 1}}), {g3, g3});
  const auto d = holo(2, VarSet::of({0, 1}), [](auto z) { return (1.0 - z[0]) * std::exp(z[1]) * (1.0 - z[1]); },
                      ritt_cert(2, std::exp(1.0), {{0, 1}, {1, 1}}), {g3, g3});
  CHECK(homomorphism_check(pair, c, d, CalculusKind::ritt).residual < 1e-7);
}

TEST_CASE("eval_regularized") {
  const ComplexMatrix T = (ComplexMatrix(2, 2) << 0.5, 0.3, 0, 0.2).finished();
  const CommutingTuple tup({T});
  CHECK(rel(eval_regularized(tup, make_catalog_function("ritt/identity", {g3}), 0.9), 0.9 * T) < 1e-9);
  CHECK(rel(eval_regularized(tup, h01_constant(1, CalculusKind::ritt, {g3}, 4.0), 0.5), 4.0 * identity(2)) < 1e-15);
  const auto sq = make_catalog_function("ritt/power", {g3}, {{"a", 0.5}});
  const CommutingTuple half({diag({0.5})});
  std::vector<double> err;
  for (double r : {0.9, 0.99, 0.999})
    err.push_back(std::abs(eval_regularized(half, sq, r)(0, 0) - std::sqrt(0.5)));
  CHECK(err[1] < err[0] / 5);
  CHECK(err[2] < err[1] / 5);
}
