#include "hinf/domains.hpp"
#include "hinf/quadrature.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace hinf;
using namespace hinf::domains;

TEST_CASE("Gauss–Legendre integrates polynomials exactly") {
  for (int n : {1, 2, 5, 16, 64}) {
    const auto& g = gauss_legendre(n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.nodes[i], k);
      const double exact = (k % 2 == 1) ? 0.0 : 2.0 / (k + 1);
      CHECK(s == doctest::Approx(exact).epsilon(1e-13));
    }
  }
}

TEST_CASE("Stolz boundary arc length matches the perimeter") {
  for (int k = 1; k <= 5; ++k) {
    const double gamma = k * kPi / 12;
    const auto c = stolz_boundary(gamma, 64);
    CHECK(c.piece_count == 3);
    CHECK(c.total_weight() == doctest::Approx(oracle::stolz_perimeter(gamma)).epsilon(1e-12));
  }
  const StolzDomain dom(kPi / 6);
  CHECK(dom.segment_length() == doctest::Approx(0.8660254037844386).epsilon(1e-15));
}

TEST_CASE("Cauchy integral of an enclosed point") {
  const auto c = stolz_boundary(kPi / 3, 64);
  const cplx v = cauchy_integral(c, 0.2);
  CHECK(std::abs(v - 1.0) < 1e-12);
  CHECK(std::abs(cauchy_integral(c, 1.5)) < 1e-12);
  CHECK(std::abs(cauchy_integral(c, cplx(-1.0, 1.0))) < 1e-10);
}

TEST_CASE("contour orientation is counterclockwise") {
  // (1/2i)∮ z̄ dz = enclosed area > 0
  const auto c = stolz_boundary(kPi / 4, 64);
  cplx s = 0.0;
  for (const auto& n : c.nodes) s += std::conj(n.z) * n.w;
  const double area = (s / (2.0 * kI)).real();
  CHECK(area > 0.0);
  const double g = kPi / 4, r = std::sin(g);
  // Disc sector outside the chord plus the kite of the tangents.
  const double exact = r * r * (kPi + 2 * g) / 2 + r * std::cos(g);
  CHECK(area == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("stolz_contains agrees with the support-function oracle") {
  CHECK(stolz_contains(kPi / 4, 0.0));
  CHECK_FALSE(stolz_contains(kPi / 4, 1.0));
  CHECK(stolz_contains(kPi / 6, 0.9) == oracle::stolz_interior(kPi / 6, 0.9));
  CHECK(stolz_contains(kPi / 6, 0.9));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int k = 1; k <= 5; ++k) {
    const double gamma = k * kPi / 12;
    const StolzDomain dom(gamma);
    for (int t = 0; t < 300; ++t) {
      const cplx z(u(rng), u(rng));
      if (dom.boundary_distance(z) < 1e-3) continue;
      CHECK(dom.contains(z) == oracle::stolz_interior(gamma, z));
    }
  }
  CHECK_THROWS_AS(StolzDomain(0.0), DomainError);
  CHECK_THROWS_AS(StolzDomain(kPi / 2), DomainError);
  CHECK_THROWS_AS(stolz_boundary(2.0, 16), DomainError);
}

TEST_CASE("annulus_index") {
  CHECK(annulus_index(0.7, 0.5, 2.0) == 0);
  CHECK(annulus_index(1.0 - 0.25, 0.5, 2.0) == 0);
  const double l = std::cos(kPi / 3);
  CHECK(annulus_index(0.9, l, 1.5) == static_cast<int>(std::floor(std::log(l / 0.1) / std::log(1.5))));
  CHECK_THROWS_AS(annulus_index(0.2, 0.5, 2.0), DomainError);
  CHECK_THROWS_AS(annulus_index(1.0, 0.5, 2.0), DivergenceError);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-12.0, 0.0);
  for (int k = 0; k < 500; ++k) {
    const double rho = 1.1 + 0.1 * (k % 9);
    const double t = l * std::pow(10.0, u(rng) / 3.0);
    const int r = annulus_index(1.0 - t, l, rho);
    CHECK(r == oracle::annulus_scan(t, l, rho));
  }
  // exact dyadic endpoints go to the smaller index
  for (int r = 0; r < 10; ++r) CHECK(annulus_index(1.0 - 0.5 * std::pow(2.0, -r - 1), 0.5, 2.0) == r);
}

TEST_CASE("sector truncation") {
  const auto t1 = sector_truncation(1.0, 1.0, 1e-10);
  CHECK(t1.tail_bound < 1e-10);
  CHECK(std::isfinite(t1.R));
  // Analytic tail: (1/π)(arctan ε + arctan 1/R) for s = 1.
  CHECK(t1.tail_bound == doctest::Approx((std::atan(t1.eps) + std::atan(1 / t1.R)) / kPi));
  const auto th = sector_truncation(0.5, 1.0, 1e-10);
  CHECK(th.R > t1.R);
  CHECK(th.eps < t1.eps);
  const auto zero = sector_truncation(1.0, 0.0, 1e-10);
  CHECK(zero.R == 0.0);
  CHECK(sector_contour(kPi / 4, zero, {}).nodes.empty());
  CHECK_THROWS_AS(sector_truncation(0.0, 1.0, 1e-10), CertificateError);

  DecayCertificate cert{CalculusKind::sectorial, 1.0, {1.0}};
  const auto c = sector_boundary(kPi / 4, cert, 0, 1e-10, 1.0);
  // Cauchy reproduction for f(z) = z/(1+z)^2 at a = 2: (1/2πi)∮ f(z)/(z − a) dz = f(a)
  const cplx a = 2.0;
  const cplx v = c.integrate([&](cplx z) { return z / ((1.0 + z) * (1.0 + z)) / (z - a); }) / (2.0 * kPi * kI);
  CHECK(std::abs(v - 2.0 / 9.0) < 1e-9);
  cert.exponents = {0.0};
  CHECK_THROWS_AS(sector_boundary(kPi / 4, cert, 0, 1e-10), CertificateError);
}

TEST_CASE("adaptive Cauchy reproduction inside and outside") {
  std::mt19937_64 rng(5);
  for (int k = 1; k <= 5; ++k) {
    const double gamma = k * kPi / 12;
    for (int t = 0; t < 4; ++t) {
      const cplx a = oracle::random_stolz_point(gamma, rng, 0.02);
      const auto res = integrate_adaptive([&](int n) { return stolz_boundary(gamma, n); },
                                          [&](cplx z) { return 1.0 / (z - a); }, 1e-12, 16, 4096);
      CHECK(std::abs(res.value / (2.0 * kPi * kI) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("graded contour keeps the perimeter and integrates |1-z|^{-1/2}") {
  StolzContourOptions o;
  o.nodes_per_piece = 32;
  o.grading_levels = 30;
  const auto c = stolz_contour(kPi / 4, o);
  CHECK(c.total_weight() == doctest::Approx(oracle::stolz_perimeter(kPi / 4)).epsilon(1e-12));
  // ∫_{Γ₁} |1−z|^{-1/2} |dz| = 2 √l
  const double l = std::cos(kPi / 4);
  double s = 0.0;
  for (const auto& n : c.nodes)
    if (n.piece <= 30) s += std::abs(n.w) / std::sqrt(std::abs(1.0 - n.z));
  CHECK(s == doctest::Approx(2 * std::sqrt(l)).epsilon(1e-6));
}

TEST_CASE("contour JSON export") {
  const auto c = stolz_boundary(kPi / 4, 2);
  const auto j = contour_to_json(c);
  CHECK(j.size() == 6);
  CHECK(j[0].contains("z"));
  CHECK(j[0]["w"].size() == 2);
  CHECK(j[5]["piece"] == 2);
}
