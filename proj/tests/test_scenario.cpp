#include "hinf/scenario.hpp"

#include <doctest.h>

using namespace hinf;
using namespace hinf::scenario;

namespace {

Polynomial mono(int e, cplx c = 1.0) {
  Polynomial p(1);
  p.add_term({e}, c);
  return p;
}

ComplexMatrix diag(std::initializer_list<cplx> v) {
  ComplexVector x(v.size());
  Eigen::Index i = 0;
  for (auto z : v) x(i++) = z;
  return x.asDiagonal();
}

bool has_tolerance_provenance(const json& r) {
  if (!r.contains("versions") || !r.contains("tolerances")) return false;
  const auto& t = r["tolerances"];
  if (!t.contains("checks") || !t.contains("quadrature") || !t.contains("limits") || !t.contains("commutation"))
    return false;
  for (const auto& c : r["checks"])
    if (!c.contains("tol") || !c["tol"].is_number()) return false;
  return true;
}

}  // namespace

TEST_CASE("generate_commuting_tuple examples") {
  const ComplexMatrix M = diag({0.5, 0.3});
  const auto t = generate_commuting_tuple(M, {mono(1), mono(2)});
  REQUIRE(t.arity() == 2);
  CHECK((t[0] - M).norm() == 0.0);
  CHECK((t[1] - M * M).norm() == 0.0);

  const auto single = generate_commuting_tuple(M, {mono(3, 2.0)});
  CHECK(single.arity() == 1);
  CHECK((single[0] - diag({0.25, 0.054})).norm() < 1e-15);

  CHECK_THROWS_AS(generate_commuting_tuple(M, {}), ValidationError);
}

TEST_CASE("generated tuples commute and are deterministic") {
  GeneratorSpec g;
  g.type = "random";
  g.n = 4;
  g.polynomials = {mono(1), mono(2, 0.5), mono(3, cplx(0.1, 0.2))};
  const auto a = generate_commuting_tuple(seed_matrix(g, CalculusKind::ritt, 3), g.polynomials);
  const auto b = generate_commuting_tuple(seed_matrix(g, CalculusKind::ritt, 3), g.polynomials);
  CHECK(operators::commutator_check(a).max_relative < 1e-13);
  for (std::size_t k = 0; k < 3; ++k) CHECK((a[k] - b[k]).norm() == 0.0);
  CHECK(operators::spectral_radius(a[0]) < g.radius + 1e-9);
}

TEST_CASE("ritt-targeted generator lands inside the requested Stolz domains") {
  GeneratorSpec g;
  g.type = "ritt-targeted";
  g.n = 3;
  g.radius = 0.8;
  g.alphas = {0.4, 0.7, 1.1};
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = resolve_generator(g, seed);
    REQUIRE(r.polynomials.size() == 3);
    const auto t = generate_commuting_tuple(seed_matrix(r, CalculusKind::ritt, seed), r.polynomials);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(funcalc::spectral_stolz_angle(t[k]) < g.alphas[k]);
      const auto rep = operators::classify_ritt(t[k]);
      CHECK(rep.verdict == operators::Verdict::ritt);
    }
  }
}

TEST_CASE("builtin poly-consistency-d2 passes") {
  const auto r = run_scenario(builtin_scenario("poly-consistency-d2"));
  CHECK(r["pass"].get<bool>());
  CHECK(r["checks"].size() == 2);
  CHECK(r["checks"][0]["residual"].get<double>() <= 1e-7);
  CHECK(has_tolerance_provenance(r));
}

TEST_CASE("every builtin scenario passes with tolerance provenance") {
  for (const auto& s : builtin_scenarios()) {
    CAPTURE(s.name);
    const auto r = run_scenario(s);
    CHECK(r["pass"].get<bool>());
    CHECK(has_tolerance_provenance(r));
    CHECK_FALSE(r.contains("timings"));
  }
}

TEST_CASE("reports are byte-identical across runs") {
  const auto& s = builtin_scenario("spectral-mapping-ritt-d2");
  CHECK(dump_report(run_scenario(s)) == dump_report(run_scenario(s)));
  const auto t = run_scenario(s, {.timings = true});
  CHECK(t["timings"].contains("total"));
}

TEST_CASE("scenario JSON round trip is stable") {
  for (const auto& s : builtin_scenarios()) {
    CAPTURE(s.name);
    const auto j = s.to_json();
    const auto back = Scenario::from_json(j);
    CHECK(back.to_json().dump() == j.dump());
    CHECK(dump_report(run_scenario(back)) == dump_report(run_scenario(s)));
  }
  Scenario e;
  e.name = "explicit";
  e.matrices = {diag({0.5, cplx(0.1, 0.2)}), diag({0.3, 0.4})};
  e.function.catalog = "ritt/product";
  e.angles = {1.2, 1.2};
  e.checks = {"spectral_mapping"};
  const auto j = e.to_json();
  CHECK(Scenario::from_json(j).to_json().dump() == j.dump());
  const auto r = run_scenario(e);
  CHECK(r["pass"].get<bool>());
}

TEST_CASE("validation errors name the offending field") {
  auto j = builtin_scenario("poly-consistency-d2").to_json();
  j.erase("generator");
  j["matrices"] = json::array({matrix_to_json(diag({0.1, 0.2})), matrix_to_json(diag({0.3, 0.4}))});
  CHECK_NOTHROW(Scenario::from_json(j));

  auto bad = j;
  bad["matrices"][1]["entries"][0][1] = "x";
  try {
    Scenario::from_json(bad);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.path() == "matrices[1].entries[0][1]");
  }

  auto check_path = [](json doc, const std::string& expected) {
    try {
      Scenario::from_json(doc);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(e.path() == expected);
    }
  };
  auto u = j;
  u["tolerances"]["poly_consistency"] = -1.0;
  check_path(u, "tolerances.poly_consistency");
  u = j;
  u["checks"] = json::array({"poly_consistency", "telepathy"});
  check_path(u, "checks[1]");
  u = j;
  u["function"] = {{"catalog", "ritt/unknown"}};
  check_path(u, "function.catalog");
  u = j;
  u["quadrature"]["grading_ratio"] = 2.0;
  check_path(u, "quadrature.grading_ratio");
  u = j;
  u["colour"] = "blue";
  check_path(u, "colour");
  u = j;
  u["generator"] = {{"type", "random"}, {"polynomials", json::array()}};
  check_path(u, "matrices");

  auto s = Scenario::from_json(j);
  s.angles = {1.0};
  CHECK_THROWS_AS(run_scenario(s), ValidationError);
}

TEST_CASE("failing checks are reported, not thrown") {
  auto s = builtin_scenario("poly-consistency-d2");
  s.tolerances.poly_consistency = 1e-300;
  const auto r = run_scenario(s);
  CHECK_FALSE(r["pass"].get<bool>());
  CHECK_FALSE(r["checks"][0]["pass"].get<bool>());
  CHECK(r["checks"][1]["pass"].get<bool>());
}
