#include "hinf/scenario.hpp"

#include "hinf/dilation.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <set>

namespace hinf::scenario {

namespace {

void reject_unknown_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError(path.empty() ? key : path + "." + key, "unknown field");
  }
}

double get_number(const json& j, const std::string& key, const std::string& path, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ValidationError(path + "." + key, "must be a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) throw ValidationError(path + "." + key, "must be finite");
  return v;
}

long long get_integer(const json& j, const std::string& key, const std::string& path, long long fallback,
                      long long min) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw ValidationError(path + "." + key, "must be an integer");
  const auto v = j[key].get<long long>();
  if (v < min) throw ValidationError(path + "." + key, "must be at least " + std::to_string(min));
  return v;
}

std::vector<double> get_doubles(const json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path, "must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(path + "[" + std::to_string(i) + "]", "must be a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

double positive(double v, const std::string& path) {
  if (!(v > 0.0)) throw ValidationError(path, "must be positive");
  return v;
}

json quadrature_to_json(const funcalc::QuadratureOptions& q) { return funcalc::to_json(q); }

funcalc::QuadratureOptions quadrature_from_json(const json& j, const std::string& path) {
  reject_unknown_keys(j, path,
                      {"initial_nodes", "max_nodes", "rel_tol", "max_product_nodes", "max_active", "tail_tol",
                       "grading_ratio"});
  funcalc::QuadratureOptions q;
  q.initial_nodes = static_cast<int>(get_integer(j, "initial_nodes", path, q.initial_nodes, 2));
  q.max_nodes = static_cast<int>(get_integer(j, "max_nodes", path, q.max_nodes, q.initial_nodes));
  q.rel_tol = positive(get_number(j, "rel_tol", path, q.rel_tol), path + ".rel_tol");
  q.max_product_nodes =
      static_cast<std::size_t>(get_integer(j, "max_product_nodes", path, static_cast<long long>(q.max_product_nodes), 1));
  q.max_active = static_cast<std::size_t>(get_integer(j, "max_active", path, static_cast<long long>(q.max_active), 1));
  q.tail_tol = positive(get_number(j, "tail_tol", path, q.tail_tol), path + ".tail_tol");
  q.grading_ratio = get_number(j, "grading_ratio", path, q.grading_ratio);
  if (!(q.grading_ratio > 0.0 && q.grading_ratio < 1.0))
    throw ValidationError(path + ".grading_ratio", "must lie in (0, 1)");
  return q;
}

double rel_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  return operator_norm(a - b) / std::max(operator_norm(b), 1e-300);
}

// Random invertible W with singular values spread geometrically from 1 to 1/cond.
ComplexMatrix conditioned_basis(Eigen::Index n, double cond, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix A(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) A(i, k) = cplx(g(rng), g(rng));
  Eigen::JacobiSVD<ComplexMatrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i)
    s(i) = n == 1 ? 1.0 : std::pow(cond, -static_cast<double>(i) / static_cast<double>(n - 1));
  return svd.matrixU() * s.cast<cplx>().asDiagonal() * svd.matrixV().adjoint();
}

}  // namespace

// ---------------------------------------------------------------- serialization

json GeneratorSpec::to_json() const {
  json j;
  j["type"] = type;
  j["n"] = n;
  if (!eigenvalues.empty()) {
    json ev = json::array();
    for (auto z : eigenvalues) ev.push_back(complex_to_json(z));
    j["eigenvalues"] = ev;
  }
  if (type == "jordan") j["eigenvalue"] = complex_to_json(eigenvalue);
  if (type == "random" || type == "ritt-targeted") {
    j["radius"] = radius;
    j["cond"] = cond;
    j["sector"] = sector;
  }
  if (!polynomials.empty()) {
    json ps = json::array();
    for (const auto& p : polynomials) ps.push_back(p.to_json());
    j["polynomials"] = ps;
  }
  if (!alphas.empty()) j["alphas"] = alphas;
  return j;
}

GeneratorSpec GeneratorSpec::from_json(const json& j, const std::string& path) {
  reject_unknown_keys(j, path,
                      {"type", "n", "eigenvalues", "eigenvalue", "radius", "cond", "sector", "polynomials", "alphas"});
  GeneratorSpec g;
  if (!j.contains("type") || !j["type"].is_string()) throw ValidationError(path + ".type", "must be a string");
  g.type = j["type"].get<std::string>();
  if (g.type != "diagonal" && g.type != "jordan" && g.type != "random" && g.type != "ritt-targeted")
    throw ValidationError(path + ".type", "must be diagonal, jordan, random or ritt-targeted");
  g.n = static_cast<Eigen::Index>(get_integer(j, "n", path, g.n, 1));
  if (j.contains("eigenvalues")) {
    if (!j["eigenvalues"].is_array()) throw ValidationError(path + ".eigenvalues", "must be an array");
    for (std::size_t i = 0; i < j["eigenvalues"].size(); ++i)
      g.eigenvalues.push_back(
          complex_from_json(j["eigenvalues"][i], path + ".eigenvalues[" + std::to_string(i) + "]"));
    if (!g.eigenvalues.empty()) g.n = static_cast<Eigen::Index>(g.eigenvalues.size());
  }
  if (g.type == "diagonal" && g.eigenvalues.empty())
    throw ValidationError(path + ".eigenvalues", "required for a diagonal generator");
  if (j.contains("eigenvalue")) g.eigenvalue = complex_from_json(j["eigenvalue"], path + ".eigenvalue");
  g.radius = positive(get_number(j, "radius", path, g.radius), path + ".radius");
  g.cond = get_number(j, "cond", path, g.cond);
  if (!(g.cond >= 1.0)) throw ValidationError(path + ".cond", "must be at least 1");
  g.sector = get_number(j, "sector", path, g.sector);
  if (!(g.sector >= 0.0 && g.sector < kPi)) throw ValidationError(path + ".sector", "must lie in [0, π)");
  if (j.contains("polynomials")) {
    if (!j["polynomials"].is_array()) throw ValidationError(path + ".polynomials", "must be an array");
    for (std::size_t i = 0; i < j["polynomials"].size(); ++i) {
      const std::string pp = path + ".polynomials[" + std::to_string(i) + "]";
      auto p = Polynomial::from_json(j["polynomials"][i], pp);
      if (p.arity() != 1) throw ValidationError(pp + ".arity", "generator polynomials are one-variable");
      g.polynomials.push_back(std::move(p));
    }
  }
  if (j.contains("alphas")) {
    g.alphas = get_doubles(j["alphas"], path + ".alphas");
    for (std::size_t i = 0; i < g.alphas.size(); ++i)
      if (!(g.alphas[i] > 0.0 && g.alphas[i] < kPi / 2))
        throw ValidationError(path + ".alphas[" + std::to_string(i) + "]", "must lie in (0, π/2)");
  }
  if (g.type == "ritt-targeted") {
    if (g.alphas.empty()) throw ValidationError(path + ".alphas", "required for a ritt-targeted generator");
    if (!g.polynomials.empty() && g.polynomials.size() != g.alphas.size())
      throw ValidationError(path + ".polynomials", "length must equal the number of alphas");
  } else if (g.polynomials.empty()) {
    throw ValidationError(path + ".polynomials", "at least one polynomial is required");
  }
  return g;
}

json FunctionSpec::to_json() const {
  json j;
  if (!catalog.empty()) {
    j["catalog"] = catalog;
    json p = json::object();
    for (const auto& [k, v] : params) p[k] = v;
    j["params"] = p;
  } else if (polynomial) {
    j["polynomial"] = polynomial->to_json();
  } else {
    j["random_polynomial"] = {{"degree", random_degree}};
  }
  return j;
}

FunctionSpec FunctionSpec::from_json(const json& j, const std::string& path) {
  reject_unknown_keys(j, path, {"catalog", "params", "polynomial", "random_polynomial"});
  FunctionSpec f;
  const int sources = static_cast<int>(j.contains("catalog")) + static_cast<int>(j.contains("polynomial")) +
                      static_cast<int>(j.contains("random_polynomial"));
  if (sources != 1)
    throw ValidationError(path, "exactly one of \"catalog\", \"polynomial\", \"random_polynomial\" is required");
  if (j.contains("catalog")) {
    if (!j["catalog"].is_string()) throw ValidationError(path + ".catalog", "must be a string");
    f.catalog = j["catalog"].get<std::string>();
    try {
      (void)funcalc::catalog_entry(f.catalog);
    } catch (const std::exception&) {
      throw ValidationError(path + ".catalog", "unknown catalog id \"" + f.catalog + "\"");
    }
    if (j.contains("params")) {
      if (!j["params"].is_object()) throw ValidationError(path + ".params", "must be an object");
      for (const auto& [k, v] : j["params"].items()) {
        if (!v.is_number()) throw ValidationError(path + ".params." + k, "must be a number");
        f.params[k] = v.get<double>();
      }
    }
  } else if (j.contains("params")) {
    throw ValidationError(path + ".params", "only valid with \"catalog\"");
  }
  if (j.contains("polynomial")) f.polynomial = Polynomial::from_json(j["polynomial"], path + ".polynomial");
  if (j.contains("random_polynomial")) {
    const std::string rp = path + ".random_polynomial";
    reject_unknown_keys(j["random_polynomial"], rp, {"degree"});
    f.random_degree = static_cast<int>(get_integer(j["random_polynomial"], "degree", rp, 0, 1));
    if (f.random_degree == 0) throw ValidationError(rp + ".degree", "required");
  }
  return f;
}

json Tolerances::to_json() const {
  return {{"poly_consistency", poly_consistency},
          {"spectral_mapping", spectral_mapping},
          {"contour_independence", contour_independence},
          {"max_eigenvector_condition", max_eigenvector_condition}};
}

Tolerances Tolerances::from_json(const json& j, const std::string& path) {
  reject_unknown_keys(j, path,
                      {"poly_consistency", "spectral_mapping", "contour_independence", "max_eigenvector_condition"});
  Tolerances t;
  t.poly_consistency = positive(get_number(j, "poly_consistency", path, t.poly_consistency), path + ".poly_consistency");
  t.spectral_mapping = positive(get_number(j, "spectral_mapping", path, t.spectral_mapping), path + ".spectral_mapping");
  t.contour_independence =
      positive(get_number(j, "contour_independence", path, t.contour_independence), path + ".contour_independence");
  t.max_eigenvector_condition = positive(
      get_number(j, "max_eigenvector_condition", path, t.max_eigenvector_condition), path + ".max_eigenvector_condition");
  return t;
}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"poly_consistency", "spectral_mapping", "contour_independence",
                                              "classify", "commutation"};
  return names;
}

json Scenario::to_json() const {
  json j;
  j["name"] = name;
  j["seed"] = seed;
  j["kind"] = hinf::to_string(kind);
  if (generator) {
    j["generator"] = generator->to_json();
  } else {
    json ms = json::array();
    for (const auto& m : matrices) ms.push_back(matrix_to_json(m));
    j["matrices"] = ms;
  }
  j["function"] = function.to_json();
  if (!angles.empty()) j["angles"] = angles;
  j["contour_fractions"] = contour_fractions;
  j["quadrature"] = quadrature_to_json(quadrature);
  j["tolerances"] = tolerances.to_json();
  j["checks"] = checks;
  return j;
}

Scenario Scenario::from_json(const json& j) {
  reject_unknown_keys(j, "", {"name", "seed", "kind", "matrices", "generator", "function", "angles",
                              "contour_fractions", "quadrature", "tolerances", "checks"});
  Scenario s;
  if (!j.contains("name") || !j["name"].is_string() || j["name"].get<std::string>().empty())
    throw ValidationError("name", "must be a non-empty string");
  s.name = j["name"].get<std::string>();
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ValidationError("seed", "must be a non-negative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) throw ValidationError("kind", "must be \"ritt\" or \"sectorial\"");
    try {
      s.kind = calculus_kind_from_string(j["kind"].get<std::string>());
    } catch (const std::exception&) {
      throw ValidationError("kind", "must be \"ritt\" or \"sectorial\"");
    }
  }
  if (j.contains("matrices") == j.contains("generator"))
    throw ValidationError("matrices", "exactly one of \"matrices\" and \"generator\" is required");
  if (j.contains("matrices")) {
    if (!j["matrices"].is_array() || j["matrices"].empty())
      throw ValidationError("matrices", "must be a non-empty array");
    for (std::size_t i = 0; i < j["matrices"].size(); ++i)
      s.matrices.push_back(matrix_from_json(j["matrices"][i], "matrices[" + std::to_string(i) + "]"));
    for (std::size_t i = 1; i < s.matrices.size(); ++i)
      if (s.matrices[i].rows() != s.matrices[0].rows())
        throw ValidationError("matrices[" + std::to_string(i) + "]", "dimension differs from matrices[0]");
  } else {
    s.generator = GeneratorSpec::from_json(j["generator"], "generator");
  }
  if (!j.contains("function")) throw ValidationError("function", "required");
  s.function = FunctionSpec::from_json(j["function"], "function");
  if (j.contains("angles")) s.angles = get_doubles(j["angles"], "angles");
  if (j.contains("contour_fractions")) {
    s.contour_fractions = get_doubles(j["contour_fractions"], "contour_fractions");
    if (s.contour_fractions.size() != 2)
      throw ValidationError("contour_fractions", "exactly two fractions are required");
    for (std::size_t i = 0; i < 2; ++i)
      if (!(s.contour_fractions[i] > 0.0 && s.contour_fractions[i] < 1.0))
        throw ValidationError("contour_fractions[" + std::to_string(i) + "]", "must lie in (0, 1)");
  }
  if (j.contains("quadrature")) s.quadrature = quadrature_from_json(j["quadrature"], "quadrature");
  if (j.contains("tolerances")) s.tolerances = Tolerances::from_json(j["tolerances"], "tolerances");
  if (!j.contains("checks") || !j["checks"].is_array() || j["checks"].empty())
    throw ValidationError("checks", "must be a non-empty array");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < j["checks"].size(); ++i) {
    const std::string cp = "checks[" + std::to_string(i) + "]";
    if (!j["checks"][i].is_string()) throw ValidationError(cp, "must be a string");
    auto c = j["checks"][i].get<std::string>();
    const auto& known = known_checks();
    if (std::find(known.begin(), known.end(), c) == known.end()) throw ValidationError(cp, "unknown check \"" + c + "\"");
    if (!seen.insert(c).second) throw ValidationError(cp, "duplicate check \"" + c + "\"");
    s.checks.push_back(std::move(c));
  }
  return s;
}

// ---------------------------------------------------------------- tuples

CommutingTuple generate_commuting_tuple(const ComplexMatrix& M, const std::vector<Polynomial>& polynomials) {
  if (polynomials.empty()) throw ValidationError("polynomials", "at least one polynomial is required");
  const CommutingTuple single({M});
  std::vector<ComplexMatrix> out;
  for (std::size_t k = 0; k < polynomials.size(); ++k) {
    if (polynomials[k].arity() != 1)
      throw ValidationError("polynomials[" + std::to_string(k) + "].arity", "must be 1");
    out.push_back(funcalc::eval_poly(single, polynomials[k]));
  }
  return CommutingTuple(std::move(out));
}

ComplexMatrix seed_matrix(const GeneratorSpec& g, CalculusKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (g.type == "diagonal") {
    ComplexVector v(static_cast<Eigen::Index>(g.eigenvalues.size()));
    for (std::size_t i = 0; i < g.eigenvalues.size(); ++i) v(static_cast<Eigen::Index>(i)) = g.eigenvalues[i];
    return v.asDiagonal();
  }
  if (g.type == "jordan") {
    ComplexMatrix J = g.eigenvalue * identity(g.n);
    for (Eigen::Index i = 0; i + 1 < g.n; ++i) J(i, i + 1) = 1.0;
    return J;
  }
  ComplexVector ev(g.n);
  for (Eigen::Index i = 0; i < g.n; ++i) {
    if (!g.eigenvalues.empty()) {
      ev(i) = g.eigenvalues[static_cast<std::size_t>(i)];
    } else if (kind == CalculusKind::sectorial && g.type == "random") {
      const double r = 0.2 * std::pow(10.0, u(rng));
      ev(i) = std::polar(r, g.sector * (2.0 * u(rng) - 1.0));
    } else {
      ev(i) = std::polar(g.radius * std::sqrt(u(rng)), 2.0 * kPi * u(rng));
    }
  }
  const ComplexMatrix W = conditioned_basis(g.n, g.cond, rng);
  return W * ev.asDiagonal() * W.inverse();
}

GeneratorSpec resolve_generator(const GeneratorSpec& g, std::uint64_t seed) {
  if (g.type != "ritt-targeted" || !g.polynomials.empty()) return g;
  GeneratorSpec out = g;
  std::mt19937_64 rng(seed ^ 0x5deece66dULL);
  std::normal_distribution<double> nd;
  const double r = g.radius;
  for (std::size_t k = 0; k < g.alphas.size(); ++k) {
    // p_k(z) = a z + b z^{k+2}; |p_k| ≤ 0.9 sin α_k on D(0, r) ⊂ D(0, 1) keeps the spectrum inside B_{α_k}.
    const cplx a(nd(rng), nd(rng)), b(nd(rng), nd(rng));
    const int e = static_cast<int>(k) + 2;
    const double scale = 0.9 * std::sin(g.alphas[k]) / (std::abs(a) * r + std::abs(b) * std::pow(r, e));
    Polynomial p(1);
    p.add_term({1}, scale * a);
    p.add_term({e}, scale * b);
    out.polynomials.push_back(std::move(p));
  }
  return out;
}

CommutingTuple build_tuple(const Scenario& s) {
  if (!s.generator) return CommutingTuple(s.matrices);
  if (s.generator->type == "ritt-targeted" && s.generator->radius >= 1.0)
    throw ValidationError("generator.radius", "a ritt-targeted seed spectrum must lie in D(0, 1)");
  const auto g = resolve_generator(*s.generator, s.seed);
  return generate_commuting_tuple(seed_matrix(g, s.kind, s.seed), g.polynomials);
}

namespace {

std::vector<double> spectral_angles(const CommutingTuple& tuple, CalculusKind kind) {
  std::vector<double> a;
  for (const auto& T : tuple.matrices())
    a.push_back(kind == CalculusKind::ritt ? funcalc::spectral_stolz_angle(T) : funcalc::spectral_sector_angle(T));
  return a;
}

std::vector<double> resolve_angles(const Scenario& s, const CommutingTuple& tuple) {
  const auto spec = spectral_angles(tuple, s.kind);
  if (!s.angles.empty()) {
    if (s.angles.size() != tuple.arity())
      throw ValidationError("angles", "length " + std::to_string(s.angles.size()) + " differs from the tuple arity " +
                                          std::to_string(tuple.arity()));
    for (std::size_t i = 0; i < spec.size(); ++i)
      if (!(s.angles[i] > spec[i]))
        throw ValidationError("angles[" + std::to_string(i) + "]", "must exceed the spectral angle " +
                                                                      std::to_string(spec[i]));
    return s.angles;
  }
  const double top = s.kind == CalculusKind::ritt ? kPi / 2 : kPi;
  std::vector<double> out;
  for (double a : spec) out.push_back(0.5 * (a + top));
  return out;
}

Polynomial resolve_polynomial(const Scenario& s, std::size_t arity) {
  if (s.function.polynomial) {
    if (s.function.polynomial->arity() != arity)
      throw ValidationError("function.polynomial.arity", "must equal the tuple arity " + std::to_string(arity));
    return *s.function.polynomial;
  }
  std::mt19937_64 rng(s.seed ^ 0x9e3779b97f4a7c15ULL);
  return Polynomial::random(arity, s.function.random_degree, rng);
}

funcalc::H01Fn make_function(const Scenario& s, std::size_t arity, const std::vector<double>& angles) {
  if (!s.function.catalog.empty()) {
    const auto& e = funcalc::catalog_entry(s.function.catalog);
    if (e.arity != arity)
      throw ValidationError("function.catalog", s.function.catalog + " takes " + std::to_string(e.arity) +
                                                    " variables, the tuple has " + std::to_string(arity));
    if (e.kind != s.kind) throw ValidationError("function.catalog", s.function.catalog + " is not of kind " +
                                                                        hinf::to_string(s.kind));
    return funcalc::make_catalog_function(s.function.catalog, angles, s.function.params);
  }
  if (s.kind != CalculusKind::ritt)
    throw ValidationError("function", "polynomials are bounded only on Stolz domains; use kind \"ritt\"");
  return funcalc::h01_from_polynomial(resolve_polynomial(s, arity), angles);
}

json check_entry(const std::string& name, bool pass, double residual, double tol) {
  return {{"name", name}, {"pass", pass}, {"residual", residual}, {"tol", tol}};
}

}  // namespace

funcalc::H01Fn build_function(const Scenario& s, std::size_t arity) {
  const auto tuple = build_tuple(s);
  if (tuple.arity() != arity) throw ValidationError("function", "arity mismatch");
  return make_function(s, arity, resolve_angles(s, tuple));
}

double spectral_mapping_residual(const CommutingTuple& tuple, const funcalc::H01Fn& f, const ComplexMatrix& fT,
                                 double max_condition) {
  const ComplexMatrix W = dilation::joint_eigenbasis(tuple, 17);
  Eigen::JacobiSVD<ComplexMatrix> svd(W);
  const auto& sv = svd.singularValues();
  const double cond = sv(0) / sv(sv.size() - 1);
  if (!(cond <= max_condition))
    throw ValidationError("matrices", "tuple is not diagonalizable within the eigenvector condition limit (" +
                                          std::to_string(cond) + ")");
  const ComplexMatrix Winv = W.inverse();
  const auto n = tuple.dim();
  std::vector<ComplexVector> lambda;
  for (const auto& T : tuple.matrices()) {
    const ComplexMatrix D = Winv * T * W;
    const ComplexMatrix off = D - ComplexMatrix(D.diagonal().asDiagonal());
    if (operator_norm(off) > 1e-8 * std::max(1.0, operator_norm(T)) * cond)
      throw ValidationError("matrices", "tuple is not jointly diagonalizable");
    lambda.push_back(D.diagonal());
  }
  ComplexVector fd(n);
  std::vector<cplx> z(tuple.arity());
  for (Eigen::Index k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < tuple.arity(); ++i) z[i] = lambda[i](k);
    fd(k) = f(z);
  }
  return rel_diff(fT, W * fd.asDiagonal() * Winv);
}

json run_scenario(const Scenario& s, const RunOptions& opts) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  json timings = json::object();

  const auto tuple = build_tuple(s);
  const auto angles = resolve_angles(s, tuple);
  const auto f = make_function(s, tuple.arity(), angles);
  const auto spec = spectral_angles(tuple, s.kind);

  json report;
  report["scenario"] = s.to_json();
  report["versions"] = {{"library", kLibraryVersion}, {"tolerance_schema", kToleranceSchema}};
  report["tolerances"] = {{"checks", s.tolerances.to_json()},
                          {"quadrature", funcalc::to_json(s.quadrature)},
                          {"limits", funcalc::to_json(f.limits)},
                          {"commutation", tuple.commutation_tol()}};
  json resolved;
  resolved["arity"] = tuple.arity();
  resolved["dim"] = tuple.dim();
  resolved["domain_angles"] = angles;
  resolved["spectral_angles"] = spec;
  if (s.generator) {
    const auto g = resolve_generator(*s.generator, s.seed);
    json ps = json::array();
    for (const auto& p : g.polynomials) ps.push_back(p.to_json());
    resolved["polynomials"] = ps;
  }
  if (s.function.random_degree > 0) resolved["function_polynomial"] = resolve_polynomial(s, tuple.arity()).to_json();
  json ms = json::array();
  for (const auto& m : tuple.matrices()) ms.push_back(matrix_to_json(m));
  resolved["matrices"] = ms;
  report["resolved"] = resolved;

  std::optional<ComplexMatrix> fT;
  json eval_report;
  auto contour_eval = [&]() -> const ComplexMatrix& {
    if (!fT) {
      const auto t0 = clock::now();
      funcalc::EvalReport er;
      fT = funcalc::eval_h01(tuple, f, s.kind, s.quadrature, &er);
      eval_report = er.to_json();
      timings["eval_h01"] = std::chrono::duration<double>(clock::now() - t0).count();
    }
    return *fT;
  };

  json checks = json::array();
  bool all = true;
  for (const auto& name : s.checks) {
    const auto t0 = clock::now();
    json c;
    if (name == "poly_consistency") {
      if (!s.function.polynomial && s.function.random_degree == 0)
        throw ValidationError("checks", "poly_consistency needs a polynomial function");
      const ComplexMatrix P = funcalc::eval_poly(tuple, resolve_polynomial(s, tuple.arity()));
      const double r = rel_diff(contour_eval(), P);
      c = check_entry(name, r <= s.tolerances.poly_consistency, r, s.tolerances.poly_consistency);
    } else if (name == "spectral_mapping") {
      const double r = spectral_mapping_residual(tuple, f, contour_eval(), s.tolerances.max_eigenvector_condition);
      c = check_entry(name, r <= s.tolerances.spectral_mapping, r, s.tolerances.spectral_mapping);
    } else if (name == "contour_independence") {
      std::vector<ComplexMatrix> results;
      json grids = json::array();
      for (double frac : s.contour_fractions) {
        auto q = s.quadrature;
        q.contour_angles.clear();
        for (std::size_t i = 0; i < angles.size(); ++i) q.contour_angles.push_back(spec[i] + frac * (angles[i] - spec[i]));
        grids.push_back(q.contour_angles);
        results.push_back(funcalc::eval_h01(tuple, f, s.kind, q));
      }
      const double r = rel_diff(results[0], results[1]);
      c = check_entry(name, r <= s.tolerances.contour_independence, r, s.tolerances.contour_independence);
      c["contour_angles"] = grids;
    } else if (name == "classify") {
      // The estimated type angle of each member must stay below its domain angle.
      double worst = -kPi;
      bool ok = true;
      json members = json::array();
      for (std::size_t i = 0; i < tuple.arity(); ++i) {
        double type_angle;
        operators::Verdict v;
        if (s.kind == CalculusKind::ritt) {
          const auto r = operators::classify_ritt(tuple[i]);
          v = r.verdict;
          type_angle = r.alpha_found ? r.alpha_hat : kPi / 2;
          ok = ok && v == operators::Verdict::ritt;
        } else {
          const auto r = operators::classify_sectorial(tuple[i]);
          v = r.verdict;
          type_angle = r.omega_found ? r.omega_hat : kPi;
          ok = ok && v == operators::Verdict::sectorial;
        }
        ok = ok && type_angle < angles[i];
        worst = std::max(worst, type_angle - angles[i]);
        members.push_back({{"verdict", operators::to_string(v)}, {"type_angle", type_angle},
                           {"domain_angle", angles[i]}});
      }
      c = check_entry(name, ok, worst, 0.0);
      c["members"] = members;
    } else {
      const auto r = operators::commutator_check(tuple);
      c = check_entry(name, r.pass, r.max_relative, r.tol);
    }
    if (opts.timings) timings[name] = std::chrono::duration<double>(clock::now() - t0).count();
    all = all && c["pass"].get<bool>();
    checks.push_back(std::move(c));
  }
  if (!eval_report.is_null()) report["evaluation"] = eval_report;
  report["checks"] = checks;
  report["pass"] = all;
  if (opts.timings) {
    timings["total"] = std::chrono::duration<double>(clock::now() - t_start).count();
    report["timings"] = timings;
  }
  return report;
}

// ---------------------------------------------------------------- builtins

std::vector<Scenario> builtin_scenarios() {
  std::vector<Scenario> out;
  auto poly = [](std::initializer_list<std::pair<int, cplx>> terms) {
    Polynomial p(1);
    for (auto [e, c] : terms) p.add_term({e}, c);
    return p;
  };
  {
    Scenario s;
    s.name = "poly-consistency-d2";
    s.seed = 11;
    GeneratorSpec g;
    g.type = "random";
    g.n = 3;
    g.radius = 0.6;
    g.polynomials = {poly({{1, 1.0}}), poly({{2, 0.5}, {1, 0.3}})};
    s.generator = g;
    s.function.random_degree = 3;
    s.checks = {"poly_consistency", "commutation"};
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "poly-consistency-d3";
    s.seed = 12;
    GeneratorSpec g;
    g.type = "random";
    g.n = 3;
    g.radius = 0.5;
    g.polynomials = {poly({{1, 1.0}}), poly({{2, 1.0}}), poly({{1, 0.4}, {3, 0.5}})};
    s.generator = g;
    s.function.random_degree = 2;
    s.checks = {"poly_consistency", "commutation"};
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "spectral-mapping-ritt-d2";
    s.seed = 21;
    GeneratorSpec g;
    g.type = "random";
    g.n = 3;
    g.radius = 0.7;
    g.cond = 5.0;
    g.polynomials = {poly({{1, 1.0}}), poly({{1, 0.6}, {2, 0.3}})};
    s.generator = g;
    s.function.catalog = "ritt/inverse-shift-product";
    s.checks = {"spectral_mapping", "contour_independence", "commutation"};
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "spectral-mapping-sect-d1";
    s.seed = 31;
    s.kind = CalculusKind::sectorial;
    GeneratorSpec g;
    g.type = "random";
    g.n = 3;
    g.cond = 5.0;
    g.sector = 0.8;
    g.polynomials = {poly({{1, 1.0}})};
    s.generator = g;
    s.function.catalog = "sect/z-over-one-plus-z-squared";
    s.checks = {"spectral_mapping", "contour_independence", "classify"};
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "ritt-targeted-d2";
    s.seed = 41;
    GeneratorSpec g;
    g.type = "ritt-targeted";
    g.n = 3;
    g.radius = 0.8;
    g.cond = 3.0;
    g.alphas = {0.6, 0.9};
    s.generator = g;
    s.function.catalog = "ritt/product";
    s.checks = {"classify", "spectral_mapping", "commutation"};
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "jordan-poly-d2";
    s.seed = 51;
    GeneratorSpec g;
    g.type = "jordan";
    g.n = 3;
    g.eigenvalue = cplx(0.3, 0.1);
    g.polynomials = {poly({{1, 0.5}}), poly({{2, 0.5}, {0, 0.1}})};
    s.generator = g;
    s.function.random_degree = 3;
    s.checks = {"poly_consistency", "contour_independence", "commutation"};
    out.push_back(s);
  }
  return out;
}

const Scenario& builtin_scenario(const std::string& name) {
  static const std::vector<Scenario> all = builtin_scenarios();
  for (const auto& s : all)
    if (s.name == name) return s;
  throw ValidationError("name", "no builtin scenario \"" + name + "\"");
}

}  // namespace hinf::scenario
