#pragma once

#include "hinf/catalog.hpp"
#include "hinf/funcalc.hpp"
#include "hinf/json_io.hpp"
#include "hinf/operators.hpp"
#include "hinf/polynomial.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hinf::scenario {

inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr int kToleranceSchema = 1;

using funcalc::Polynomial;
using operators::CommutingTuple;

// Seed matrix M; the tuple is (p_1(M), …, p_d(M)).
struct GeneratorSpec {
  std::string type = "random";  // diagonal | jordan | random | ritt-targeted
  Eigen::Index n = 3;
  std::vector<cplx> eigenvalues;  // diagonal; random draws them when empty
  cplx eigenvalue = 0.3;          // jordan
  double radius = 0.5;            // random eigenvalues lie in D(0, radius)
  double cond = 4.0;              // random: condition number of the eigenvector matrix
  double sector = 1.0;            // random sectorial eigenvalues: |arg λ| ≤ sector, |λ| ∈ [0.2, 2]
  std::vector<Polynomial> polynomials;  // one-variable; ritt-targeted draws them when empty
  std::vector<double> alphas;           // ritt-targeted: p_k maps the spectrum into B_{α_k}

  json to_json() const;
  static GeneratorSpec from_json(const json& j, const std::string& path);
};

struct FunctionSpec {
  std::string catalog;
  funcalc::Params params;
  std::optional<Polynomial> polynomial;
  int random_degree = 0;  // > 0: polynomial drawn from the scenario seed

  json to_json() const;
  static FunctionSpec from_json(const json& j, const std::string& path);
};

struct Tolerances {
  double poly_consistency = 1e-7;
  double spectral_mapping = 1e-7;
  double contour_independence = 1e-8;
  double max_eigenvector_condition = 1e8;
  json to_json() const;
  static Tolerances from_json(const json& j, const std::string& path);
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  CalculusKind kind = CalculusKind::ritt;
  std::vector<ComplexMatrix> matrices;  // explicit source
  std::optional<GeneratorSpec> generator;
  FunctionSpec function;
  std::vector<double> angles;                        // domain angles γ_i / θ_i
  std::vector<double> contour_fractions{0.25, 0.75};  // contour angles between spectral and domain angle
  funcalc::QuadratureOptions quadrature;
  Tolerances tolerances;
  std::vector<std::string> checks;

  json to_json() const;
  static Scenario from_json(const json& j);
};

const std::vector<std::string>& known_checks();

CommutingTuple generate_commuting_tuple(const ComplexMatrix& M, const std::vector<Polynomial>& polynomials);
ComplexMatrix seed_matrix(const GeneratorSpec& g, CalculusKind kind, std::uint64_t seed);
// Resolves the polynomials of a ritt-targeted spec; others are returned unchanged.
GeneratorSpec resolve_generator(const GeneratorSpec& g, std::uint64_t seed);
CommutingTuple build_tuple(const Scenario& s);
funcalc::H01Fn build_function(const Scenario& s, std::size_t arity);

struct RunOptions {
  bool timings = false;
};

json run_scenario(const Scenario& s, const RunOptions& opts = {});

std::vector<Scenario> builtin_scenarios();
const Scenario& builtin_scenario(const std::string& name);

// Residual of f(T) against W f(Λ) W⁻¹ for a diagonalizable tuple.
double spectral_mapping_residual(const CommutingTuple& tuple, const funcalc::H01Fn& f, const ComplexMatrix& fT,
                                 double max_condition);

}  // namespace hinf::scenario
