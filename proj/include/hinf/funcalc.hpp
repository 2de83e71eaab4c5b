#pragma once

#include "hinf/certificate.hpp"
#include "hinf/core.hpp"
#include "hinf/json_io.hpp"
#include "hinf/operators.hpp"
#include "hinf/polynomial.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace hinf::funcalc {

using operators::CommutingTuple;

using Evaluator = std::function<cplx(std::span<const cplx>)>;

// axes[i] holds the sample values of variable i; grid results are row-major
// over all axes with variable 0 varying slowest.
using Axes = std::vector<std::vector<cplx>>;
using GridEvaluator = std::function<std::vector<cplx>(const Axes&)>;

std::vector<cplx> evaluate_on_grid(const Evaluator& f, const Axes& axes);

// Value used for coordinates a function does not depend on.
cplx vertex_point(CalculusKind kind);
cplx inactive_fill(CalculusKind kind);

struct HoloFn {
  std::size_t arity = 1;
  VarSet active;
  Evaluator eval;
  std::optional<DecayCertificate> certificate;
  std::vector<double> domain_angles;  // γ_i for Ritt, θ_i for sectorial
  std::optional<double> supnorm_hint;
  bool vertex_regular = false;  // holomorphic across the distinguished point
  GridEvaluator grid;           // optional fast path
  // Σ c_α ∏ (z_i − 1)^{α_i}: the nested quadrature then factorizes term by term.
  std::vector<std::pair<MultiIndex, cplx>> shifted_terms;

  cplx operator()(std::span<const cplx> z) const { return eval(z); }
  std::vector<cplx> on_grid(const Axes& axes) const;
  CalculusKind kind() const;
};

// Checks arity, angles, the certificate and that inactive variables are ignored.
void audit(const HoloFn& f);

struct LimitOptions {
  double first = 1e-2;  // ε_0
  double ratio = 0.1;   // ε_{k+1} = ratio · ε_k
  int count = 7;
  double tol = 1e-8;    // accepted extrapolation error, relative to max(1, |limit|)
};

json to_json(const LimitOptions& o);

struct LimitResult {
  cplx value;
  double error_estimate = 0.0;
};

// Wynn ε-algorithm; picks the even-column entry with the smallest local spread.
LimitResult extrapolate(const std::vector<cplx>& seq);

// lim g(ζ) as ζ → 1 along 1 − ε (Ritt) or ζ → 0 along ε (sectorial).
LimitResult vertex_limit(const std::function<cplx(cplx)>& g, CalculusKind kind, const LimitOptions& opts);

// f with every variable in `frozen` sent to the distinguished point by nested limits.
cplx frozen_value(const Evaluator& f, std::vector<cplx> point, VarSet frozen, CalculusKind kind,
                  const LimitOptions& opts);

struct H01Fn {
  std::size_t arity = 1;
  CalculusKind kind = CalculusKind::ritt;
  std::vector<double> domain_angles;
  cplx constant_term = 0.0;
  std::map<VarSet, HoloFn> pieces;
  Evaluator whole;  // optional closed form; otherwise the sum of pieces is used
  LimitOptions limits;

  cplx operator()(std::span<const cplx> z) const;
  cplx sum_of_pieces(std::span<const cplx> z) const;
};

H01Fn h01_constant(std::size_t arity, CalculusKind kind, std::vector<double> angles, cplx a);
H01Fn h01_from_holo(const HoloFn& f);
H01Fn h01_from_pieces(std::size_t arity, CalculusKind kind, std::vector<double> angles, cplx constant,
                      std::vector<HoloFn> pieces);
// Components are computed by the projections Q_J (P_J) from a closed-form evaluator.
// Every subset with a nonzero component needs a certificate; others are audited to vanish.
H01Fn h01_from_function(std::size_t arity, CalculusKind kind, std::vector<double> angles, Evaluator whole,
                        std::map<VarSet, DecayCertificate> certificates, bool vertex_regular,
                        const LimitOptions& limits = {});
// Exact Q_J split of a polynomial from its Taylor expansion at (1, …, 1).
H01Fn h01_from_polynomial(const Polynomial& phi, std::vector<double> angles);

H01Fn project_qi(const H01Fn& f, std::size_t i);
HoloFn project_QJ(const H01Fn& f, VarSet J);

struct QuadratureOptions {
  std::vector<double> contour_angles;  // β_i / ν_i; empty entries → midpoint default
  std::vector<double> type_angles;     // α_i / ω_i overrides for the midpoint rule
  int initial_nodes = 24;
  int max_nodes = 1536;
  double rel_tol = 1e-9;
  std::size_t max_product_nodes = 12'000'000;
  std::size_t max_active = 3;
  double tail_tol = 1e-14;
  double grading_ratio = 0.2;
  bool audit_certificate = true;
};

json to_json(const QuadratureOptions& o);

struct EvalReport {
  bool converged = true;
  double last_change = 0.0;
  std::vector<double> contour_angles;
  std::vector<int> nodes_per_variable;
  std::vector<int> grading_levels;
  std::vector<double> truncation_radii;  // sectorial R per variable
  int refinements = 0;
  json to_json() const;
  void merge(const EvalReport& o);
};

// Smallest Stolz angle whose closure holds the spectrum (points at 1 ignored).
double spectral_stolz_angle(const ComplexMatrix& T);
// Smallest sector angle whose closure holds the spectrum.
double spectral_sector_angle(const ComplexMatrix& A);

ComplexMatrix eval_h0(const CommutingTuple& tuple, const HoloFn& f, const QuadratureOptions& opts = {},
                      EvalReport* report = nullptr);
ComplexMatrix eval_h0_ritt(const CommutingTuple& tuple, const HoloFn& f, const std::vector<double>& betas,
                           QuadratureOptions opts = {}, EvalReport* report = nullptr);
ComplexMatrix eval_h0_sectorial(const CommutingTuple& tuple, const HoloFn& f, const std::vector<double>& nus,
                                QuadratureOptions opts = {}, EvalReport* report = nullptr);
ComplexMatrix eval_h01(const CommutingTuple& tuple, const H01Fn& f, CalculusKind kind,
                       const QuadratureOptions& opts = {}, EvalReport* report = nullptr);

// Iterated Horner substitution.
ComplexMatrix eval_poly(const CommutingTuple& tuple, const Polynomial& phi);

// f(rT_1, …, rT_d).
ComplexMatrix eval_regularized(const CommutingTuple& tuple, const H01Fn& f, double r,
                               CalculusKind kind = CalculusKind::ritt, const QuadratureOptions& opts = {});

// Per-variable samples of ∂B_γ (Ritt) or ∂Σ_θ (sectorial) at the given density.
std::vector<cplx> boundary_samples(CalculusKind kind, double angle, int density);

// Sup of |f| over the product of boundary grids, doubling the density until
// the value changes by less than rel_tol.
struct SupnormOptions {
  int initial_density = 32;
  double rel_tol = 1e-4;
  std::size_t max_points = 4'000'000;
};
double boundary_supnorm(const Evaluator& f, std::size_t arity, CalculusKind kind, const std::vector<double>& angles,
                        const SupnormOptions& opts = {});
double poly_supnorm(const Polynomial& phi, const std::vector<double>& angles, int grid_density = 32);

struct FcBoundOptions {
  int degree_cap = 3;
  int trials = 20;
  CalculusKind kind = CalculusKind::ritt;
  std::vector<double> domain_angles;  // empty: midpoint between the spectral angle and π/2 (Ritt), π (sectorial)
  std::uint64_t seed = 1;
};

struct FcBoundResult {
  double K_hat = 0.0;
  std::vector<double> running_max;  // after each trial
  json witness;
  json to_json() const;
};

FcBoundResult fc_bound_estimate(const CommutingTuple& tuple, const FcBoundOptions& opts);

// Pointwise product with the exponent-sum certificate.
HoloFn product(const HoloFn& f, const HoloFn& g);

struct HomomorphismResult {
  double residual = 0.0;  // ‖f(T)g(T) − (fg)(T)‖ / max(‖f(T)g(T)‖, ‖f(T)‖‖g(T)‖, tiny)
  double absolute = 0.0;
};

HomomorphismResult homomorphism_check(const CommutingTuple& tuple, const HoloFn& f, const HoloFn& g,
                                      CalculusKind kind, const QuadratureOptions& opts = {});

}  // namespace hinf::funcalc
