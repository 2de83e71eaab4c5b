#pragma once

#include "hinf/core.hpp"
#include "hinf/funcalc.hpp"
#include "hinf/json_io.hpp"
#include "hinf/operators.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace hinf::fm {

struct FMOptions {
  double alpha = kPi / 24;
  double mu = 11 * kPi / 24;
  double rho = 2.7;
  int Kmax = 20;
  int Jmax = 12;
  int nodes_per_arc = 0;  // 0: max(24, 4·Jmax)
  json to_json() const;
};

// One of γ_{0,k} (arc of Γ₀), γ_{1,k} or γ_{2,k} (dyadic pieces of the segments).
struct ArcPiece {
  int m = 0;
  int k = 0;
  cplx center;
  double radius = 0.0;  // radius of the disc D_{m,k}: s_k, or δ on Γ₀
  std::vector<cplx> nodes;
  std::vector<double> weights;       // |dz/(1−z)| (m = 1, 2) or |dz/z| (m = 0)
  std::vector<cplx> signed_weights;  // dz/(1−z) along the counterclockwise orientation
  double mass() const;
};

// Orthonormal polynomials e_0, …, e_J on one arc, built by Arnoldi on the
// scaled variable w = (z − center)/radius.
struct OrthoBasis {
  ComplexMatrix values;      // e_j(z_q), nodes × (J+1)
  ComplexMatrix recurrence;  // w·e_j = Σ_{i ≤ j+1} recurrence(i, j) e_i
  ComplexMatrix monomial;    // e_j = Σ_n monomial(n, j) w^n
  double e0 = 0.0;
  double orthonormality_residual = 0.0;
  double min_pivot_ratio = 1.0;
  double monomial_gram_condition = 1.0;

  int degree() const { return static_cast<int>(values.cols()) - 1; }
  Eigen::VectorXcd evaluate(cplx w) const;
};

struct FMGeometry {
  FMOptions options;
  double l = 0.0;      // cos μ
  double delta = 0.0;  // arc length on Γ₀
  int N = 0;           // Γ₀ arcs are γ_{0,0..N}
  std::vector<ArcPiece> arcs;  // m = 0 first, then m = 1, then m = 2, k increasing
  std::vector<OrthoBasis> bases;
  std::vector<std::size_t> offsets;  // first node of each arc in the concatenated node list
  double min_disc_clearance = 0.0;   // min over discs of (dist(center, ∂B_α) − radius)/radius
  double max_mass_error = 0.0;
  double max_orthonormality_residual = 0.0;

  int basis_per_arc() const { return options.Jmax + 1; }
  std::size_t basis_size() const { return arcs.size() * basis_per_arc(); }
  std::size_t node_count() const;
  std::size_t arc_index(int m, int k) const;
  json to_json() const;
};

using GeometryPtr = std::shared_ptr<const FMGeometry>;

GeometryPtr build_geometry(const FMOptions& opts);
OrthoBasis build_basis(const ArcPiece& arc, int Jmax);

// (1−z)^{1/2}(1−ζ)^{1/2}/(z−ζ), principal branches.
cplx kernel(cplx z, cplx zeta);

cplx compute_phi(const FMGeometry& g, int m, int k, int j, cplx zeta);
// Φ for every (arc, j), arc-major.
Eigen::VectorXcd phi_vector(const FMGeometry& g, cplx zeta);
// Φ_{m,k,j}(T) through K(z, T) = (1−z)^{1/2} (I−T)^{1/2} R(z, T); needs σ(T) ⊂ B_α.
std::vector<ComplexMatrix> phi_operators(const FMGeometry& g, const ComplexMatrix& T);

struct FMDecomposition {
  GeometryPtr geometry;
  Eigen::VectorXcd coefficients;  // a_{m,k,j} at arc·(J+1) + j
  Eigen::VectorXcd projected;     // Σ_j a_{m,k,j} conj(e_{m,k,j}) at every node
  double sup_norm = 0.0;          // max |h| over the arc nodes on ∂B_μ
  double max_coefficient = 0.0;
  double max_bound_ratio = 0.0;   // max |a| / (√mass · sup|h|); Cauchy–Schwarz makes this ≤ 1

  cplx coefficient(int m, int k, int j) const;
  json to_json() const;
};

FMDecomposition decompose_1var(GeometryPtr g, const std::function<cplx(cplx)>& h);
cplx reconstruct_1var(const FMDecomposition& d, cplx zeta);

// Points τ·b for boundary points b of B_α and τ ∈ {0.3, 0.6, 0.85, 0.97},
// dropping those closer than min_vertex_distance to 1.
std::vector<cplx> zeta_grid(double alpha, int boundary_points = 64, double min_vertex_distance = 0.01);

double reconstruction_error(const FMDecomposition& d, const std::function<cplx(cplx)>& h,
                            const std::vector<cplx>& grid);

struct FMTensor {
  std::vector<GeometryPtr> geometries;
  std::vector<std::size_t> dims;  // basis size per variable
  std::vector<cplx> coefficients; // row-major, variable 0 slowest
  double sup_norm = 0.0;
  double max_coefficient = 0.0;
  double max_bound_ratio = 0.0;  // max |a| / (∏ √mass · sup|h|)
  json to_json() const;
};

struct DvarOptions {
  double max_evaluations = 6e7;
};

// Iterated decomposition: inner coefficients a_i(ζ_1) are arc integrals in the
// last variables, then each is decomposed in the earlier ones.
FMTensor decompose_dvar(const std::vector<GeometryPtr>& geoms, const funcalc::Evaluator& h,
                        const DvarOptions& opts = {});
cplx reconstruct_dvar(const FMTensor& t, std::span<const cplx> zeta);
// Values on the product grid axes[0] × … × axes[d−1], row-major.
std::vector<cplx> reconstruct_dvar_grid(const FMTensor& t, const funcalc::Axes& axes);

struct CrosscheckResult {
  double residual = 0.0;  // relative to max(‖reference‖, 1e-300)
  double absolute = 0.0;
  ComplexMatrix series;
  ComplexMatrix reference;
  json to_json() const;
};

// Σ a_{i_1…i_d} Φ_{i_1}(T_1)⋯Φ_{i_d}(T_d) against eval_h01(h).
CrosscheckResult fm_joint_fc_crosscheck(const operators::CommutingTuple& tuple, const funcalc::H01Fn& h,
                                        const std::vector<GeometryPtr>& geoms,
                                        const funcalc::QuadratureOptions& qopts = {});
ComplexMatrix fm_series(const FMTensor& t, const operators::CommutingTuple& tuple);

// max |K(z,ζ)| ρ^{|k−r|/2} over random z ∈ D_{1,k}, ζ ∈ B_α in annulus r.
struct KernelAudit {
  double constant = 0.0;
  std::size_t samples = 0;
};
KernelAudit kernel_bound_audit(const FMGeometry& g, int rmax, int samples, std::uint64_t seed);

// Fitted c_r = max |Φ_{m,k,j}(ζ)| 2^j ρ^{|k−r|/2} over m ∈ {1,2}, k ≤ kmax, j ≤ jmax
// and ζ sampled in annulus r inside the cone of B_α.
struct DecayAudit {
  std::vector<double> constants;  // per stratum r = 0..rmax
  double spread = 0.0;            // max / min
  json to_json() const;
};
DecayAudit decay_audit(const FMGeometry& g, int kmax, int jmax, int rmax, int samples, std::uint64_t seed);

// sup over a ζ-grid of Σ |Φ|^p, on the grid and on its refinement.
struct SummabilityAudit {
  std::vector<double> p;
  std::vector<double> coarse;
  std::vector<double> fine;
  json to_json() const;
};
SummabilityAudit summability_audit(const FMGeometry& g, const std::vector<double>& p, int boundary_points);

}  // namespace hinf::fm
