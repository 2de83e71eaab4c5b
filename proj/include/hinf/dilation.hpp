#pragma once

#include "hinf/core.hpp"
#include "hinf/json_io.hpp"
#include "hinf/operators.hpp"
#include "hinf/polynomial.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace hinf::dilation {

using operators::CommutingTuple;

inline constexpr int kUnbounded = std::numeric_limits<int>::max();

// T^m = Q (V ⊗ I_n)^m J on ℂ^q ⊗ ℂ^n, leg ℂ^q on the left.
struct DilationTriple {
  ComplexMatrix V;  // q × q
  ComplexMatrix J;  // q·n × n
  ComplexMatrix Q;  // n × q·n
  bool positive = false;
  int valid_horizon = kUnbounded;  // exponents for which the construction is exact
  std::string origin;

  Eigen::Index q() const { return V.rows(); }
  json to_json() const;
  static DilationTriple from_json(const json& j, const std::string& path);
};

// T_{m+1}^{n_{m+1}} ⋯ T_d^{n_d} = Q V_{m+1}^{n_{m+1}} ⋯ V_d^{n_d} J on Y.
struct TailSystem {
  ComplexMatrix J;  // Y × n
  ComplexMatrix Q;  // n × Y
  std::vector<ComplexMatrix> V;
  int valid_horizon = kUnbounded;
  std::string origin;

  Eigen::Index y_dim() const { return J.rows(); }
  json to_json() const;
  static TailSystem from_json(const json& j, const std::string& path);
};

// An operator I ⊗ ⋯ ⊗ A ⊗ ⋯ ⊗ I acting on one leg of ℂ^{dims[0]} ⊗ ⋯ ⊗ ℂ^{dims[L−1]}.
struct LegOperator {
  std::vector<Eigen::Index> dims;
  std::size_t leg = 0;
  ComplexMatrix A;

  Eigen::Index total_dim() const;
  ComplexMatrix apply(const ComplexMatrix& X) const;
  ComplexMatrix materialize() const;
};

struct AuditOptions {
  int horizon = 5;
  double tol = 1e-9;
  double commute_tol = 1e-12;
  Eigen::Index dense_commute_limit = 512;  // above this, commutators are probed on random blocks
  std::uint64_t seed = 7;
};

json to_json(const AuditOptions& o);

struct AuditReport {
  int horizon = 0;
  double tol = 0.0;
  double comJT = 0.0;
  double dil = 0.0;
  double dil2 = 0.0;
  double combdil = 0.0;
  double premcomb = 0.0;
  double commutation = 0.0;
  std::string commutation_method;
  std::size_t exponent_tuples = 0;
  json to_json() const;
};

struct CombinedDilation {
  std::size_t m = 0;
  std::vector<Eigen::Index> dims;  // q_1, …, q_m, then Y (= n when m = d)
  ComplexMatrix J;                 // D × n
  ComplexMatrix Q;                 // n × D
  ComplexMatrix Jtilde;            // q_1⋯q_m·n × n
  ComplexMatrix Qtilde;
  std::vector<LegOperator> U;  // U_1, …, U_d
  std::vector<LegOperator> S;  // S_{k,m} on ℂ^{q_1} ⊗ ⋯ ⊗ ℂ^{q_m} ⊗ ℂ^n
  AuditReport audit;

  Eigen::Index dim() const;
  // Q U_1^{n_1} ⋯ U_d^{n_d} J without forming the U_k.
  ComplexMatrix compressed_power(const std::vector<int>& exponents) const;
  json to_json(bool include_matrices = false) const;
};

// Builds J̃_m, Q̃_m, S_{k,m}, then J, Q, U_k, and audits (comJT), (dil), (dil2),
// (premcomb), (combdil) and the commutation of the U_k. Failures throw
// AssumptionViolation naming the equation.
CombinedDilation combine_dilations(const CommutingTuple& tuple, const std::vector<DilationTriple>& triples,
                                   const std::optional<TailSystem>& tail, const AuditOptions& opts = {});

double dil_residual(const ComplexMatrix& T, const DilationTriple& t, int horizon);
double comJT_residual(const DilationTriple& t, const ComplexMatrix& Tj);
double dil2_residual(const std::vector<ComplexMatrix>& T, const TailSystem& tail, int horizon);

// Exponent tuples of length d with total ≤ horizon, lexicographic.
std::vector<std::vector<int>> exponent_tuples(std::size_t d, int horizon);

// T_1^{n_1} ⋯ T_d^{n_d}.
ComplexMatrix tuple_power(const CommutingTuple& tuple, const std::vector<int>& exponents);

// Triple constructors.
DilationTriple trivial_triple(const ComplexMatrix& T);  // V = T_scalar for T = cI; else throws
DilationTriple companion_triple(const ComplexMatrix& T);
DilationTriple shift_triple(const ComplexMatrix& T, int N);
// W diagonalizes T (and should diagonalize the rest of the tuple for (comJT)).
DilationTriple spectral_triple(const ComplexMatrix& T, const ComplexMatrix& W);
DilationTriple spectral_unitary_triple(const ComplexMatrix& T, const ComplexMatrix& W, int N);

TailSystem trivial_tail(const std::vector<ComplexMatrix>& T);
// Scalar Schäffer dilations of the joint eigenvalues, transported by W.
TailSystem schaffer_tail(const std::vector<ComplexMatrix>& T, const ComplexMatrix& W, int N);

// Eigenvector matrix of a generic combination of the tuple.
ComplexMatrix joint_eigenbasis(const CommutingTuple& tuple, std::uint64_t seed = 3);

struct SchaefferDilation {
  ComplexMatrix U;   // (2N+1)n × (2N+1)n
  ComplexMatrix JH;  // embedding H → block N
  ComplexMatrix PH;  // JH*
  ComplexMatrix defect;       // (I − T*T)^{1/2}
  ComplexMatrix defect_star;  // (I − TT*)^{1/2}
  int N = 0;
  double unitarity_residual = 0.0;
  double compression_residual = 0.0;  // max_{k ≤ N} ‖P_H U^k J_H − T^k‖
  json to_json(bool include_matrices = false) const;
};

// Cyclically truncated Schäffer unitary on ℂ^{2N+1} ⊗ ℂ^n.
SchaefferDilation schaffer_dilation(const ComplexMatrix& T, int N);

// (I − A)^{1/2} for Hermitian 0 ≤ A ≤ I, eigenvalues clamped at 0.
ComplexMatrix defect_root(const ComplexMatrix& A);

// Joint eigenvalue tuples of a commuting normal family, one per basis vector.
struct JointSpectrum {
  std::vector<std::vector<cplx>> points;  // points[i][k] = eigenvalue of member k on vector i
  double diagonalization_residual = 0.0;
};
JointSpectrum joint_spectrum(const std::vector<ComplexMatrix>& family, std::uint64_t seed = 5);

struct TorusSupOptions {
  int density = 64;  // per variable
  int polish_starts = 8;
  std::size_t max_points = 2'000'000;
};

struct TorusSup {
  double value = 0.0;
  double grid_value = 0.0;
  std::vector<cplx> argmax;
};

// Sup of |φ| over the torus: grid maximum, then local ascent from the best
// grid points and from the extra starting points.
TorusSup torus_sup(const funcalc::Polynomial& phi, const std::vector<std::vector<cplx>>& extra_starts,
                   const TorusSupOptions& opts = {});

struct VonNeumannResult {
  double lhs = 0.0;  // max |φ| over joint eigenvalues = ‖φ(U)‖
  double rhs = 0.0;  // sup over the torus
  double grid_rhs = 0.0;
  double direct_norm = -1.0;  // ‖φ(U)‖ by SVD when the dimension allows
  double unitarity_residual = 0.0;
  double commutation_residual = 0.0;
  double diagonalization_residual = 0.0;
  bool holds = false;
  bool equality = false;
  json to_json() const;
};

VonNeumannResult vonneumann_unitaries(const std::vector<ComplexMatrix>& U, const funcalc::Polynomial& phi,
                                      const TorusSupOptions& opts = {}, double tol = 1e-8);

struct Th51Report {
  double lhs = 0.0;        // ‖φ(T)‖
  double unitary_norm = 0.0;  // ‖φ(U)‖
  double torus_sup = 0.0;
  double C_hat = 0.0;      // ‖Q‖‖J‖
  double rhs = 0.0;        // C_hat · sup
  double compression_residual = 0.0;  // ‖φ(T) − Q φ(U) J‖ / max(1, ‖φ(T)‖)
  int horizon = 0;
  int degree = 0;
  bool holds = false;
  AuditReport audit;
  json to_json() const;
};

Th51Report inequality_witness_th51(const CommutingTuple& tuple, const std::vector<DilationTriple>& triples,
                                   const TailSystem& tail, const funcalc::Polynomial& phi, int horizon,
                                   const TorusSupOptions& sup_opts = {});

struct SimilarityCheck {
  std::vector<double> norms;  // ‖S⁻¹ T_k S‖
  double max_norm = 0.0;
  double condition = 0.0;
  bool pass = false;
  json to_json() const;
};

SimilarityCheck verify_similarity(const CommutingTuple& tuple, const ComplexMatrix& S, double tol = 1e-9);

// Synthetic systems for the combiner audit.
struct DilationSystem {
  std::string name;
  CommutingTuple tuple;
  std::vector<DilationTriple> triples;
  std::optional<TailSystem> tail;
  std::string expected_failure;  // equation tag for broken systems, empty otherwise
};

std::vector<DilationSystem> dilation_corpus(std::uint64_t seed = 11);
std::vector<DilationSystem> broken_dilation_corpus(std::uint64_t seed = 13);

}  // namespace hinf::dilation
