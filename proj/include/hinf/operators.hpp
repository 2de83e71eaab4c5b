#pragma once

#include "hinf/core.hpp"
#include "hinf/json_io.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace hinf::operators {

class CommutingTuple {
 public:
  CommutingTuple() = default;
  // Throws ValidationError on empty input, mismatched dimensions or non-finite entries.
  // Commutation is reported by commutator_check, not enforced here.
  explicit CommutingTuple(std::vector<ComplexMatrix> matrices, double commutation_tol = 1e-10);

  std::size_t arity() const { return matrices_.size(); }
  Eigen::Index dim() const { return matrices_.empty() ? 0 : matrices_.front().rows(); }
  const ComplexMatrix& operator[](std::size_t k) const { return matrices_.at(k); }
  const std::vector<ComplexMatrix>& matrices() const { return matrices_; }
  double commutation_tol() const { return tol_; }

  CommutingTuple subfamily(const std::vector<std::size_t>& idx) const;

 private:
  std::vector<ComplexMatrix> matrices_;
  double tol_ = 1e-10;
};

struct CommutatorReport {
  // relative[k][l] = ‖T_k T_l − T_l T_k‖ / (‖T_k‖ ‖T_l‖)
  std::vector<std::vector<double>> relative;
  double max_relative = 0.0;
  double tol = 0.0;
  bool pass = true;
  json to_json() const;
};

CommutatorReport commutator_check(const CommutingTuple& tuple);

// Throws ValidationError unless the tuple commutes within its tolerance.
void require_commuting(const CommutingTuple& tuple);

ComplexMatrix resolvent(const ComplexMatrix& T, cplx lambda);

// T^0, T^1, …, T^N by sequential products.
std::vector<ComplexMatrix> matrix_power_family(const ComplexMatrix& T, int N);

std::vector<cplx> eigenvalues(const ComplexMatrix& T);
double spectral_radius(const ComplexMatrix& T);

enum class Verdict { ritt, not_ritt, sectorial, not_sectorial, inconclusive };
const char* to_string(Verdict v);

struct RittOptions {
  std::vector<double> angle_grid;  // empty: kπ/48 for k = 1..23
  int sample_count = 48;
  int horizon = 256;
  double K_cap = 1e6;
  double offset = 1e-6;       // relative outward offset from ∂B_β
  double min_vertex_distance = 1e-8;
};

struct RittTypeReport {
  std::vector<cplx> spectrum;
  std::map<double, double> K_beta;  // +inf when the spectrum leaves closure(B_β)
  double alpha_hat = 0.0;
  bool alpha_found = false;
  double power_bound = 0.0;       // sup_{n ≤ N} ‖Tⁿ‖
  double difference_bound = 0.0;  // sup_{n ≤ N} ‖n(Tⁿ − Tⁿ⁻¹)‖
  double power_C = 0.0;
  double growth_exponent = 0.0;   // log-log slope of the running sup over [N/4, N]
  bool spectrum_in_disc = false;
  Verdict verdict = Verdict::inconclusive;
  json to_json() const;
};

RittTypeReport classify_ritt(const ComplexMatrix& T, const RittOptions& opts = {});

struct SectorialOptions {
  std::vector<double> angle_grid;  // empty: kπ/48 for k = 1..47
  int sample_count = 48;
  double C_cap = 1e6;
  double offset = 1e-6;
  double radial_decades = 8.0;
};

struct SectorialTypeReport {
  std::vector<cplx> spectrum;
  std::map<double, double> C_theta;
  double omega_hat = 0.0;
  bool omega_found = false;
  Verdict verdict = Verdict::inconclusive;
  json to_json() const;
};

SectorialTypeReport classify_sectorial(const ComplexMatrix& A, const SectorialOptions& opts = {});

// Induced ℓp → ℓp norm estimated by power iteration on the duality map.
double lp_operator_norm(const ComplexMatrix& M, double p, int iterations = 200, std::uint64_t seed = 1);

}  // namespace hinf::operators
