#pragma once

#include "hinf/core.hpp"
#include "hinf/json_io.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace hinf::rad {

inline constexpr double kInfP = std::numeric_limits<double>::infinity();

// ‖x‖ = (Σ_j |x_j / s_j|^p)^{1/p}, or max_j |x_j / s_j| for p = ∞.
// Weighted ℓp with weights w_j is the scale s_j = w_j^{−1/p}.
class FiniteNormedSpace {
 public:
  FiniteNormedSpace(Eigen::Index m, double p);
  FiniteNormedSpace(double p, std::vector<double> scales);
  static FiniteNormedSpace weighted(double p, const std::vector<double>& weights);

  Eigen::Index dim() const { return static_cast<Eigen::Index>(scales_.size()); }
  double p() const { return p_; }
  const std::vector<double>& scales() const { return scales_; }
  bool hilbert() const;

  double norm(const ComplexVector& x) const;
  // Dual under the bilinear pairing ⟨x*, x⟩ = Σ_j x*_j x_j.
  FiniteNormedSpace dual() const;
  // A norming functional: ⟨x*, x⟩ = ‖x‖, ‖x*‖_dual = 1.
  ComplexVector norming_functional(const ComplexVector& x) const;

  json to_json() const;
  static FiniteNormedSpace from_json(const json& j, const std::string& path = "space");

 private:
  double p_;
  std::vector<double> scales_;
};

// Worst relative violation of homogeneity and the triangle inequality on random vectors.
double norm_axiom_violation(const FiniteNormedSpace& X, int trials, std::uint64_t seed);

// x_{i_1…i_d} for 0 ≤ i_k < n as columns of an m × n^d matrix, i_1 slowest.
struct IndexedFamily {
  std::size_t d = 1;
  Eigen::Index n = 1;
  ComplexMatrix x;

  IndexedFamily() = default;
  IndexedFamily(std::size_t d, Eigen::Index n, ComplexMatrix vectors);
  static IndexedFamily random(std::size_t d, Eigen::Index n, Eigen::Index m, std::uint64_t seed);

  Eigen::Index count() const { return x.cols(); }
  Eigen::Index dim() const { return x.rows(); }
  std::size_t sign_bits() const { return d * static_cast<std::size_t>(n); }
  // Entrywise product a_{i} x_{i}.
  IndexedFamily scaled(const ComplexVector& a) const;
  json to_json() const;
  static IndexedFamily from_json(const json& j, const std::string& path = "family");
};

enum class RadMode { exhaustive, montecarlo };

struct RadOptions {
  RadMode mode = RadMode::exhaustive;
  std::size_t samples = 20000;
  std::uint64_t seed = 1;
  std::size_t max_sign_bits = 20;
};

struct RadNorm {
  double value = 0.0;     // N_d
  double mean_square = 0.0;
  double sigma_square = 0.0;  // standard error of mean_square (0 when exhaustive)
  double band_lo = 0.0;       // N_d band from mean_square ± 3σ
  double band_hi = 0.0;
  std::size_t patterns = 0;
  bool exact = false;
  json to_json() const;
};

// N_d = (E ‖Σ ε^{(1)}_{i_1} ⋯ ε^{(d)}_{i_d} x_{i_1…i_d}‖²)^{1/2} with n·d independent signs.
RadNorm rad_norm(const IndexedFamily& family, const FiniteNormedSpace& X, const RadOptions& opts = {});

// Kahane–Khintchine bounds for order-d Rademacher chaos in L^p lattices:
// N_d / ‖(Σ |x_i|²)^{1/2}‖ ∈ [1/C_K, C_K].
double khintchine_constant(double p, std::size_t d);

struct SquareFunctionReport {
  double square_function = 0.0;
  double rad = 0.0;
  double ratio = 0.0;
  double C_K = 0.0;
  bool within = false;
  json to_json() const;
};

double lattice_square_function(const IndexedFamily& family, const FiniteNormedSpace& X);
SquareFunctionReport square_function_report(const IndexedFamily& family, const FiniteNormedSpace& X);

struct ProbeResult {
  double C_hat = 0.0;
  int trials = 0;
  std::size_t d = 0;
  Eigen::Index n = 0;
  json witness;
  json to_json() const;
};

// Lower estimate of the (α) constant on n × n families.
ProbeResult alpha_probe(const FiniteNormedSpace& X, Eigen::Index n, int trials, std::uint64_t seed);
// Lower estimate of the (A_d) constant.
ProbeResult Ad_probe(const FiniteNormedSpace& X, std::size_t d, Eigen::Index n, int trials, std::uint64_t seed);

}  // namespace hinf::rad
