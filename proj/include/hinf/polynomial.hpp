#pragma once

#include "hinf/core.hpp"
#include "hinf/json_io.hpp"

#include <map>
#include <random>
#include <span>
#include <vector>

namespace hinf::funcalc {

using MultiIndex = std::vector<int>;

// Σ_α c_α λ^α in `arity` variables.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::size_t arity) : arity_(arity) {}
  Polynomial(std::size_t arity, std::map<MultiIndex, cplx> coeffs);

  static Polynomial constant(std::size_t arity, cplx c);
  static Polynomial coordinate(std::size_t arity, std::size_t i);
  // Random complex coefficients (standard normal parts) on every monomial of total degree ≤ degree.
  static Polynomial random(std::size_t arity, int degree, std::mt19937_64& rng, double density = 1.0);

  std::size_t arity() const { return arity_; }
  const std::map<MultiIndex, cplx>& coefficients() const { return coeffs_; }
  void add_term(const MultiIndex& alpha, cplx c);
  int degree() const;
  bool is_zero() const { return coeffs_.empty(); }

  cplx operator()(std::span<const cplx> z) const;

  // Coefficients of the expansion in powers of (λ_i − center).
  Polynomial shifted(cplx center) const;

  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator+(const Polynomial& o) const;

  json to_json() const;
  static Polynomial from_json(const json& j, const std::string& path = "polynomial");

 private:
  std::size_t arity_ = 0;
  std::map<MultiIndex, cplx> coeffs_;
};

}  // namespace hinf::funcalc
