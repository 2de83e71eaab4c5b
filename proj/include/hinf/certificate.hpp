#pragma once

#include "hinf/core.hpp"

#include <span>
#include <vector>

namespace hinf {

// Ritt: |f(λ)| ≤ c ∏_{i∈J} |1−λ_i|^{s_i}.
// Sectorial: |f(z)| ≤ c ∏_{i∈J} |z_i|^{s_i} / (1 + |z_i|^{2 s_i}).
struct DecayCertificate {
  CalculusKind kind = CalculusKind::ritt;
  double c = 1.0;
  std::vector<double> exponents;  // one per variable, 0 for inactive ones

  VarSet active() const;
  double factor(std::size_t i, cplx z) const;
  double envelope(std::span<const cplx> point) const;
  void validate(VarSet active_set) const;
};

// Certificate of a product: constants multiply, exponents add.
DecayCertificate product_certificate(const DecayCertificate& a, const DecayCertificate& b);

}  // namespace hinf
