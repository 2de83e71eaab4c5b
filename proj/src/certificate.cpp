#include "hinf/certificate.hpp"

#include <cmath>

namespace hinf {

VarSet DecayCertificate::active() const {
  VarSet s;
  for (std::size_t i = 0; i < exponents.size(); ++i)
    if (exponents[i] > 0.0) s = s.with(i);
  return s;
}

double DecayCertificate::factor(std::size_t i, cplx z) const {
  const double s = exponents.at(i);
  if (s <= 0.0) return 1.0;
  if (kind == CalculusKind::ritt) return std::pow(std::abs(1.0 - z), s);
  const double r = std::pow(std::abs(z), s);
  return r / (1.0 + r * r);
}

double DecayCertificate::envelope(std::span<const cplx> point) const {
  double e = c;
  for (std::size_t i = 0; i < exponents.size() && i < point.size(); ++i) e *= factor(i, point[i]);
  return e;
}

void DecayCertificate::validate(VarSet active_set) const {
  if (!(c >= 0.0) || !std::isfinite(c)) throw CertificateError("certificate constant must be finite and ≥ 0");
  for (auto i : active_set.indices()) {
    if (i >= exponents.size() || !(exponents[i] > 0.0) || !std::isfinite(exponents[i]))
      throw CertificateError("certificate exponent for variable " + std::to_string(i + 1) +
                             " must be positive");
  }
}

DecayCertificate product_certificate(const DecayCertificate& a, const DecayCertificate& b) {
  if (a.kind != b.kind) throw CertificateError("cannot multiply certificates of different kinds");
  DecayCertificate out;
  out.kind = a.kind;
  out.c = a.c * b.c;
  out.exponents.assign(std::max(a.exponents.size(), b.exponents.size()), 0.0);
  for (std::size_t i = 0; i < out.exponents.size(); ++i) {
    const double sa = i < a.exponents.size() ? a.exponents[i] : 0.0;
    const double sb = i < b.exponents.size() ? b.exponents[i] : 0.0;
    out.exponents[i] = sa + sb;
  }
  return out;
}

}  // namespace hinf
