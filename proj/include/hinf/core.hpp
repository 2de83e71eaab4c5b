#pragma once

#include <Eigen/Dense>

#include <bit>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace hinf {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

enum class CalculusKind { ritt, sectorial };

const char* to_string(CalculusKind kind);
CalculusKind calculus_kind_from_string(const std::string& s);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Angles or points outside the admissible region.
class DomainError : public Error {
 public:
  using Error::Error;
};

class SpectralPointError : public Error {
 public:
  SpectralPointError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class CertificateError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class LimitDivergenceError : public DivergenceError {
 public:
  using DivergenceError::DivergenceError;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class BasisDegeneracyError : public Error {
 public:
  using Error::Error;
};

class AssumptionViolation : public Error {
 public:
  AssumptionViolation(std::string equation, const std::string& what)
      : Error(equation + ": " + what), equation_(std::move(equation)) {}
  const std::string& equation() const { return equation_; }

 private:
  std::string equation_;
};

class NotContractionError : public Error {
 public:
  using Error::Error;
};

class GuardError : public Error {
 public:
  using Error::Error;
};

// Bitmask over variable indices 0..31.
class VarSet {
 public:
  constexpr VarSet() = default;
  constexpr explicit VarSet(std::uint32_t bits) : bits_(bits) {}
  static VarSet full(std::size_t d) { return VarSet(d >= 32 ? ~0u : ((1u << d) - 1u)); }
  static VarSet of(std::initializer_list<std::size_t> idx) {
    VarSet s;
    for (auto i : idx) s = s.with(i);
    return s;
  }

  constexpr std::uint32_t bits() const { return bits_; }
  constexpr bool contains(std::size_t i) const { return (bits_ >> i) & 1u; }
  constexpr bool empty() const { return bits_ == 0; }
  std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
  VarSet with(std::size_t i) const { return VarSet(bits_ | (1u << i)); }
  VarSet without(std::size_t i) const { return VarSet(bits_ & ~(1u << i)); }
  std::vector<std::size_t> indices() const;
  bool subset_of(VarSet other) const { return (bits_ & ~other.bits_) == 0; }

  friend constexpr VarSet operator|(VarSet a, VarSet b) { return VarSet(a.bits_ | b.bits_); }
  friend constexpr VarSet operator&(VarSet a, VarSet b) { return VarSet(a.bits_ & b.bits_); }
  friend constexpr VarSet operator-(VarSet a, VarSet b) { return VarSet(a.bits_ & ~b.bits_); }
  friend constexpr bool operator==(VarSet a, VarSet b) = default;
  friend constexpr auto operator<=>(VarSet a, VarSet b) = default;

 private:
  std::uint32_t bits_ = 0;
};

// All subsets of `s`, in increasing bitmask order.
std::vector<VarSet> subsets_of(VarSet s);
std::string to_string(VarSet s);

double operator_norm(const ComplexMatrix& m);
ComplexMatrix identity(Eigen::Index n);
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
bool all_finite(const ComplexMatrix& m);

// Principal square root of a matrix whose spectrum avoids (-inf, 0).
ComplexMatrix principal_sqrt(const ComplexMatrix& m);

}  // namespace hinf
