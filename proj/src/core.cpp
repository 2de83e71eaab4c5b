#include "hinf/core.hpp"
#include "hinf/parallel.hpp"

#include <cstdlib>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace hinf {

const char* to_string(CalculusKind kind) {
  return kind == CalculusKind::ritt ? "ritt" : "sectorial";
}

CalculusKind calculus_kind_from_string(const std::string& s) {
  if (s == "ritt") return CalculusKind::ritt;
  if (s == "sectorial") return CalculusKind::sectorial;
  throw ValidationError("kind", "expected \"ritt\" or \"sectorial\", got \"" + s + "\"");
}

std::vector<std::size_t> VarSet::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < 32; ++i)
    if (contains(i)) out.push_back(i);
  return out;
}

std::vector<VarSet> subsets_of(VarSet s) {
  std::vector<VarSet> out;
  // Enumerate submasks from empty upward.
  std::uint32_t m = 0;
  const std::uint32_t full = s.bits();
  while (true) {
    out.emplace_back(m);
    if (m == full) break;
    m = (m - full) & full;
  }
  return out;
}

std::string to_string(VarSet s) {
  std::string out = "{";
  bool first = true;
  for (auto i : s.indices()) {
    if (!first) out += ",";
    out += std::to_string(i + 1);
    first = false;
  }
  return out + "}";
}

double operator_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(0);
}

ComplexMatrix identity(Eigen::Index n) { return ComplexMatrix::Identity(n, n); }

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

bool all_finite(const ComplexMatrix& m) { return m.allFinite(); }

ComplexMatrix principal_sqrt(const ComplexMatrix& m) {
  ComplexMatrix r = m.sqrt();
  return r;
}

int thread_count() {
  if (const char* env = std::getenv("HINF_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace hinf
