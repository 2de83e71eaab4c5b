#pragma once

// Reference computations used by the tests. They avoid the library code paths
// they check against.

#include "hinf/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using hinf::cplx;
using hinf::ComplexMatrix;

// Support-function test: z is interior to hull({1} ∪ D(0, r)) iff
// Re(z e^{-iθ}) < max(r, cos θ) for every θ.
inline bool stolz_interior(double gamma, cplx z, int directions = 20000) {
  const double r = std::sin(gamma);
  for (int k = 0; k < directions; ++k) {
    const double th = 2.0 * std::numbers::pi * k / directions;
    const double h = std::max(r, std::cos(th));
    if (std::real(z * std::polar(1.0, -th)) >= h) return false;
  }
  return true;
}

inline double stolz_perimeter(double gamma) {
  return 2.0 * std::cos(gamma) + std::sin(gamma) * (std::numbers::pi + 2.0 * gamma);
}

// Smallest r by scanning r = 0, 1, 2, ….
inline int annulus_scan(double t, double l, double rho) {
  for (int r = 0; r < 100000; ++r) {
    const double lo = l * std::pow(rho, -r - 1), hi = l * std::pow(rho, -r);
    if (lo <= t * (1 + 1e-13) && t <= hi * (1 + 1e-13)) return r;
  }
  return -1;
}

// A random invertible matrix with condition number at most `cond` (2-norm).
inline ComplexMatrix random_conditioned(int n, double cond, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cplx(g(rng), g(rng));
  Eigen::JacobiSVD<ComplexMatrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s(i) = n == 1 ? 1.0 : std::pow(cond, -static_cast<double>(i) / (n - 1));
  return svd.matrixU() * s.cast<cplx>().asDiagonal() * svd.matrixV().adjoint();
}

inline ComplexMatrix random_unitary(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<ComplexMatrix> qr(A);
  return qr.householderQ() * ComplexMatrix::Identity(n, n);
}

// U diag(f(λ_1j, …, λ_dj)) U^{-1} for joint eigenvalues λ.
inline ComplexMatrix spectral_apply(const ComplexMatrix& U, const std::vector<std::vector<cplx>>& eig,
                                    const std::function<cplx(const std::vector<cplx>&)>& f) {
  const auto n = U.rows();
  Eigen::VectorXcd diag(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    std::vector<cplx> p;
    for (const auto& e : eig) p.push_back(e[j]);
    diag(j) = f(p);
  }
  return U * diag.asDiagonal() * U.inverse();
}

inline ComplexMatrix conjugate_diag(const ComplexMatrix& U, const std::vector<cplx>& d) {
  Eigen::VectorXcd v(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) v(i) = d[i];
  return U * v.asDiagonal() * U.inverse();
}

inline double opnorm(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(0);
}

// A random point z with |z| < sin γ·0.9 or inside the triangle, with boundary margin.
inline cplx random_stolz_point(double gamma, std::mt19937_64& rng, double margin) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    const cplx z(u(rng), u(rng));
    if (!stolz_interior(gamma, z, 4000)) continue;
    // distance to the boundary via the support function
    double dist = 1e9;
    for (int k = 0; k < 4000; ++k) {
      const double th = 2.0 * std::numbers::pi * k / 4000;
      dist = std::min(dist, std::max(std::sin(gamma), std::cos(th)) - std::real(z * std::polar(1.0, -th)));
    }
    if (dist >= margin) return z;
  }
}

}  // namespace oracle
