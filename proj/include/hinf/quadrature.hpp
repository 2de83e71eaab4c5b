#pragma once

#include <vector>

namespace hinf {

// Gauss–Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Rules are computed once and cached; the returned reference stays valid.
const GaussRule& gauss_legendre(int n);

struct MappedRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

MappedRule gauss_legendre_on(double a, double b, int n);

}  // namespace hinf
