#include "hinf/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hinf::funcalc {

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

cplx ipow(cplx z, int e) {
  cplx r = 1.0;
  for (int i = 0; i < e; ++i) r *= z;
  return r;
}

void enumerate(std::size_t arity, int degree, MultiIndex& cur, std::size_t pos, int left,
               std::vector<MultiIndex>& out) {
  if (pos == arity) {
    out.push_back(cur);
    return;
  }
  for (int e = 0; e <= left; ++e) {
    cur[pos] = e;
    enumerate(arity, degree, cur, pos + 1, left - e, out);
  }
  cur[pos] = 0;
}

}  // namespace

Polynomial::Polynomial(std::size_t arity, std::map<MultiIndex, cplx> coeffs) : arity_(arity) {
  for (auto& [alpha, c] : coeffs) add_term(alpha, c);
}

Polynomial Polynomial::constant(std::size_t arity, cplx c) {
  Polynomial p(arity);
  p.add_term(MultiIndex(arity, 0), c);
  return p;
}

Polynomial Polynomial::coordinate(std::size_t arity, std::size_t i) {
  Polynomial p(arity);
  MultiIndex a(arity, 0);
  a.at(i) = 1;
  p.add_term(a, 1.0);
  return p;
}

Polynomial Polynomial::random(std::size_t arity, int degree, std::mt19937_64& rng, double density) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<MultiIndex> all;
  MultiIndex cur(arity, 0);
  enumerate(arity, degree, cur, 0, degree, all);
  Polynomial p(arity);
  for (const auto& a : all) {
    const double keep = u(rng);
    const cplx c(g(rng), g(rng));
    if (keep <= density) p.add_term(a, c);
  }
  if (p.is_zero()) p.add_term(MultiIndex(arity, 0), 1.0);
  return p;
}

void Polynomial::add_term(const MultiIndex& alpha, cplx c) {
  if (alpha.size() != arity_)
    throw ValidationError("polynomial", "multi-index has " + std::to_string(alpha.size()) +
                                            " entries, expected " + std::to_string(arity_));
  for (int e : alpha)
    if (e < 0) throw ValidationError("polynomial", "negative exponent");
  auto& slot = coeffs_[alpha];
  slot += c;
  if (slot == 0.0) coeffs_.erase(alpha);
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [a, c] : coeffs_) d = std::max(d, std::accumulate(a.begin(), a.end(), 0));
  return d;
}

cplx Polynomial::operator()(std::span<const cplx> z) const {
  cplx s = 0.0;
  for (const auto& [a, c] : coeffs_) {
    cplx t = c;
    for (std::size_t i = 0; i < arity_; ++i)
      for (int e = 0; e < a[i]; ++e) t *= z[i];
    s += t;
  }
  return s;
}

Polynomial Polynomial::shifted(cplx center) const {
  // λ^a = Σ_b C(a,b) center^{a−b} (λ − center)^b, per variable.
  Polynomial out(arity_);
  for (const auto& [a, c] : coeffs_) {
    std::vector<MultiIndex> bs{MultiIndex(arity_, 0)};
    std::vector<cplx> ws{c};
    for (std::size_t i = 0; i < arity_; ++i) {
      std::vector<MultiIndex> nb;
      std::vector<cplx> nw;
      for (std::size_t t = 0; t < bs.size(); ++t)
        for (int b = 0; b <= a[i]; ++b) {
          auto idx = bs[t];
          idx[i] = b;
          nb.push_back(idx);
          nw.push_back(ws[t] * binomial(a[i], b) * ipow(center, a[i] - b));
        }
      bs = std::move(nb);
      ws = std::move(nw);
    }
    for (std::size_t t = 0; t < bs.size(); ++t) out.add_term(bs[t], ws[t]);
  }
  return out;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (o.arity_ != arity_) throw ValidationError("polynomial", "arity mismatch in product");
  Polynomial out(arity_);
  for (const auto& [a, c] : coeffs_)
    for (const auto& [b, e] : o.coeffs_) {
      MultiIndex s(arity_);
      for (std::size_t i = 0; i < arity_; ++i) s[i] = a[i] + b[i];
      out.add_term(s, c * e);
    }
  return out;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  if (o.arity_ != arity_) throw ValidationError("polynomial", "arity mismatch in sum");
  Polynomial out = *this;
  for (const auto& [b, e] : o.coeffs_) out.add_term(b, e);
  return out;
}

json Polynomial::to_json() const {
  json terms = json::array();
  for (const auto& [a, c] : coeffs_) terms.push_back({{"powers", a}, {"coeff", complex_to_json(c)}});
  return {{"arity", arity_}, {"terms", terms}};
}

Polynomial Polynomial::from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "expected an object with \"arity\" and \"terms\"");
  if (!j.contains("arity") || !j["arity"].is_number_integer() || j["arity"].get<long long>() < 1)
    throw ValidationError(path + ".arity", "must be a positive integer");
  const auto arity = j["arity"].get<std::size_t>();
  if (!j.contains("terms") || !j["terms"].is_array()) throw ValidationError(path + ".terms", "must be an array");
  Polynomial p(arity);
  for (std::size_t t = 0; t < j["terms"].size(); ++t) {
    const auto& term = j["terms"][t];
    const std::string tp = path + ".terms[" + std::to_string(t) + "]";
    if (!term.is_object() || !term.contains("powers") || !term["powers"].is_array())
      throw ValidationError(tp + ".powers", "must be an array of exponents");
    MultiIndex a;
    for (const auto& e : term["powers"]) {
      if (!e.is_number_integer() || e.get<int>() < 0)
        throw ValidationError(tp + ".powers", "exponents must be non-negative integers");
      a.push_back(e.get<int>());
    }
    if (a.size() != arity) throw ValidationError(tp + ".powers", "length must equal arity");
    if (!term.contains("coeff")) throw ValidationError(tp + ".coeff", "missing");
    p.add_term(a, complex_from_json(term["coeff"], tp + ".coeff"));
  }
  return p;
}

}  // namespace hinf::funcalc
