#include "hinf/catalog.hpp"

#include <cmath>

namespace hinf::funcalc {

namespace {

double param(const Params& given, const Params& defaults, const std::string& key) {
  if (auto it = given.find(key); it != given.end()) return it->second;
  return defaults.at(key);
}

void reject_unknown(const Params& given, const Params& defaults, const std::string& id) {
  for (const auto& [k, v] : given)
    if (!defaults.count(k)) throw ValidationError("function.params." + k, "unknown parameter for " + id);
}

DecayCertificate cert(CalculusKind kind, std::size_t arity, double c, std::map<std::size_t, double> s) {
  DecayCertificate out;
  out.kind = kind;
  out.c = c;
  out.exponents.assign(arity, 0.0);
  for (auto [i, e] : s) out.exponents[i] = e;
  return out;
}

HoloFn holo(std::size_t arity, VarSet active, Evaluator f, DecayCertificate c, const std::vector<double>& angles,
            bool vertex_regular) {
  HoloFn h;
  h.arity = arity;
  h.active = active;
  h.eval = std::move(f);
  h.certificate = std::move(c);
  h.domain_angles = angles;
  h.vertex_regular = vertex_regular;
  return h;
}

// 1 − max(0, −cos θ): lower bound factor for |1 + z|² / (1 + |z|²) on Σ_θ.
double sector_margin(double theta) { return 1.0 - std::max(0.0, -std::cos(theta)); }

std::vector<CatalogEntry> build() {
  using K = CalculusKind;
  std::vector<CatalogEntry> c;
  const VarSet v1 = VarSet::of({0}), v2 = VarSet::of({1}), v12 = VarSet::of({0, 1});

  c.push_back({"ritt/power", K::ritt, 1, "(1-z)^a", {{"a", 1.0}}, true, [](auto& ang, auto& p) {
                 const double a = param(p, {{"a", 1.0}}, "a");
                 if (!(a > 0.0)) throw ValidationError("function.params.a", "exponent must be positive");
                 const bool integer = std::abs(a - std::round(a)) < 1e-15;
                 return h01_from_holo(holo(
                     1, VarSet::of({0}), [a](std::span<const cplx> z) { return std::pow(1.0 - z[0], a); },
                     cert(K::ritt, 1, 1.0, {{0, a}}), ang, integer));
               }});
  c.push_back({"ritt/sqrt-plus-constant", K::ritt, 1, "(1-z)^(1/2) + b", {{"b", 3.0}}, false,
               [](auto& ang, auto& p) {
                 const double b = param(p, {{"b", 3.0}}, "b");
                 return h01_from_function(
                     1, K::ritt, ang, [b](std::span<const cplx> z) { return std::sqrt(1.0 - z[0]) + b; },
                     {{VarSet::of({0}), cert(K::ritt, 1, 1.0, {{0, 0.5}})}}, false);
               }});
  c.push_back({"ritt/resolvent-shift", K::ritt, 1, "(1-z)/(b-z)", {{"b", 2.0}}, true, [](auto& ang, auto& p) {
                 const double b = param(p, {{"b", 2.0}}, "b");
                 if (!(b > 1.0)) throw ValidationError("function.params.b", "must exceed 1");
                 return h01_from_holo(holo(
                     1, VarSet::of({0}), [b](std::span<const cplx> z) { return (1.0 - z[0]) / (b - z[0]); },
                     cert(K::ritt, 1, 1.0 / (b - 1.0), {{0, 1.0}}), ang, true));
               }});
  c.push_back({"ritt/exp-decay", K::ritt, 1, "(1-z) exp(z)", {}, true, [](auto& ang, auto&) {
                 return h01_from_holo(holo(
                     1, VarSet::of({0}), [](std::span<const cplx> z) { return (1.0 - z[0]) * std::exp(z[0]); },
                     cert(K::ritt, 1, std::exp(1.0), {{0, 1.0}}), ang, true));
               }});
  c.push_back({"ritt/identity", K::ritt, 1, "z", {}, false, [](auto& ang, auto&) {
                 return h01_from_function(
                     1, K::ritt, ang, [](std::span<const cplx> z) { return z[0]; },
                     {{VarSet::of({0}), cert(K::ritt, 1, 1.0, {{0, 1.0}})}}, true);
               }});
  c.push_back({"ritt/inverse-shift", K::ritt, 1, "1/(b-z)", {{"b", 2.0}}, false, [](auto& ang, auto& p) {
                 const double b = param(p, {{"b", 2.0}}, "b");
                 if (!(b > 1.0)) throw ValidationError("function.params.b", "must exceed 1");
                 return h01_from_function(
                     1, K::ritt, ang, [b](std::span<const cplx> z) { return 1.0 / (b - z[0]); },
                     {{VarSet::of({0}), cert(K::ritt, 1, 1.0 / ((b - 1.0) * (b - 1.0)), {{0, 1.0}})}}, true);
               }});
  c.push_back({"ritt/product-power", K::ritt, 2, "(1-z1)^a (1-z2)^a", {{"a", 1.0}}, true, [](auto& ang, auto& p) {
                 const double a = param(p, {{"a", 1.0}}, "a");
                 if (!(a > 0.0)) throw ValidationError("function.params.a", "exponent must be positive");
                 const bool integer = std::abs(a - std::round(a)) < 1e-15;
                 return h01_from_holo(holo(
                     2, VarSet::of({0, 1}),
                     [a](std::span<const cplx> z) { return std::pow(1.0 - z[0], a) * std::pow(1.0 - z[1], a); },
                     cert(K::ritt, 2, 1.0, {{0, a}, {1, a}}), ang, integer));
               }});
  c.push_back({"ritt/product", K::ritt, 2, "z1 z2", {}, false, [](auto& ang, auto&) {
                 Polynomial phi(2);
                 phi.add_term({1, 1}, 1.0);
                 return h01_from_polynomial(phi, ang);
               }});
  c.push_back({"ritt/inverse-shift-product", K::ritt, 2, "1/(2-z1 z2)", {}, false, [v1, v2, v12](auto& ang, auto&) {
                 return h01_from_function(
                     2, K::ritt, ang, [](std::span<const cplx> z) { return 1.0 / (2.0 - z[0] * z[1]); },
                     {{v1, cert(K::ritt, 2, 1.0, {{0, 1.0}})},
                      {v2, cert(K::ritt, 2, 1.0, {{1, 1.0}})},
                      {v12, cert(K::ritt, 2, 5.0, {{0, 1.0}, {1, 1.0}})}},
                     true);
               }});
  c.push_back({"ritt/separable-sum", K::ritt, 2, "(1-z1)^(1/2) + (1-z2)/(2-z2)", {}, false, [v1, v2](auto& ang, auto&) {
                 return h01_from_function(
                     2, K::ritt, ang,
                     [](std::span<const cplx> z) { return std::sqrt(1.0 - z[0]) + (1.0 - z[1]) / (2.0 - z[1]); },
                     {{v1, cert(K::ritt, 2, 1.0, {{0, 0.5}})}, {v2, cert(K::ritt, 2, 1.0, {{1, 1.0}})}}, false);
               }});

  c.push_back({"sect/z-over-one-plus-z-squared", K::sectorial, 1, "z/(1+z)^2", {}, true, [](auto& ang, auto&) {
                 return h01_from_holo(holo(
                     1, VarSet::of({0}), [](std::span<const cplx> z) { return z[0] / ((1.0 + z[0]) * (1.0 + z[0])); },
                     cert(K::sectorial, 1, 1.0 / sector_margin(ang.at(0)), {{0, 1.0}}), ang, false));
               }});
  c.push_back({"sect/sqrt-over-one-plus", K::sectorial, 1, "z^(1/2)/(1+z)", {}, true, [](auto& ang, auto&) {
                 return h01_from_holo(holo(
                     1, VarSet::of({0}), [](std::span<const cplx> z) { return std::sqrt(z[0]) / (1.0 + z[0]); },
                     cert(K::sectorial, 1, std::sqrt(2.0 / sector_margin(ang.at(0))), {{0, 0.5}}), ang, false));
               }});
  c.push_back({"sect/two-pole", K::sectorial, 1, "z/((1+z)(2+z))", {}, true, [](auto& ang, auto&) {
                 return h01_from_holo(holo(
                     1, VarSet::of({0}), [](std::span<const cplx> z) { return z[0] / ((1.0 + z[0]) * (2.0 + z[0])); },
                     cert(K::sectorial, 1, 1.0 / sector_margin(ang.at(0)), {{0, 1.0}}), ang, false));
               }});
  c.push_back({"sect/shifted-constant", K::sectorial, 1, "b + z/(1+z)^2", {{"b", 2.0}}, false, [](auto& ang, auto& p) {
                 const double b = param(p, {{"b", 2.0}}, "b");
                 return h01_from_function(
                     1, K::sectorial, ang,
                     [b](std::span<const cplx> z) { return b + z[0] / ((1.0 + z[0]) * (1.0 + z[0])); },
                     {{VarSet::of({0}), cert(K::sectorial, 1, 1.0 / sector_margin(ang.at(0)), {{0, 1.0}})}}, false);
               }});
  c.push_back({"sect/product-z-over-one-plus-z-squared", K::sectorial, 2, "z1 z2/((1+z1)^2 (1+z2)^2)", {}, true,
               [](auto& ang, auto&) {
                 const double cc = 1.0 / (sector_margin(ang.at(0)) * sector_margin(ang.at(1)));
                 return h01_from_holo(holo(
                     2, VarSet::of({0, 1}),
                     [](std::span<const cplx> z) {
                       return z[0] * z[1] / ((1.0 + z[0]) * (1.0 + z[0]) * (1.0 + z[1]) * (1.0 + z[1]));
                     },
                     cert(K::sectorial, 2, cc, {{0, 1.0}, {1, 1.0}}), ang, false));
               }});
  return c;
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = build();
  return entries;
}

const CatalogEntry& catalog_entry(const std::string& id) {
  for (const auto& e : catalog())
    if (e.id == id) return e;
  throw ValidationError("function.catalog", "unknown catalog id \"" + id + "\"");
}

H01Fn make_catalog_function(const std::string& id, const std::vector<double>& angles, const Params& params) {
  const auto& e = catalog_entry(id);
  reject_unknown(params, e.defaults, id);
  if (angles.size() != e.arity)
    throw ValidationError("angles", id + " expects " + std::to_string(e.arity) + " domain angles");
  return e.make(angles, params);
}

HoloFn make_catalog_holo(const std::string& id, const std::vector<double>& angles, const Params& params) {
  const auto& e = catalog_entry(id);
  if (!e.single_piece) throw ValidationError("function.catalog", id + " is not a single H∞₀ piece");
  auto h = make_catalog_function(id, angles, params);
  return h.pieces.begin()->second;
}

json catalog_to_json() {
  json arr = json::array();
  for (const auto& e : catalog()) {
    json j;
    j["id"] = e.id;
    j["kind"] = to_string(e.kind);
    j["arity"] = e.arity;
    j["formula"] = e.formula;
    j["params"] = e.defaults;
    j["single_piece"] = e.single_piece;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace hinf::funcalc
