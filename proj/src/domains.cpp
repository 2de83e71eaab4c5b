#include "hinf/domains.hpp"

#include "hinf/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace hinf::domains {

namespace {

double cross(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

double segment_distance(cplx z, cplx a, cplx b) {
  const cplx ab = b - a;
  double t = std::real(std::conj(ab) * (z - a)) / std::norm(ab);
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(z - (a + t * ab));
}

void check_stolz_angle(double gamma) {
  if (!(gamma > 0.0 && gamma < kPi / 2))
    throw DomainError("Stolz angle must lie in (0, π/2), got " + std::to_string(gamma));
}

void append_segment(Contour& c, cplx start, cplx dir, double t0, double t1, int n, int piece) {
  // z(t) = start + t·dir, t from t0 to t1
  const auto rule = gauss_legendre_on(t0, t1, n);
  for (int q = 0; q < n; ++q)
    c.nodes.push_back({start + rule.nodes[q] * dir, rule.weights[q] * dir, piece});
}

void append_arc(Contour& c, double r, double phi0, double phi1, int n, int piece) {
  const auto rule = gauss_legendre_on(phi0, phi1, n);
  for (int q = 0; q < n; ++q) {
    const cplx z = std::polar(r, rule.nodes[q]);
    c.nodes.push_back({z, kI * z * rule.weights[q], piece});
  }
}

}  // namespace

StolzDomain::StolzDomain(double gamma) : gamma_(gamma) {
  check_stolz_angle(gamma);
  radius_ = std::sin(gamma);
  length_ = std::cos(gamma);
  upper_ = std::polar(radius_, kPi / 2 - gamma);
  dir_ = std::polar(1.0, kPi - gamma);
}

bool StolzDomain::contains(cplx z) const {
  if (std::abs(z) < radius_) return true;
  const cplx one{1.0, 0.0};
  const cplx p = upper_, pb = std::conj(upper_);
  // Strictly inside both tangent lines and beyond the chord P P̄.
  const double s1 = cross(p - one, z - one);
  const double s2 = cross(pb - one, z - one);
  return s1 > 0.0 && s2 < 0.0 && z.real() >= p.real();
}

double StolzDomain::boundary_distance(cplx z) const {
  const cplx one{1.0, 0.0};
  double d = std::min(segment_distance(z, one, upper_), segment_distance(z, one, std::conj(upper_)));
  const double a = std::abs(z);
  if (a == 0.0) return std::min(d, radius_);
  const double phi = std::abs(std::arg(z));
  if (phi >= kPi / 2 - gamma_)
    d = std::min(d, std::abs(a - radius_));
  else
    d = std::min({d, std::abs(z - upper_), std::abs(z - std::conj(upper_))});
  return d;
}

cplx StolzDomain::boundary_point(double s) const {
  const double per = perimeter();
  s = std::fmod(s, per);
  if (s < 0.0) s += per;
  if (s <= length_) return 1.0 + s * dir_;
  s -= length_;
  if (s <= arc_length()) return std::polar(radius_, kPi / 2 - gamma_ + s / radius_);
  s -= arc_length();
  return std::conj(upper_) + s * std::conj(-dir_);
}

Sector::Sector(double theta) : theta_(theta) {
  if (!(theta > 0.0 && theta < kPi))
    throw DomainError("sector angle must lie in (0, π), got " + std::to_string(theta));
}

bool Sector::contains(cplx z) const { return z != 0.0 && std::abs(std::arg(z)) < theta_; }

double Contour::total_weight() const {
  double s = 0.0;
  for (const auto& n : nodes) s += std::abs(n.w);
  return s;
}

cplx Contour::integrate(const std::function<cplx(cplx)>& f) const {
  cplx s = 0.0;
  for (const auto& n : nodes) s += f(n.z) * n.w;
  return s;
}

json contour_to_json(const Contour& c) {
  json arr = json::array();
  for (const auto& n : c.nodes)
    arr.push_back({{"z", complex_to_json(n.z)}, {"w", complex_to_json(n.w)}, {"piece", n.piece}});
  return arr;
}

Contour stolz_boundary(double gamma, int nodes_per_piece) {
  if (nodes_per_piece < 2) throw DomainError("nodes_per_piece must be at least 2");
  StolzContourOptions opts;
  opts.nodes_per_piece = nodes_per_piece;
  return stolz_contour(gamma, opts);
}

Contour stolz_contour(double gamma, const StolzContourOptions& opts) {
  const StolzDomain dom(gamma);
  if (opts.nodes_per_piece < 1) throw DomainError("nodes_per_piece must be positive");
  if (opts.grading_levels < 0 || !(opts.grading_ratio > 0.0 && opts.grading_ratio < 1.0))
    throw DomainError("invalid grading parameters");
  const int n = opts.nodes_per_piece;
  const double l = dom.segment_length();

  // Breakpoints in t = |1 − z| along a segment, increasing from 0 to l.
  std::vector<double> breaks{0.0};
  for (int k = opts.grading_levels; k >= 1; --k) breaks.push_back(l * std::pow(opts.grading_ratio, k));
  breaks.push_back(l);

  Contour c;
  int piece = 0;
  const cplx one{1.0, 0.0};
  const cplx u1 = dom.segment_direction();
  const int ng = opts.graded_nodes > 0 ? opts.graded_nodes : n;
  auto nodes_for = [&](std::size_t b) { return b + 2 == breaks.size() ? n : ng; };
  for (std::size_t b = 0; b + 1 < breaks.size(); ++b)
    append_segment(c, one, u1, breaks[b], breaks[b + 1], nodes_for(b), piece++);

  const int arcs = std::max(1, opts.arc_pieces);
  const double phi0 = kPi / 2 - gamma, phi1 = 3 * kPi / 2 + gamma;
  for (int a = 0; a < arcs; ++a)
    append_arc(c, dom.radius(), phi0 + (phi1 - phi0) * a / arcs, phi0 + (phi1 - phi0) * (a + 1) / arcs, n,
               piece++);

  const cplx u2 = std::conj(u1);
  for (std::size_t b = breaks.size() - 1; b >= 1; --b)
    append_segment(c, one, u2, breaks[b], breaks[b - 1], nodes_for(b - 1), piece++);

  c.piece_count = piece;
  c.counterclockwise = true;
  return c;
}

SectorTruncation sector_truncation(double s, double scale, double tol) {
  if (!(s > 0.0)) throw CertificateError("sector truncation needs a decay exponent s > 0");
  if (!(tol > 0.0)) throw DomainError("truncation tolerance must be positive");
  SectorTruncation t;
  if (scale <= 0.0) return t;  // f ≡ 0: nothing to integrate
  // 2·(scale/(π s))·arctan(ε^s) = tol/2 leaves a safety factor of 2.
  const double target = 0.25 * tol * kPi * s / scale;
  const double es = std::tan(std::min(target, kPi / 4));
  t.eps = std::min(std::pow(es, 1.0 / s), 1.0);
  t.R = 1.0 / t.eps;
  t.tail_bound = (scale / (kPi * s)) * (std::atan(std::pow(t.eps, s)) + std::atan(std::pow(t.R, -s)));
  return t;
}

Contour sector_contour(double theta, const SectorTruncation& trunc, const SectorContourOptions& opts) {
  const Sector sector(theta);
  Contour c;
  c.counterclockwise = true;
  if (trunc.R <= 0.0 || trunc.eps <= 0.0 || trunc.R <= trunc.eps) {
    c.piece_count = 0;
    return c;
  }
  const double u0 = std::log(trunc.eps), u1 = std::log(trunc.R);
  const int panels = std::max(1, static_cast<int>(std::ceil((u1 - u0) / opts.panel_width)));
  const double h = (u1 - u0) / panels;
  const cplx lower = std::polar(1.0, -theta), upper = std::polar(1.0, theta);
  int piece = 0;
  // Lower ray outward, then upper ray inward.
  for (int p = 0; p < panels; ++p) {
    const auto rule = gauss_legendre_on(u0 + p * h, u0 + (p + 1) * h, opts.nodes_per_panel);
    for (int q = 0; q < opts.nodes_per_panel; ++q) {
      const cplx z = std::exp(rule.nodes[q]) * lower;
      c.nodes.push_back({z, z * rule.weights[q], piece});
    }
    ++piece;
  }
  for (int p = panels - 1; p >= 0; --p) {
    const auto rule = gauss_legendre_on(u0 + p * h, u0 + (p + 1) * h, opts.nodes_per_panel);
    for (int q = opts.nodes_per_panel - 1; q >= 0; --q) {
      const cplx z = std::exp(rule.nodes[q]) * upper;
      c.nodes.push_back({z, -z * rule.weights[q], piece});
    }
    ++piece;
  }
  c.piece_count = piece;
  return c;
}

Contour sector_boundary(double theta, const DecayCertificate& cert, std::size_t var, double tol,
                        double resolvent_bound, const SectorContourOptions& opts) {
  if (cert.kind != CalculusKind::sectorial) throw CertificateError("sector contour needs a sectorial certificate");
  if (var >= cert.exponents.size() || !(cert.exponents[var] > 0.0))
    throw CertificateError("certificate exponent must be positive for a sector contour");
  const auto trunc = sector_truncation(cert.exponents[var], cert.c * resolvent_bound, tol);
  return sector_contour(theta, trunc, opts);
}

bool stolz_contains(double gamma, cplx zeta) { return StolzDomain(gamma).contains(zeta); }

int annulus_index(cplx zeta, double l, double rho) {
  if (!(rho > 1.0)) throw DomainError("annulus ratio ρ must exceed 1");
  if (!(l > 0.0)) throw DomainError("annulus scale l must be positive");
  const double t = std::abs(1.0 - zeta);
  if (t == 0.0) throw DivergenceError("ζ = 1 has no annulus index");
  if (t > l * (1.0 + 1e-14)) throw DomainError("|1 − ζ| exceeds l: outside the annulus range");
  const double x = std::log(l / t) / std::log(rho);
  int r = std::max(0, static_cast<int>(std::ceil(x)) - 1);
  // Ties: prefer the smaller index when |1 − ζ| sits on l ρ^{-r} up to rounding.
  while (r > 0 && l * std::pow(rho, -r) >= t * (1.0 - 1e-12)) --r;
  while (l * std::pow(rho, -r - 1) > t * (1.0 + 1e-12)) ++r;
  return r;
}

cplx cauchy_integral(const Contour& c, cplx a) {
  cplx s = 0.0;
  for (const auto& n : c.nodes) s += n.w / (n.z - a);
  return s / (2.0 * kPi * kI);
}

AdaptiveResult integrate_adaptive(const std::function<Contour(int)>& build,
                                  const std::function<cplx(cplx)>& f, double rel_tol, int n0, int nmax) {
  AdaptiveResult res;
  int n = n0;
  cplx prev = build(n).integrate(f);
  while (true) {
    const int next = 2 * n;
    if (next > nmax) {
      res.value = prev;
      res.nodes_per_piece = n;
      return res;
    }
    const cplx cur = build(next).integrate(f);
    const double change = std::abs(cur - prev);
    res.last_change = change;
    if (change <= rel_tol * std::max(std::abs(cur), 1e-300) || change == 0.0) {
      res.value = cur;
      res.nodes_per_piece = next;
      res.converged = true;
      return res;
    }
    prev = cur;
    n = next;
  }
}

double default_contour_angle(double type_angle, double domain_angle) {
  return 0.5 * (type_angle + domain_angle);
}

}  // namespace hinf::domains
