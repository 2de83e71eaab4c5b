#pragma once

#include "hinf/certificate.hpp"
#include "hinf/core.hpp"
#include "hinf/json_io.hpp"

#include <functional>
#include <vector>

namespace hinf::domains {

// Interior of the convex hull of {1} ∪ D(0, sin γ).
class StolzDomain {
 public:
  explicit StolzDomain(double gamma);

  double gamma() const { return gamma_; }
  double radius() const { return radius_; }
  double segment_length() const { return length_; }
  // Tangent points of Γ₁ and Γ₂ on the circle |z| = sin γ.
  cplx upper_tangent() const { return upper_; }
  cplx lower_tangent() const { return std::conj(upper_); }
  // Unit direction of Γ₁ leaving the vertex 1.
  cplx segment_direction() const { return dir_; }
  double arc_length() const { return radius_ * (kPi + 2.0 * gamma_); }
  double perimeter() const { return 2.0 * length_ + arc_length(); }

  bool contains(cplx z) const;
  double boundary_distance(cplx z) const;
  cplx boundary_point(double s) const;  // arclength parameter from 1 along Γ₁, Γ₀, Γ₂

 private:
  double gamma_, radius_, length_;
  cplx upper_, dir_;
};

class Sector {
 public:
  explicit Sector(double theta);
  double theta() const { return theta_; }
  bool contains(cplx z) const;

 private:
  double theta_;
};

struct ContourNode {
  cplx z;
  cplx w;  // dz/dt × quadrature weight
  int piece = 0;
};

struct Contour {
  std::vector<ContourNode> nodes;
  int piece_count = 0;
  bool counterclockwise = true;

  double total_weight() const;  // Σ |w_q|
  cplx integrate(const std::function<cplx(cplx)>& f) const;
};

json contour_to_json(const Contour& c);

// Arc Γ₀ plus the two segments, Gauss–Legendre on each.
Contour stolz_boundary(double gamma, int nodes_per_piece);

struct StolzContourOptions {
  int nodes_per_piece = 96;
  // Each segment is split into grading_levels + 1 pieces whose lengths shrink
  // geometrically by grading_ratio toward the vertex 1.
  int grading_levels = 0;
  double grading_ratio = 0.2;
  int graded_nodes = 0;  // nodes on the inner graded pieces; 0 means nodes_per_piece
  int arc_pieces = 1;
};

Contour stolz_contour(double gamma, const StolzContourOptions& opts);

struct SectorTruncation {
  double eps = 0.0;
  double R = 0.0;
  double tail_bound = 0.0;
};

// Radii for rays e^{±iθ}(ε, R) such that
// (scale/(π s))·(arctan ε^s + arctan R^{-s}) < tol, with ε = 1/R.
// scale is c·C (certificate constant times resolvent bound).
SectorTruncation sector_truncation(double s, double scale, double tol);

struct SectorContourOptions {
  int nodes_per_panel = 8;
  double panel_width = 1.0;  // in log|z|
};

Contour sector_contour(double theta, const SectorTruncation& trunc, const SectorContourOptions& opts);

// Contour for the active variable `var` of a sectorial certificate.
Contour sector_boundary(double theta, const DecayCertificate& cert, std::size_t var, double tol,
                        double resolvent_bound = 1.0, const SectorContourOptions& opts = {});

bool stolz_contains(double gamma, cplx zeta);

// Smallest r ≥ 0 with l ρ^{-r-1} ≤ |1−ζ| ≤ l ρ^{-r}.
int annulus_index(cplx zeta, double l, double rho);

// (1/2πi) ∮ dz / (z − a)
cplx cauchy_integral(const Contour& c, cplx a);

struct AdaptiveResult {
  cplx value;
  int nodes_per_piece = 0;
  bool converged = false;
  double last_change = 0.0;
};

// Doubles the node count until successive values agree to rel_tol.
AdaptiveResult integrate_adaptive(const std::function<Contour(int)>& build,
                                  const std::function<cplx(cplx)>& f, double rel_tol = 1e-9,
                                  int n0 = 16, int nmax = 2048);

double default_contour_angle(double type_angle, double domain_angle);

}  // namespace hinf::domains
