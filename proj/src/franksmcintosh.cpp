#include "hinf/franksmcintosh.hpp"

#include "hinf/domains.hpp"
#include "hinf/parallel.hpp"
#include "hinf/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace hinf::fm {

namespace {

constexpr cplx kTwoPiI{0.0, 2.0 * kPi};

// Discrete inner product Σ_q w_q f_q conj(g_q).
cplx inner(const Eigen::VectorXcd& f, const Eigen::VectorXcd& g, const Eigen::VectorXd& w) {
  cplx s = 0.0;
  for (Eigen::Index q = 0; q < f.size(); ++q) s += w(q) * f(q) * std::conj(g(q));
  return s;
}

ArcPiece gamma0_arc(double r, double theta0, double dtheta, int k, double delta, int n) {
  ArcPiece a;
  a.m = 0;
  a.k = k;
  const double t0 = theta0 + k * dtheta;
  a.center = std::polar(r, t0 + 0.5 * dtheta);
  a.radius = delta;
  const auto rule = gauss_legendre_on(t0, t0 + dtheta, n);
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const cplx z = std::polar(r, rule.nodes[q]);
    a.nodes.push_back(z);
    a.weights.push_back(rule.weights[q]);
    a.signed_weights.push_back(kI * z * rule.weights[q] / (1.0 - z));
  }
  return a;
}

ArcPiece segment_arc(int m, double l, double rho, double mu, int k, int n) {
  ArcPiece a;
  a.m = m;
  a.k = k;
  const double hi = l * std::pow(rho, -k), lo = hi / rho;
  const cplx u = std::polar(1.0, kPi - mu);
  const double tc = 0.5 * (lo + hi);
  a.center = 1.0 + tc * u;
  a.radius = hi - lo;
  // log t is uniform for |dz/(1−z)| = dt/t
  const auto rule = gauss_legendre_on(std::log(lo), std::log(hi), n);
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double t = std::exp(rule.nodes[q]);
    a.nodes.push_back(1.0 + t * u);
    a.weights.push_back(rule.weights[q]);
    // Γ₁ leaves 1, so dz/(1−z) = −dt/t there.
    a.signed_weights.push_back(-rule.weights[q]);
  }
  if (m == 2) {
    a.center = std::conj(a.center);
    for (auto& z : a.nodes) z = std::conj(z);
    // Γ₂ runs into 1: dz/(1−z) = +|dz/(1−z)|
    for (auto& s : a.signed_weights) s = -s;
  }
  return a;
}

std::size_t product(const std::vector<std::size_t>& v, std::size_t from, std::size_t to) {
  std::size_t p = 1;
  for (std::size_t i = from; i < to; ++i) p *= v[i];
  return p;
}

using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// out[pre, a·(J+1)+j, post] = Σ_{q ∈ arc a} e_j(z_q) w_q in[pre, off_a + q, post]
std::vector<cplx> contract_nodes(const std::vector<cplx>& in, std::vector<std::size_t>& dims, std::size_t v,
                                 const FMGeometry& g) {
  const auto pre = static_cast<Eigen::Index>(product(dims, 0, v));
  const auto post = static_cast<Eigen::Index>(product(dims, v + 1, dims.size()));
  const auto nb = static_cast<Eigen::Index>(g.basis_size()), n = static_cast<Eigen::Index>(dims[v]);
  const int J1 = g.basis_per_arc();
  std::vector<ComplexMatrix> B;
  for (std::size_t a = 0; a < g.arcs.size(); ++a)
    B.push_back(Eigen::Map<const Eigen::VectorXd>(g.arcs[a].weights.data(), g.arcs[a].weights.size()).asDiagonal() *
                g.bases[a].values);
  std::vector<cplx> out(static_cast<std::size_t>(pre * nb * post));
  if (post == 1) {
    Eigen::Map<const RowMajor> X(in.data(), pre, n);
    Eigen::Map<RowMajor> Y(out.data(), pre, nb);
    for (std::size_t a = 0; a < g.arcs.size(); ++a)
      Y.middleCols(a * J1, J1).noalias() = X.middleCols(g.offsets[a], B[a].rows()) * B[a];
  } else {
    for (Eigen::Index p = 0; p < pre; ++p) {
      Eigen::Map<const RowMajor> X(in.data() + p * n * post, n, post);
      Eigen::Map<RowMajor> Y(out.data() + p * nb * post, nb, post);
      for (std::size_t a = 0; a < g.arcs.size(); ++a)
        Y.middleRows(a * J1, J1).noalias() = B[a].transpose() * X.middleRows(g.offsets[a], B[a].rows());
    }
  }
  dims[v] = static_cast<std::size_t>(nb);
  return out;
}

// out[pre, i', post] = Σ_i M(i, i') in[pre, i, post]
std::vector<cplx> mode_product(const std::vector<cplx>& in, std::vector<std::size_t>& dims, std::size_t v,
                               const ComplexMatrix& M) {
  const std::size_t pre = product(dims, 0, v), post = product(dims, v + 1, dims.size());
  const std::size_t n = dims[v], m = static_cast<std::size_t>(M.cols());
  std::vector<cplx> out(pre * m * post, 0.0);
  for (std::size_t p = 0; p < pre; ++p)
    for (std::size_t i = 0; i < n; ++i) {
      const cplx* src = &in[(p * n + i) * post];
      for (std::size_t k = 0; k < m; ++k) {
        const cplx c = M(i, k);
        if (c == 0.0) continue;
        cplx* dst = &out[(p * m + k) * post];
        for (std::size_t s = 0; s < post; ++s) dst[s] += c * src[s];
      }
    }
  dims[v] = m;
  return out;
}

std::vector<cplx> all_nodes(const FMGeometry& g) {
  std::vector<cplx> z;
  z.reserve(g.node_count());
  for (const auto& a : g.arcs) z.insert(z.end(), a.nodes.begin(), a.nodes.end());
  return z;
}

void require_in_domain(const FMGeometry& g, cplx zeta) {
  if (!domains::stolz_contains(g.options.alpha, zeta))
    throw DomainError("ζ = (" + std::to_string(zeta.real()) + ", " + std::to_string(zeta.imag()) +
                      ") is not in B_α");
}

}  // namespace

json FMOptions::to_json() const {
  return {{"alpha", alpha}, {"mu", mu}, {"rho", rho}, {"Kmax", Kmax}, {"Jmax", Jmax}, {"nodes_per_arc", nodes_per_arc}};
}

double ArcPiece::mass() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

Eigen::VectorXcd OrthoBasis::evaluate(cplx w) const {
  const int J = degree();
  Eigen::VectorXcd e(J + 1);
  e(0) = e0;
  for (int j = 0; j < J; ++j) {
    cplx v = w * e(j);
    for (int i = 0; i <= j; ++i) v -= recurrence(i, j) * e(i);
    e(j + 1) = v / recurrence(j + 1, j);
  }
  return e;
}

OrthoBasis build_basis(const ArcPiece& arc, int Jmax) {
  const auto n = static_cast<Eigen::Index>(arc.nodes.size());
  if (Jmax < 0) throw ValidationError("Jmax", "must be nonnegative");
  if (n < 4 * Jmax || n < Jmax + 1)
    throw ValidationError("nodes_per_arc", "need at least 4·Jmax quadrature nodes per arc");
  Eigen::VectorXd w(n);
  Eigen::VectorXcd x(n);
  for (Eigen::Index q = 0; q < n; ++q) {
    w(q) = arc.weights[q];
    x(q) = (arc.nodes[q] - arc.center) / arc.radius;
  }
  OrthoBasis b;
  b.values.resize(n, Jmax + 1);
  b.recurrence = ComplexMatrix::Zero(Jmax + 1, std::max(Jmax, 1));
  b.monomial = ComplexMatrix::Zero(Jmax + 1, Jmax + 1);
  const double mass = w.sum();
  b.e0 = 1.0 / std::sqrt(mass);
  b.values.col(0).setConstant(b.e0);
  b.monomial(0, 0) = b.e0;
  for (int j = 0; j < Jmax; ++j) {
    Eigen::VectorXcd v = x.cwiseProduct(b.values.col(j));
    const double start = std::sqrt(std::abs(inner(v, v, w)));
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) {
        const cplx h = inner(v, b.values.col(i), w);
        b.recurrence(i, j) += h;
        v -= h * b.values.col(i);
      }
    const double norm = std::sqrt(std::abs(inner(v, v, w)));
    b.min_pivot_ratio = std::min(b.min_pivot_ratio, norm / start);
    if (!(norm > 1e-10 * start))
      throw BasisDegeneracyError("orthogonalization lost rank at degree " + std::to_string(j + 1) +
                                 "; use a smaller Jmax or more nodes");
    b.recurrence(j + 1, j) = norm;
    b.values.col(j + 1) = v / norm;
    // monomial coefficients through the same recurrence
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(Jmax + 1);
    c.segment(1, j + 1) = b.monomial.col(j).head(j + 1);
    for (int i = 0; i <= j; ++i) c -= b.recurrence(i, j) * b.monomial.col(i);
    b.monomial.col(j + 1) = c / norm;
  }
  ComplexMatrix G = b.values.adjoint() * w.asDiagonal() * b.values;
  b.orthonormality_residual = (G - ComplexMatrix::Identity(Jmax + 1, Jmax + 1)).cwiseAbs().maxCoeff();
  if (b.orthonormality_residual > 1e-8)
    throw BasisDegeneracyError("orthonormality residual " + std::to_string(b.orthonormality_residual) +
                               " exceeds 1e-8; use a smaller Jmax");
  Eigen::JacobiSVD<ComplexMatrix> svd(b.monomial);
  const auto& s = svd.singularValues();
  const double cond = s(0) / s(s.size() - 1);
  b.monomial_gram_condition = cond * cond;
  return b;
}

std::size_t FMGeometry::node_count() const {
  std::size_t n = 0;
  for (const auto& a : arcs) n += a.nodes.size();
  return n;
}

std::size_t FMGeometry::arc_index(int m, int k) const {
  const int K1 = options.Kmax + 1;
  if (m == 0 && k >= 0 && k <= N) return static_cast<std::size_t>(k);
  if ((m == 1 || m == 2) && k >= 0 && k < K1) return static_cast<std::size_t>(N + 1 + (m - 1) * K1 + k);
  throw ValidationError("arc", "no arc γ_{" + std::to_string(m) + "," + std::to_string(k) + "}");
}

json FMGeometry::to_json() const {
  json arcs_json = json::array();
  for (std::size_t a = 0; a < arcs.size(); ++a) {
    const auto& arc = arcs[a];
    arcs_json.push_back({{"m", arc.m},
                         {"k", arc.k},
                         {"center", complex_to_json(arc.center)},
                         {"disc_radius", arc.radius},
                         {"mass", arc.mass()},
                         {"nodes", arc.nodes.size()},
                         {"orthonormality_residual", bases[a].orthonormality_residual},
                         {"monomial_gram_condition", bases[a].monomial_gram_condition}});
  }
  return {{"options", options.to_json()},
          {"l", l},
          {"delta", delta},
          {"N", N},
          {"min_disc_clearance", min_disc_clearance},
          {"max_mass_error", max_mass_error},
          {"max_orthonormality_residual", max_orthonormality_residual},
          {"arcs", arcs_json}};
}

GeometryPtr build_geometry(const FMOptions& opts) {
  const double a = opts.alpha, mu = opts.mu, rho = opts.rho;
  if (!(a > 0.0 && a < mu && mu < kPi / 2))
    throw ValidationError("geometry", "angles must satisfy 0 < α < μ < π/2");
  if (!(rho > 1.0) || !std::isfinite(rho)) throw ValidationError("geometry.rho", "ρ must exceed 1");
  if (opts.Kmax < 0 || opts.Jmax < 0) throw ValidationError("geometry", "Kmax and Jmax must be nonnegative");
  const int n = opts.nodes_per_arc > 0 ? opts.nodes_per_arc : std::max(24, 4 * opts.Jmax);

  auto g = std::make_shared<FMGeometry>();
  g->options = opts;
  g->options.nodes_per_arc = n;
  g->l = std::cos(mu);
  const domains::StolzDomain inner_dom(a), outer(mu);

  // Γ₀: equal arcs of length δ ≤ dist(∂B_α, Γ₀)/2
  const double r = std::sin(mu), theta0 = kPi / 2 - mu, span = kPi + 2 * mu;
  double dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 20000; ++i)
    dist = std::min(dist, inner_dom.boundary_distance(std::polar(r, theta0 + span * i / 20000.0)));
  const double L0 = r * span;
  const int count = static_cast<int>(std::ceil(L0 / (0.5 * dist)));
  g->delta = L0 / count;
  g->N = count - 1;
  for (int k = 0; k < count; ++k) g->arcs.push_back(gamma0_arc(r, theta0, span / count, k, g->delta, n));
  for (int m = 1; m <= 2; ++m)
    for (int k = 0; k <= opts.Kmax; ++k) g->arcs.push_back(segment_arc(m, g->l, rho, mu, k, n));

  // Disc avoidance, explicitly for the built discs and by self-similarity beyond Kmax.
  g->min_disc_clearance = std::numeric_limits<double>::infinity();
  for (const auto& arc : g->arcs) {
    const double c = (inner_dom.boundary_distance(arc.center) - arc.radius) / arc.radius;
    g->min_disc_clearance = std::min(g->min_disc_clearance, c);
    if (!(c > 0.0))
      throw GeometryError("closed disc D_{" + std::to_string(arc.m) + "," + std::to_string(arc.k) +
                          "} meets ∂B_α; decrease ρ − 1 or widen μ − α");
  }
  if (!(2.0 * (rho - 1.0) / (rho + 1.0) < std::sin(mu - a)))
    throw GeometryError("discs D_{1,k} meet ∂B_α for large k; decrease ρ − 1 or widen μ − α");

  std::size_t off = 0;
  for (const auto& arc : g->arcs) {
    g->offsets.push_back(off);
    off += arc.nodes.size();
  }
  g->bases = parallel_map<OrthoBasis>(g->arcs.size(),
                                      [&](std::size_t i) { return build_basis(g->arcs[i], opts.Jmax); });
  for (std::size_t i = 0; i < g->arcs.size(); ++i) {
    g->max_orthonormality_residual = std::max(g->max_orthonormality_residual, g->bases[i].orthonormality_residual);
    if (g->arcs[i].m != 0)
      g->max_mass_error = std::max(g->max_mass_error, std::abs(g->arcs[i].mass() - std::log(rho)));
  }
  return g;
}

cplx kernel(cplx z, cplx zeta) {
  if (z == zeta) throw DomainError("kernel is singular at z = ζ");
  return std::sqrt(1.0 - z) * std::sqrt(1.0 - zeta) / (z - zeta);
}

cplx compute_phi(const FMGeometry& g, int m, int k, int j, cplx zeta) {
  require_in_domain(g, zeta);
  if (j < 0 || j > g.options.Jmax) throw ValidationError("j", "basis index out of range");
  const auto a = g.arc_index(m, k);
  const auto& arc = g.arcs[a];
  const auto& E = g.bases[a].values;
  cplx s = 0.0;
  for (std::size_t q = 0; q < arc.nodes.size(); ++q)
    s += std::conj(E(q, j)) * kernel(arc.nodes[q], zeta) * arc.signed_weights[q];
  return s / kTwoPiI;
}

Eigen::VectorXcd phi_vector(const FMGeometry& g, cplx zeta) {
  require_in_domain(g, zeta);
  const int J1 = g.basis_per_arc();
  Eigen::VectorXcd out(g.basis_size());
  const cplx root = std::sqrt(1.0 - zeta);
  for (std::size_t a = 0; a < g.arcs.size(); ++a) {
    const auto& arc = g.arcs[a];
    Eigen::VectorXcd t(arc.nodes.size());
    for (std::size_t q = 0; q < arc.nodes.size(); ++q)
      t(q) = arc.signed_weights[q] * std::sqrt(1.0 - arc.nodes[q]) / (arc.nodes[q] - zeta);
    out.segment(a * J1, J1) = g.bases[a].values.adjoint() * t * (root / kTwoPiI);
  }
  return out;
}

std::vector<ComplexMatrix> phi_operators(const FMGeometry& g, const ComplexMatrix& T) {
  for (cplx lam : operators::eigenvalues(T))
    if (std::abs(1.0 - lam) > 1e-10 && !domains::stolz_contains(g.options.alpha, lam))
      throw DomainError("spectrum is not contained in B_α ∪ {1}");
  const auto n = T.rows();
  const ComplexMatrix S = principal_sqrt(identity(n) - T);
  const int J1 = g.basis_per_arc();
  auto blocks = parallel_map<std::vector<ComplexMatrix>>(g.arcs.size(), [&](std::size_t a) {
    const auto& arc = g.arcs[a];
    const auto& E = g.bases[a].values;
    std::vector<ComplexMatrix> out(J1, ComplexMatrix::Zero(n, n));
    for (std::size_t q = 0; q < arc.nodes.size(); ++q) {
      const ComplexMatrix X =
          (arc.signed_weights[q] * std::sqrt(1.0 - arc.nodes[q]) / kTwoPiI) * operators::resolvent(T, arc.nodes[q]);
      for (int j = 0; j < J1; ++j) out[j] += std::conj(E(q, j)) * X;
    }
    for (auto& m : out) m = m * S;
    return out;
  });
  std::vector<ComplexMatrix> all;
  all.reserve(g.basis_size());
  for (auto& b : blocks)
    for (auto& m : b) all.push_back(std::move(m));
  return all;
}

cplx FMDecomposition::coefficient(int m, int k, int j) const {
  if (j < 0 || j > geometry->options.Jmax) throw ValidationError("j", "basis index out of range");
  return coefficients(geometry->arc_index(m, k) * geometry->basis_per_arc() + j);
}

json FMDecomposition::to_json() const {
  const auto& g = *geometry;
  json coeffs = json::array();
  for (std::size_t a = 0; a < g.arcs.size(); ++a) {
    json row = json::array();
    for (int j = 0; j < g.basis_per_arc(); ++j) row.push_back(complex_to_json(coefficients(a * g.basis_per_arc() + j)));
    coeffs.push_back({{"m", g.arcs[a].m}, {"k", g.arcs[a].k}, {"a", row}});
  }
  return {{"sup_norm", sup_norm},
          {"max_coefficient", max_coefficient},
          {"max_bound_ratio", max_bound_ratio},
          {"coefficients", coeffs}};
}

FMDecomposition decompose_1var(GeometryPtr g, const std::function<cplx(cplx)>& h) {
  FMDecomposition d;
  d.geometry = g;
  const int J1 = g->basis_per_arc();
  d.coefficients.resize(g->basis_size());
  d.projected.resize(g->node_count());
  for (std::size_t a = 0; a < g->arcs.size(); ++a) {
    const auto& arc = g->arcs[a];
    const auto& E = g->bases[a].values;
    Eigen::VectorXcd hw(arc.nodes.size());
    double sup = 0.0;
    for (std::size_t q = 0; q < arc.nodes.size(); ++q) {
      const cplx v = h(arc.nodes[q]);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw DomainError("function is not finite on γ_{" + std::to_string(arc.m) + "," + std::to_string(arc.k) + "}");
      sup = std::max(sup, std::abs(v));
      hw(q) = v * arc.weights[q];
    }
    d.sup_norm = std::max(d.sup_norm, sup);
    const Eigen::VectorXcd c = E.transpose() * hw;
    d.coefficients.segment(a * J1, J1) = c;
    d.projected.segment(g->offsets[a], arc.nodes.size()) = E.conjugate() * c;
  }
  d.max_coefficient = d.coefficients.cwiseAbs().maxCoeff();
  for (std::size_t a = 0; a < g->arcs.size(); ++a) {
    const double bound = std::sqrt(g->arcs[a].mass()) * d.sup_norm;
    if (bound > 0.0)
      d.max_bound_ratio =
          std::max(d.max_bound_ratio, d.coefficients.segment(a * J1, J1).cwiseAbs().maxCoeff() / bound);
  }
  return d;
}

cplx reconstruct_1var(const FMDecomposition& d, cplx zeta) {
  const auto& g = *d.geometry;
  require_in_domain(g, zeta);
  cplx s = 0.0;
  for (std::size_t a = 0; a < g.arcs.size(); ++a) {
    const auto& arc = g.arcs[a];
    for (std::size_t q = 0; q < arc.nodes.size(); ++q)
      s += d.projected(g.offsets[a] + q) * arc.signed_weights[q] * std::sqrt(1.0 - arc.nodes[q]) /
           (arc.nodes[q] - zeta);
  }
  return std::sqrt(1.0 - zeta) * s / kTwoPiI;
}

std::vector<cplx> zeta_grid(double alpha, int boundary_points, double min_vertex_distance) {
  const domains::StolzDomain dom(alpha);
  std::vector<cplx> out;
  for (int i = 0; i < boundary_points; ++i) {
    const cplx b = dom.boundary_point(dom.perimeter() * (i + 0.5) / boundary_points);
    for (double tau : {0.3, 0.6, 0.85, 0.97}) {
      const cplx z = tau * b;
      if (std::abs(1.0 - z) >= min_vertex_distance) out.push_back(z);
    }
  }
  return out;
}

double reconstruction_error(const FMDecomposition& d, const std::function<cplx(cplx)>& h,
                            const std::vector<cplx>& grid) {
  const auto err = parallel_map<double>(grid.size(), [&](std::size_t i) {
    return std::abs(reconstruct_1var(d, grid[i]) - h(grid[i]));
  });
  return err.empty() ? 0.0 : *std::max_element(err.begin(), err.end());
}

json FMTensor::to_json() const {
  json c = json::array();
  for (auto v : coefficients) c.push_back(complex_to_json(v));
  return {{"dims", dims},
          {"sup_norm", sup_norm},
          {"max_coefficient", max_coefficient},
          {"max_bound_ratio", max_bound_ratio},
          {"coefficients", c}};
}

FMTensor decompose_dvar(const std::vector<GeometryPtr>& geoms, const funcalc::Evaluator& h, const DvarOptions& opts) {
  const std::size_t d = geoms.size();
  if (d == 0) throw ValidationError("geometries", "need at least one variable");
  double evals = 1.0;
  for (const auto& g : geoms) evals *= static_cast<double>(g->node_count());
  if (evals > opts.max_evaluations)
    throw GuardError("product quadrature needs " + std::to_string(evals) + " evaluations, above the cap " +
                     std::to_string(opts.max_evaluations));

  std::vector<std::vector<cplx>> nodes;
  for (const auto& g : geoms) nodes.push_back(all_nodes(*g));
  const auto& g0 = *geoms[0];
  const int J0 = g0.basis_per_arc();

  struct Slab {
    std::vector<cplx> data;
    double sup = 0.0;
  };
  // One slab per arc of variable 0: inner variables are contracted first.
  auto slabs = parallel_map<Slab>(g0.arcs.size(), [&](std::size_t a) {
    const auto& arc = g0.arcs[a];
    std::vector<std::size_t> dims{arc.nodes.size()};
    for (std::size_t v = 1; v < d; ++v) dims.push_back(nodes[v].size());
    const std::size_t total = product(dims, 0, d);
    Slab s;
    std::vector<cplx> vals(total);
    std::vector<cplx> point(d);
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t f = 0; f < total; ++f) {
      point[0] = arc.nodes[idx[0]];
      for (std::size_t v = 1; v < d; ++v) point[v] = nodes[v][idx[v]];
      const cplx val = h(point);
      if (!std::isfinite(val.real()) || !std::isfinite(val.imag()))
        throw DomainError("function is not finite on the product of arcs");
      vals[f] = val;
      s.sup = std::max(s.sup, std::abs(val));
      for (std::size_t v = d; v-- > 0;) {
        if (++idx[v] < dims[v]) break;
        idx[v] = 0;
      }
    }
    for (std::size_t v = d; v-- > 1;) vals = contract_nodes(vals, dims, v, *geoms[v]);
    // variable 0 restricted to this arc
    ComplexMatrix B(arc.nodes.size(), J0);
    for (std::size_t q = 0; q < arc.nodes.size(); ++q)
      for (int j = 0; j < J0; ++j) B(q, j) = g0.bases[a].values(q, j) * arc.weights[q];
    s.data = mode_product(vals, dims, 0, B);
    return s;
  });

  FMTensor t;
  t.geometries = geoms;
  for (const auto& g : geoms) t.dims.push_back(g->basis_size());
  const std::size_t inner = product(t.dims, 1, d);
  t.coefficients.resize(product(t.dims, 0, d));
  for (std::size_t a = 0; a < slabs.size(); ++a) {
    std::copy(slabs[a].data.begin(), slabs[a].data.end(), t.coefficients.begin() + a * J0 * inner);
    t.sup_norm = std::max(t.sup_norm, slabs[a].sup);
  }
  // bound ratio |a| / (∏ √mass · sup)
  std::vector<std::vector<double>> root_mass(d);
  for (std::size_t v = 0; v < d; ++v)
    for (const auto& arc : geoms[v]->arcs) root_mass[v].push_back(std::sqrt(arc.mass()));
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t f = 0; f < t.coefficients.size(); ++f) {
    const double mag = std::abs(t.coefficients[f]);
    t.max_coefficient = std::max(t.max_coefficient, mag);
    double bound = t.sup_norm;
    for (std::size_t v = 0; v < d; ++v) bound *= root_mass[v][idx[v] / geoms[v]->basis_per_arc()];
    if (bound > 0.0) t.max_bound_ratio = std::max(t.max_bound_ratio, mag / bound);
    for (std::size_t v = d; v-- > 0;) {
      if (++idx[v] < t.dims[v]) break;
      idx[v] = 0;
    }
  }
  return t;
}

std::vector<cplx> reconstruct_dvar_grid(const FMTensor& t, const funcalc::Axes& axes) {
  const std::size_t d = t.dims.size();
  if (axes.size() != d) throw ValidationError("axes", "one axis per variable");
  std::vector<cplx> data = t.coefficients;
  auto dims = t.dims;
  for (std::size_t v = 0; v < d; ++v) {
    const auto& g = *t.geometries[v];
    ComplexMatrix P(g.basis_size(), axes[v].size());
    const auto cols =
        parallel_map<Eigen::VectorXcd>(axes[v].size(), [&](std::size_t i) { return phi_vector(g, axes[v][i]); });
    for (std::size_t i = 0; i < cols.size(); ++i) P.col(i) = cols[i];
    data = mode_product(data, dims, v, P);
  }
  return data;
}

cplx reconstruct_dvar(const FMTensor& t, std::span<const cplx> zeta) {
  funcalc::Axes axes;
  for (cplx z : zeta) axes.push_back({z});
  return reconstruct_dvar_grid(t, axes).at(0);
}

ComplexMatrix fm_series(const FMTensor& t, const operators::CommutingTuple& tuple) {
  const std::size_t d = t.dims.size();
  if (tuple.arity() != d) throw ValidationError("tuple", "tuple size differs from the number of variables");
  const auto n = tuple[0].rows();
  std::vector<std::vector<ComplexMatrix>> phis;
  for (std::size_t v = 0; v < d; ++v) phis.push_back(phi_operators(*t.geometries[v], tuple[v]));
  // Contract the last variable into matrices, then fold in the earlier ones.
  std::size_t rest = product(t.dims, 0, d - 1);
  const std::size_t last = t.dims[d - 1];
  std::vector<ComplexMatrix> M = parallel_map<ComplexMatrix>(rest, [&](std::size_t p) {
    ComplexMatrix acc = ComplexMatrix::Zero(n, n);
    for (std::size_t i = 0; i < last; ++i) {
      const cplx c = t.coefficients[p * last + i];
      if (c != 0.0) acc += c * phis[d - 1][i];
    }
    return acc;
  });
  for (std::size_t v = d - 1; v-- > 0;) {
    const std::size_t dim = t.dims[v];
    rest /= dim;
    std::vector<ComplexMatrix> next(rest, ComplexMatrix::Zero(n, n));
    for (std::size_t p = 0; p < rest; ++p)
      for (std::size_t i = 0; i < dim; ++i) next[p] += phis[v][i] * M[p * dim + i];
    M = std::move(next);
  }
  return M.at(0);
}

json CrosscheckResult::to_json() const {
  return {{"residual", residual},
          {"absolute", absolute},
          {"series", matrix_to_json(series)},
          {"reference", matrix_to_json(reference)}};
}

CrosscheckResult fm_joint_fc_crosscheck(const operators::CommutingTuple& tuple, const funcalc::H01Fn& h,
                                        const std::vector<GeometryPtr>& geoms, const funcalc::QuadratureOptions& qopts) {
  if (h.arity != tuple.arity() || geoms.size() != tuple.arity())
    throw ValidationError("function", "arity, tuple size and geometry count must agree");
  funcalc::Evaluator whole = [&h](std::span<const cplx> z) { return h(z); };
  const auto t = decompose_dvar(geoms, whole);
  CrosscheckResult r;
  r.series = fm_series(t, tuple);
  r.reference = funcalc::eval_h01(tuple, h, CalculusKind::ritt, qopts);
  r.absolute = operator_norm(r.series - r.reference);
  r.residual = r.absolute / std::max(operator_norm(r.reference), 1e-300);
  return r;
}

KernelAudit kernel_bound_audit(const FMGeometry& g, int rmax, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double rho = g.options.rho, a = g.options.alpha;
  KernelAudit out;
  for (int k = 0; k <= g.options.Kmax; ++k) {
    const auto& arc = g.arcs[g.arc_index(1, k)];
    for (int r = 0; r <= rmax; ++r)
      for (int s = 0; s < samples; ++s) {
        const cplx z = arc.center + arc.radius * std::sqrt(u(rng)) * std::polar(1.0, 2 * kPi * u(rng));
        const double rad = g.l * std::pow(rho, -r - u(rng));
        const cplx zeta = 1.0 - std::polar(rad, (2 * u(rng) - 1) * 0.95 * a);
        out.constant = std::max(out.constant, std::abs(kernel(z, zeta)) * std::pow(rho, 0.5 * std::abs(k - r)));
        ++out.samples;
      }
  }
  return out;
}

json DecayAudit::to_json() const { return {{"constants", constants}, {"spread", spread}}; }

DecayAudit decay_audit(const FMGeometry& g, int kmax, int jmax, int rmax, int samples, std::uint64_t seed) {
  if (kmax > g.options.Kmax || jmax > g.options.Jmax)
    throw ValidationError("decay_audit", "kmax/jmax exceed the geometry truncation");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double rho = g.options.rho, a = g.options.alpha;
  std::vector<std::vector<cplx>> strata(rmax + 1);
  for (int r = 0; r <= rmax; ++r)
    for (int s = 0; s < samples; ++s) {
      const double rad = g.l * std::pow(rho, -r - u(rng));
      strata[r].push_back(1.0 - std::polar(rad, (2 * u(rng) - 1) * 0.95 * a));
    }
  DecayAudit out;
  out.constants = parallel_map<double>(rmax + 1, [&](std::size_t r) {
    double c = 0.0;
    for (cplx zeta : strata[r]) {
      const auto phi = phi_vector(g, zeta);
      for (int m = 1; m <= 2; ++m)
        for (int k = 0; k <= kmax; ++k) {
          const auto base = g.arc_index(m, k) * g.basis_per_arc();
          for (int j = 0; j <= jmax; ++j)
            c = std::max(c, std::abs(phi(base + j)) * std::ldexp(1.0, j) *
                                std::pow(rho, 0.5 * std::abs(k - static_cast<int>(r))));
        }
    }
    return c;
  });
  const auto [lo, hi] = std::minmax_element(out.constants.begin(), out.constants.end());
  out.spread = *hi / *lo;
  return out;
}

json SummabilityAudit::to_json() const { return {{"p", p}, {"coarse", coarse}, {"fine", fine}}; }

SummabilityAudit summability_audit(const FMGeometry& g, const std::vector<double>& p, int boundary_points) {
  auto sup_sum = [&](int pts) {
    const auto grid = zeta_grid(g.options.alpha, pts, 0.0);
    const auto per = parallel_map<std::vector<double>>(grid.size(), [&](std::size_t i) {
      const auto phi = phi_vector(g, grid[i]);
      std::vector<double> s(p.size(), 0.0);
      for (std::size_t e = 0; e < p.size(); ++e)
        for (Eigen::Index q = 0; q < phi.size(); ++q) s[e] += std::pow(std::abs(phi(q)), p[e]);
      return s;
    });
    std::vector<double> best(p.size(), 0.0);
    for (const auto& s : per)
      for (std::size_t e = 0; e < p.size(); ++e) best[e] = std::max(best[e], s[e]);
    return best;
  };
  SummabilityAudit out;
  out.p = p;
  out.coarse = sup_sum(boundary_points);
  out.fine = sup_sum(2 * boundary_points);
  return out;
}

}  // namespace hinf::fm
