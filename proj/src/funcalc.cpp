#include "hinf/funcalc.hpp"

#include "hinf/domains.hpp"
#include "hinf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

namespace hinf::funcalc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t grid_size(const Axes& axes) {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.size();
  return n;
}

// Row-major odometer over the axes.
class Odometer {
 public:
  explicit Odometer(const Axes& axes) : axes_(axes), idx_(axes.size(), 0) {
    point_.resize(axes.size());
    for (std::size_t i = 0; i < axes.size(); ++i) point_[i] = axes[i].empty() ? cplx(0.0) : axes[i][0];
  }
  const std::vector<cplx>& point() const { return point_; }
  const std::vector<std::size_t>& index() const { return idx_; }
  // Returns the lowest axis whose index changed, or axes.size() when done.
  std::size_t next() {
    for (std::size_t k = axes_.size(); k-- > 0;) {
      if (++idx_[k] < axes_[k].size()) {
        point_[k] = axes_[k][idx_[k]];
        return k;
      }
      idx_[k] = 0;
      point_[k] = axes_[k][0];
    }
    return axes_.size();
  }

 private:
  const Axes& axes_;
  std::vector<std::size_t> idx_;
  std::vector<cplx> point_;
};

void check_angles(CalculusKind kind, const std::vector<double>& angles, std::size_t arity) {
  if (angles.size() != arity)
    throw ValidationError("domain_angles", "expected " + std::to_string(arity) + " angles, got " +
                                               std::to_string(angles.size()));
  for (double a : angles) {
    if (kind == CalculusKind::ritt)
      domains::StolzDomain{a};
    else
      domains::Sector{a};
  }
}

std::vector<cplx> interior_samples(CalculusKind kind, double angle) {
  std::vector<cplx> out;
  if (kind == CalculusKind::ritt) {
    const double r = std::sin(angle);
    for (double phi : {0.4, 2.1, -2.7}) out.push_back(std::polar(0.6 * r, phi));
    out.push_back(1.0 - 0.5 * std::cos(angle));
  } else {
    for (double rho : {0.3, 1.7, 6.0}) out.push_back(std::polar(rho, 0.5 * angle * (rho > 1 ? -1.0 : 1.0)));
  }
  return out;
}

HoloFn zero_piece(std::size_t arity, CalculusKind kind, VarSet J, const std::vector<double>& angles) {
  HoloFn g;
  g.arity = arity;
  g.active = J;
  g.eval = [](std::span<const cplx>) { return cplx(0.0); };
  DecayCertificate cert;
  cert.kind = kind;
  cert.c = 0.0;
  cert.exponents.assign(arity, 0.0);
  for (auto i : J.indices()) cert.exponents[i] = 1.0;
  g.certificate = cert;
  g.domain_angles = angles;
  g.vertex_regular = true;
  return g;
}

// Inclusion–exclusion for Q_J (P_J) over a grid: every subset term is evaluated
// once on its own sub-grid and broadcast.
std::vector<cplx> qj_grid(const Evaluator& F, std::size_t d, VarSet J, CalculusKind kind, const LimitOptions& lim,
                          const Axes& axes) {
  const std::size_t total = grid_size(axes);
  std::vector<cplx> out(total, 0.0);
  const VarSet all = VarSet::full(d);
  const cplx fill = inactive_fill(kind);
  for (VarSet S : subsets_of(J)) {
    const double sign = ((J - S).size() % 2 == 1) ? -1.0 : 1.0;
    const VarSet frozen = all - S;
    Axes sub(d);
    for (std::size_t v = 0; v < d; ++v) sub[v] = S.contains(v) ? axes[v] : std::vector<cplx>{fill};
    std::vector<cplx> term;
    term.reserve(grid_size(sub));
    {
      Odometer od(sub);
      do {
        term.push_back(frozen_value(F, od.point(), frozen, kind, lim));
      } while (od.next() < d);
    }
    // Strides of S-axes inside the sub-grid.
    std::vector<std::size_t> sstride(d, 0);
    std::size_t st = 1;
    for (std::size_t v = d; v-- > 0;) {
      if (S.contains(v)) {
        sstride[v] = st;
        st *= axes[v].size();
      }
    }
    std::vector<std::size_t> idx(d, 0);
    std::size_t sidx = 0;
    for (std::size_t lin = 0; lin < total; ++lin) {
      out[lin] += sign * term[sidx];
      for (std::size_t k = d; k-- > 0;) {
        if (++idx[k] < axes[k].size()) {
          sidx += sstride[k];
          break;
        }
        sidx -= sstride[k] * (axes[k].size() - 1);
        idx[k] = 0;
      }
    }
  }
  return out;
}

cplx qj_point(const Evaluator& F, std::size_t d, VarSet J, CalculusKind kind, const LimitOptions& lim,
              std::span<const cplx> z) {
  const VarSet all = VarSet::full(d);
  cplx s = 0.0;
  std::vector<cplx> p(z.begin(), z.end());
  for (VarSet S : subsets_of(J)) {
    const double sign = ((J - S).size() % 2 == 1) ? -1.0 : 1.0;
    s += sign * frozen_value(F, p, all - S, kind, lim);
  }
  return s;
}

}  // namespace

std::vector<cplx> evaluate_on_grid(const Evaluator& f, const Axes& axes) {
  std::vector<cplx> out;
  out.reserve(grid_size(axes));
  if (grid_size(axes) == 0) return out;
  Odometer od(axes);
  do {
    out.push_back(f(od.point()));
  } while (od.next() < axes.size());
  return out;
}

std::vector<cplx> HoloFn::on_grid(const Axes& axes) const {
  if (grid) return grid(axes);
  return evaluate_on_grid(eval, axes);
}

CalculusKind HoloFn::kind() const {
  if (!certificate) throw CertificateError("function has no decay certificate");
  return certificate->kind;
}

void audit(const HoloFn& f) {
  if (!f.eval) throw ValidationError("function", "missing evaluator");
  if (f.arity < 1) throw ValidationError("function.arity", "must be at least 1");
  if (!f.active.subset_of(VarSet::full(f.arity)))
    throw ValidationError("function.active", "active set exceeds the arity");
  if (!f.certificate) throw CertificateError("function has no decay certificate");
  const auto kind = f.certificate->kind;
  check_angles(kind, f.domain_angles, f.arity);
  f.certificate->validate(f.active);
  if (f.certificate->exponents.size() != f.arity)
    throw CertificateError("certificate has " + std::to_string(f.certificate->exponents.size()) +
                           " exponents for arity " + std::to_string(f.arity));
  // Inactive variables must not influence the value.
  std::vector<cplx> base(f.arity);
  for (std::size_t i = 0; i < f.arity; ++i) base[i] = interior_samples(kind, f.domain_angles[i])[0];
  const cplx v0 = f(base);
  for (std::size_t i = 0; i < f.arity; ++i) {
    if (f.active.contains(i)) continue;
    for (cplx alt : interior_samples(kind, f.domain_angles[i])) {
      auto p = base;
      p[i] = alt;
      const cplx v = f(p);
      if (std::abs(v - v0) > 1e-12 * std::max(1.0, std::abs(v0)))
        throw ValidationError("function", "value depends on inactive variable " + std::to_string(i + 1));
    }
  }
}

cplx H01Fn::operator()(std::span<const cplx> z) const {
  if (whole) return whole(z);
  return sum_of_pieces(z);
}

cplx H01Fn::sum_of_pieces(std::span<const cplx> z) const {
  cplx s = constant_term;
  for (const auto& [J, piece] : pieces) s += piece(z);
  return s;
}

H01Fn h01_constant(std::size_t arity, CalculusKind kind, std::vector<double> angles, cplx a) {
  check_angles(kind, angles, arity);
  H01Fn h;
  h.arity = arity;
  h.kind = kind;
  h.domain_angles = std::move(angles);
  h.constant_term = a;
  return h;
}

H01Fn h01_from_holo(const HoloFn& f) {
  audit(f);
  H01Fn h;
  h.arity = f.arity;
  h.kind = f.kind();
  h.domain_angles = f.domain_angles;
  if (f.active.empty()) {
    std::vector<cplx> p(f.arity, inactive_fill(h.kind));
    h.constant_term = f(p);
  } else {
    h.pieces[f.active] = f;
  }
  return h;
}

H01Fn h01_from_pieces(std::size_t arity, CalculusKind kind, std::vector<double> angles, cplx constant,
                      std::vector<HoloFn> pieces) {
  check_angles(kind, angles, arity);
  H01Fn h;
  h.arity = arity;
  h.kind = kind;
  h.domain_angles = std::move(angles);
  h.constant_term = constant;
  for (auto& p : pieces) {
    audit(p);
    if (p.arity != arity) throw ValidationError("pieces", "piece arity differs from the function arity");
    if (p.kind() != kind) throw CertificateError("piece certificate kind differs from the function kind");
    if (p.active.empty()) throw ValidationError("pieces", "the empty set is carried by the constant term");
    if (h.pieces.count(p.active)) throw ValidationError("pieces", "duplicate piece for " + to_string(p.active));
    h.pieces[p.active] = std::move(p);
  }
  return h;
}

HoloFn project_QJ(const H01Fn& f, VarSet J) {
  if (!J.subset_of(VarSet::full(f.arity))) throw ValidationError("J", "subset exceeds the arity");
  auto shared = std::make_shared<const H01Fn>(f);
  Evaluator F = [shared](std::span<const cplx> z) { return (*shared)(z); };
  const auto d = f.arity;
  const auto kind = f.kind;
  const auto lim = f.limits;

  HoloFn g;
  g.arity = d;
  g.active = J;
  g.domain_angles = f.domain_angles;
  g.eval = [F, d, J, kind, lim](std::span<const cplx> z) { return qj_point(F, d, J, kind, lim, z); };
  g.grid = [F, d, J, kind, lim](const Axes& axes) { return qj_grid(F, d, J, kind, lim, axes); };
  if (J.empty()) {
    std::vector<cplx> fill(d, inactive_fill(kind));
    g.certificate = DecayCertificate{kind, std::abs(g.eval(fill)), std::vector<double>(d, 0.0)};
    g.vertex_regular = true;
    return g;
  }
  if (auto it = f.pieces.find(J); it != f.pieces.end()) {
    g.certificate = it->second.certificate;
    g.vertex_regular = it->second.vertex_regular;
    g.supnorm_hint = it->second.supnorm_hint;
  } else {
    g.certificate = zero_piece(d, kind, J, f.domain_angles).certificate;
    g.vertex_regular = true;
  }
  return g;
}

H01Fn h01_from_function(std::size_t arity, CalculusKind kind, std::vector<double> angles, Evaluator whole,
                        std::map<VarSet, DecayCertificate> certificates, bool vertex_regular,
                        const LimitOptions& limits) {
  check_angles(kind, angles, arity);
  H01Fn base;
  base.arity = arity;
  base.kind = kind;
  base.domain_angles = angles;
  base.whole = whole;
  base.limits = limits;

  H01Fn h = base;
  std::vector<cplx> fill(arity, inactive_fill(kind));
  h.constant_term = frozen_value(whole, fill, VarSet::full(arity), kind, limits);
  for (VarSet J : subsets_of(VarSet::full(arity))) {
    if (J.empty()) continue;
    auto it = certificates.find(J);
    if (it == certificates.end()) {
      // No certificate: the component must vanish.
      HoloFn q = project_QJ(base, J);
      for (std::size_t s = 0; s < 3; ++s) {
        std::vector<cplx> p(arity);
        for (std::size_t i = 0; i < arity; ++i) {
          const auto samples = interior_samples(kind, angles[i]);
          p[i] = samples[(s + i) % samples.size()];
        }
        const cplx v = q(p);
        if (std::abs(v) > 1e-7 * std::max(1.0, std::abs(whole(p))))
          throw CertificateError("component for " + to_string(J) + " is nonzero but has no certificate");
      }
      continue;
    }
    it->second.validate(J);
    if (it->second.kind != kind) throw CertificateError("certificate kind differs from the function kind");
    HoloFn piece = project_QJ(base, J);
    piece.certificate = it->second;
    piece.certificate->exponents.resize(arity, 0.0);
    piece.vertex_regular = vertex_regular;
    h.pieces[J] = std::move(piece);
  }
  return h;
}

H01Fn h01_from_polynomial(const Polynomial& phi, std::vector<double> angles) {
  const auto d = phi.arity();
  check_angles(CalculusKind::ritt, angles, d);
  const Polynomial shifted = phi.shifted(1.0);
  std::map<VarSet, std::vector<std::pair<MultiIndex, cplx>>> groups;
  cplx constant = 0.0;
  for (const auto& [a, c] : shifted.coefficients()) {
    VarSet S;
    for (std::size_t i = 0; i < d; ++i)
      if (a[i] > 0) S = S.with(i);
    if (S.empty())
      constant += c;
    else
      groups[S].emplace_back(a, c);
  }
  H01Fn h;
  h.arity = d;
  h.kind = CalculusKind::ritt;
  h.domain_angles = angles;
  h.constant_term = constant;
  h.whole = [phi](std::span<const cplx> z) { return phi(z); };
  for (auto& [J, terms] : groups) {
    HoloFn g;
    g.arity = d;
    g.active = J;
    g.domain_angles = angles;
    g.vertex_regular = true;
    g.shifted_terms = terms;
    auto shared = std::make_shared<const std::vector<std::pair<MultiIndex, cplx>>>(terms);
    g.eval = [shared, d](std::span<const cplx> z) {
      cplx s = 0.0;
      for (const auto& [a, c] : *shared) {
        cplx t = c;
        for (std::size_t i = 0; i < d; ++i)
          for (int e = 0; e < a[i]; ++e) t *= (z[i] - 1.0);
        s += t;
      }
      return s;
    };
    g.grid = [shared, d](const Axes& axes) {
      int maxe = 0;
      for (const auto& [a, c] : *shared)
        for (int e : a) maxe = std::max(maxe, e);
      // pw[i][q][e] = (z_q − 1)^e
      std::vector<std::vector<std::vector<cplx>>> pw(d);
      for (std::size_t i = 0; i < d; ++i) {
        pw[i].resize(axes[i].size(), std::vector<cplx>(maxe + 1, 1.0));
        for (std::size_t q = 0; q < axes[i].size(); ++q)
          for (int e = 1; e <= maxe; ++e) pw[i][q][e] = pw[i][q][e - 1] * (axes[i][q] - 1.0);
      }
      std::vector<cplx> out;
      out.reserve(grid_size(axes));
      Odometer od(axes);
      do {
        const auto& idx = od.index();
        cplx s = 0.0;
        for (const auto& [a, c] : *shared) {
          cplx t = c;
          for (std::size_t i = 0; i < d; ++i)
            if (a[i] > 0) t *= pw[i][idx[i]][a[i]];
          s += t;
        }
        out.push_back(s);
      } while (od.next() < d);
      return out;
    };
    DecayCertificate cert;
    cert.kind = CalculusKind::ritt;
    cert.exponents.assign(d, 0.0);
    cert.c = 0.0;
    for (auto i : J.indices()) cert.exponents[i] = 1.0;
    for (const auto& [a, c] : terms) {
      double bound = std::abs(c);
      for (auto i : J.indices()) bound *= std::pow(1.0 + std::sin(angles[i]), a[i] - 1);
      cert.c += bound;
    }
    g.certificate = cert;
    h.pieces[J] = std::move(g);
  }
  return h;
}

H01Fn project_qi(const H01Fn& f, std::size_t i) {
  if (i >= f.arity) throw ValidationError("i", "variable index exceeds the arity");
  H01Fn g;
  g.arity = f.arity;
  g.kind = f.kind;
  g.domain_angles = f.domain_angles;
  g.limits = f.limits;
  g.constant_term = f.constant_term;
  for (const auto& [J, piece] : f.pieces)
    if (!J.contains(i)) g.pieces[J] = piece;
  auto shared = std::make_shared<const H01Fn>(f);
  const auto kind = f.kind;
  const auto lim = f.limits;
  g.whole = [shared, i, kind, lim](std::span<const cplx> z) {
    std::vector<cplx> p(z.begin(), z.end());
    return frozen_value([shared](std::span<const cplx> w) { return (*shared)(w); }, p, VarSet().with(i), kind, lim);
  };
  return g;
}

double spectral_stolz_angle(const ComplexMatrix& T) {
  double angle = 0.0;
  for (cplx mu : operators::eigenvalues(T)) {
    if (std::abs(1.0 - mu) <= 1e-10) continue;
    if (std::abs(mu) >= 1.0) throw DomainError("spectrum is not contained in the open unit disc ∪ {1}");
    double lo = 0.0, hi = kPi / 2;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const domains::StolzDomain dom(mid);
      if (dom.contains(mu) || dom.boundary_distance(mu) == 0.0)
        hi = mid;
      else
        lo = mid;
    }
    angle = std::max(angle, hi);
  }
  return angle;
}

double spectral_sector_angle(const ComplexMatrix& A) {
  double angle = 0.0;
  for (cplx mu : operators::eigenvalues(A)) {
    if (std::abs(mu) <= 1e-14) continue;
    angle = std::max(angle, std::abs(std::arg(mu)));
  }
  if (angle >= kPi - 1e-12) throw DomainError("spectrum meets the negative real axis");
  return angle;
}

json to_json(const QuadratureOptions& o) {
  json j;
  j["initial_nodes"] = o.initial_nodes;
  j["max_nodes"] = o.max_nodes;
  j["rel_tol"] = o.rel_tol;
  j["max_product_nodes"] = o.max_product_nodes;
  j["max_active"] = o.max_active;
  j["tail_tol"] = o.tail_tol;
  j["grading_ratio"] = o.grading_ratio;
  if (!o.contour_angles.empty()) j["contour_angles"] = o.contour_angles;
  return j;
}

json EvalReport::to_json() const {
  json j;
  j["converged"] = converged;
  j["last_change"] = last_change;
  j["contour_angles"] = contour_angles;
  j["nodes_per_variable"] = nodes_per_variable;
  j["grading_levels"] = grading_levels;
  if (!truncation_radii.empty()) j["truncation_radii"] = truncation_radii;
  j["refinements"] = refinements;
  return j;
}

void EvalReport::merge(const EvalReport& o) {
  converged = converged && o.converged;
  last_change = std::max(last_change, o.last_change);
  refinements = std::max(refinements, o.refinements);
  if (nodes_per_variable.size() < o.nodes_per_variable.size()) nodes_per_variable.resize(o.nodes_per_variable.size(), 0);
  for (std::size_t i = 0; i < o.nodes_per_variable.size(); ++i)
    nodes_per_variable[i] = std::max(nodes_per_variable[i], o.nodes_per_variable[i]);
  if (contour_angles.empty()) contour_angles = o.contour_angles;
  if (grading_levels.size() < o.grading_levels.size()) grading_levels.resize(o.grading_levels.size(), 0);
  for (std::size_t i = 0; i < o.grading_levels.size(); ++i)
    grading_levels[i] = std::max(grading_levels[i], o.grading_levels[i]);
  if (truncation_radii.empty()) truncation_radii = o.truncation_radii;
}

namespace {

struct VariableSetup {
  std::size_t var = 0;
  double angle = 0.0;
  int levels = 0;
  domains::SectorTruncation trunc;
};

struct VariableQuadrature {
  std::vector<cplx> z;
  std::vector<ComplexMatrix> M;  // w_q R(z_q, T) / (2πi)
};

VariableSetup setup_variable(const CommutingTuple& tuple, const HoloFn& f, std::size_t i, std::size_t active_count,
                             const QuadratureOptions& opts) {
  const auto& cert = *f.certificate;
  const ComplexMatrix& T = tuple[i];
  VariableSetup s;
  s.var = i;
  const double domain = f.domain_angles[i];
  const bool given_type = i < opts.type_angles.size() && opts.type_angles[i] > 0.0;
  const bool given_contour = i < opts.contour_angles.size() && opts.contour_angles[i] > 0.0;
  const double s_i = cert.exponents[i];
  const double n_active = static_cast<double>(active_count);
  const std::string var = "variable " + std::to_string(i + 1);
  if (cert.kind == CalculusKind::ritt) {
    const double spec = spectral_stolz_angle(T);
    const double type = given_type ? std::max(opts.type_angles[i], spec) : spec;
    if (!(type < domain)) throw DomainError(var + ": spectrum is not inside the Stolz domain of the function");
    s.angle = given_contour ? opts.contour_angles[i] : domains::default_contour_angle(type, domain);
    if (!(s.angle > spec)) throw DomainError(var + ": contour angle does not enclose the spectrum");
    if (!(s.angle < domain)) throw DomainError(var + ": contour angle must be below the domain angle");
    const domains::StolzDomain dom(s.angle);
    const double l = dom.segment_length();
    double near = kInf;
    for (cplx mu : operators::eigenvalues(T)) near = std::min(near, std::abs(1.0 - mu));
    if (!f.vertex_regular || near < 0.25 * l) {
      double K = 1.0;
      for (double t : {1e-2, 1e-4, 1e-6, 1e-8}) {
        const cplx lambda = 1.0 + t * l * dom.segment_direction();
        for (cplx lam : {lambda, std::conj(lambda)})
          K = std::max(K, operator_norm((lam - 1.0) * operators::resolvent(T, lam)));
      }
      const double eps = std::pow(opts.tail_tol * kPi * s_i / (K * n_active), 1.0 / s_i);
      const double L = std::ceil(std::log(eps / l) / std::log(opts.grading_ratio));
      s.levels = static_cast<int>(std::clamp(L, 1.0, 150.0));
    }
  } else {
    const double spec = spectral_sector_angle(T);
    const double type = given_type ? std::max(opts.type_angles[i], spec) : spec;
    if (!(type < domain)) throw DomainError(var + ": spectrum is not inside the sector of the function");
    s.angle = given_contour ? opts.contour_angles[i] : domains::default_contour_angle(type, domain);
    if (!(s.angle > spec)) throw DomainError(var + ": contour angle does not enclose the spectrum");
    if (!(s.angle < domain)) throw DomainError(var + ": contour angle must be below the domain angle");
    double C = 1.0;
    for (int k = -8; k <= 8; ++k) {
      const double r = std::pow(10.0, k);
      for (double sg : {1.0, -1.0}) {
        const cplx z = std::polar(r, sg * s.angle);
        C = std::max(C, operator_norm(z * operators::resolvent(T, z)));
      }
    }
    s.trunc = domains::sector_truncation(s_i, C * n_active, opts.tail_tol);
  }
  return s;
}

domains::Contour build_contour(CalculusKind kind, const VariableSetup& s, int n, const QuadratureOptions& opts) {
  if (kind == CalculusKind::ritt) {
    domains::StolzContourOptions co;
    co.nodes_per_piece = n;
    co.grading_levels = s.levels;
    co.grading_ratio = opts.grading_ratio;
    co.graded_nodes = std::max(6, n / 2);
    return domains::stolz_contour(s.angle, co);
  }
  domains::SectorContourOptions so;
  so.nodes_per_panel = std::max(4, n / 3);
  return domains::sector_contour(s.angle, s.trunc, so);
}

VariableQuadrature make_quadrature(const domains::Contour& c, const ComplexMatrix& T) {
  VariableQuadrature q;
  const std::size_t N = c.nodes.size();
  q.z.resize(N);
  for (std::size_t k = 0; k < N; ++k) q.z[k] = c.nodes[k].z;
  const cplx scale = 1.0 / (2.0 * kPi * kI);
  q.M = parallel_map<ComplexMatrix>(N, [&](std::size_t k) -> ComplexMatrix {
    return (c.nodes[k].w * scale) * operators::resolvent(T, c.nodes[k].z);
  });
  return q;
}

// Σ_q F[q] ∏_k M^{(k)}_{q_k} for F row-major over the listed variables.
ComplexMatrix contract(const std::vector<cplx>& values, const std::vector<const VariableQuadrature*>& quads,
                       Eigen::Index n) {
  const std::size_t m = quads.size();
  const std::size_t NL = quads.back()->M.size();
  const std::size_t P = values.size() / NL;
  ComplexMatrix stack(NL, n * n);
  for (std::size_t q = 0; q < NL; ++q)
    stack.row(q) = Eigen::Map<const ComplexVector>(quads.back()->M[q].data(), n * n).transpose();
  Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> V(values.data(), P, NL);
  const ComplexMatrix G = V * stack;
  std::vector<ComplexMatrix> mats(P);
  for (std::size_t p = 0; p < P; ++p) mats[p] = Eigen::Map<const ComplexMatrix>(G.row(p).eval().data(), n, n);
  for (std::size_t k = m - 1; k-- > 0;) {
    const std::size_t Nk = quads[k]->M.size();
    const std::size_t Pn = mats.size() / Nk;
    std::vector<ComplexMatrix> next(Pn, ComplexMatrix::Zero(n, n));
    for (std::size_t p = 0; p < Pn; ++p)
      for (std::size_t j = 0; j < Nk; ++j) next[p].noalias() += quads[k]->M[j] * mats[p * Nk + j];
    mats = std::move(next);
  }
  return mats.front();
}

void audit_certificate(const HoloFn& f, const Axes& axes, const std::vector<cplx>& values) {
  const auto& cert = *f.certificate;
  const std::size_t total = values.size();
  const std::size_t stride = std::max<std::size_t>(1, total / 4000);
  const std::size_t d = axes.size();
  std::vector<cplx> point(d);
  for (std::size_t lin = 0; lin < total; lin += stride) {
    std::size_t r = lin;
    for (std::size_t k = d; k-- > 0;) {
      point[k] = axes[k][r % axes[k].size()];
      r /= axes[k].size();
    }
    const double env = cert.envelope(point);
    if (std::abs(values[lin]) > env * (1.0 + 1e-6) + 1e-12 * std::max(cert.c, 1e-300))
      throw CertificateError("decay certificate violated at a contour node: |f| = " +
                             std::to_string(std::abs(values[lin])) + " > " + std::to_string(env));
  }
}

// Σ_α c_α ∏_k Σ_q w_q (z_q − 1)^{α_k} R(z_q, T_k) / (2πi): the product rule applied to a
// sum of separable monomials, one 1-D moment per variable and exponent.
ComplexMatrix separable_contract(const HoloFn& f, const std::vector<VariableSetup>& setups,
                                 const std::vector<domains::Contour>& contours, const CommutingTuple& tuple,
                                 bool skip_audit) {
  const auto n = tuple.dim();
  int maxe = 0;
  for (const auto& [a, c] : f.shifted_terms)
    for (int e : a) maxe = std::max(maxe, e);
  std::vector<std::vector<ComplexMatrix>> moments(setups.size());
  for (std::size_t k = 0; k < setups.size(); ++k) {
    const auto& nodes = contours[k].nodes;
    const ComplexMatrix& T = tuple[setups[k].var];
    const auto terms = parallel_map<std::vector<ComplexMatrix>>(nodes.size(), [&](std::size_t q) {
      const ComplexMatrix R = (nodes[q].w / (2.0 * kPi * kI)) * operators::resolvent(T, nodes[q].z);
      std::vector<ComplexMatrix> out(maxe + 1);
      cplx p = 1.0;
      for (int e = 0; e <= maxe; ++e, p *= nodes[q].z - 1.0) out[e] = p * R;
      return out;
    });
    moments[k].assign(maxe + 1, ComplexMatrix::Zero(n, n));
    for (const auto& t : terms)
      for (int e = 0; e <= maxe; ++e) moments[k][e] += t[e];
  }
  if (!skip_audit) {
    Axes axes(f.arity, std::vector<cplx>{inactive_fill(CalculusKind::ritt)});
    for (std::size_t k = 0; k < setups.size(); ++k) {
      const auto& nodes = contours[k].nodes;
      const std::size_t stride = std::max<std::size_t>(1, nodes.size() / 16);
      axes[setups[k].var].clear();
      for (std::size_t q = 0; q < nodes.size(); q += stride) axes[setups[k].var].push_back(nodes[q].z);
    }
    audit_certificate(f, axes, f.on_grid(axes));
  }
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (const auto& [a, c] : f.shifted_terms) {
    ComplexMatrix t = c * identity(n);
    for (std::size_t k = 0; k < setups.size(); ++k) t = t * moments[k][a[setups[k].var]];
    out += t;
  }
  return out;
}

}  // namespace

ComplexMatrix eval_h0(const CommutingTuple& tuple, const HoloFn& f, const QuadratureOptions& opts,
                      EvalReport* report) {
  audit(f);
  const auto kind = f.kind();
  if (tuple.arity() != f.arity)
    throw ValidationError("tuple", "tuple has " + std::to_string(tuple.arity()) + " operators, function has arity " +
                                       std::to_string(f.arity));
  if (f.active.empty()) throw ValidationError("function.active", "H∞₀ evaluation needs a nonempty active set");
  if (f.active.size() > opts.max_active)
    throw GuardError("active set of size " + std::to_string(f.active.size()) + " exceeds the nested-quadrature guard");
  const auto n = tuple.dim();
  const auto vars = f.active.indices();
  const std::size_t d = f.arity;

  EvalReport rep;
  rep.nodes_per_variable.assign(d, 0);
  rep.grading_levels.assign(d, 0);
  rep.contour_angles.assign(d, 0.0);
  if (f.certificate->c == 0.0) {
    if (report) *report = rep;
    return ComplexMatrix::Zero(n, n);
  }

  std::vector<VariableSetup> setups;
  for (auto i : vars) {
    setups.push_back(setup_variable(tuple, f, i, vars.size(), opts));
    rep.contour_angles[i] = setups.back().angle;
    rep.grading_levels[i] = setups.back().levels;
    if (kind == CalculusKind::sectorial) rep.truncation_radii.push_back(setups.back().trunc.R);
  }

  const cplx fill = inactive_fill(kind);
  const std::size_t slab_limit = 2'000'000;
  ComplexMatrix prev, result;
  bool have_prev = false;
  double fscale = 0.0;
  rep.converged = false;
  const bool separable = !f.shifted_terms.empty() && kind == CalculusKind::ritt;
  for (int nodes = opts.initial_nodes;; nodes *= 2) {
    std::vector<domains::Contour> contours;
    std::size_t product = 1;
    for (const auto& s : setups) {
      contours.push_back(build_contour(kind, s, nodes, opts));
      product *= contours.back().nodes.size();
    }
    if (separable) {
      for (std::size_t k = 0; k < setups.size(); ++k)
        rep.nodes_per_variable[setups[k].var] = static_cast<int>(contours[k].nodes.size());
      ++rep.refinements;
      result = separable_contract(f, setups, contours, tuple, have_prev || !opts.audit_certificate);
      fscale = std::max(fscale, operator_norm(result));
      if (have_prev) {
        const double change = operator_norm(result - prev);
        const double ref = std::max(operator_norm(result), 1e-300);
        rep.last_change = change / ref;
        if (change <= opts.rel_tol * ref) {
          rep.converged = true;
          break;
        }
      }
      prev = result;
      have_prev = true;
      if (nodes * 2 > opts.max_nodes) break;
      continue;
    }
    if (product > opts.max_product_nodes) {
      if (!have_prev) throw GuardError("product quadrature grid exceeds the node cap");
      break;
    }
    std::vector<VariableQuadrature> quads;
    for (std::size_t k = 0; k < setups.size(); ++k) quads.push_back(make_quadrature(contours[k], tuple[setups[k].var]));
    std::vector<const VariableQuadrature*> qptr;
    for (const auto& q : quads) qptr.push_back(&q);

    Axes axes(d, std::vector<cplx>{fill});
    for (std::size_t k = 0; k < setups.size(); ++k) axes[setups[k].var] = quads[k].z;

    ComplexMatrix cur = ComplexMatrix::Zero(n, n);
    const std::size_t first = setups.front().var;
    const std::size_t N1 = quads.front().z.size();
    const std::size_t inner = product / N1;
    if (product <= slab_limit || vars.size() == 1) {
      const auto values = f.on_grid(axes);
      if (!have_prev && opts.audit_certificate) audit_certificate(f, axes, values);
      for (auto v : values) fscale = std::max(fscale, std::abs(v));
      cur = contract(values, qptr, n);
    } else {
      const std::size_t chunk = std::max<std::size_t>(1, slab_limit / inner);
      const std::vector<const VariableQuadrature*> rest(qptr.begin() + 1, qptr.end());
      const std::size_t slabs = (N1 + chunk - 1) / chunk;
      auto parts = parallel_map<std::pair<ComplexMatrix, double>>(slabs, [&](std::size_t sl) {
        const std::size_t b = sl * chunk, e = std::min(N1, b + chunk);
        Axes sub = axes;
        sub[first] = std::vector<cplx>(quads.front().z.begin() + b, quads.front().z.begin() + e);
        const auto values = f.on_grid(sub);
        if (!have_prev && opts.audit_certificate && sl == 0) audit_certificate(f, sub, values);
        double mx = 0.0;
        for (auto v : values) mx = std::max(mx, std::abs(v));
        ComplexMatrix acc = ComplexMatrix::Zero(n, n);
        for (std::size_t q = b; q < e; ++q) {
          const std::vector<cplx> slice(values.begin() + (q - b) * inner, values.begin() + (q - b + 1) * inner);
          acc.noalias() += quads.front().M[q] * contract(slice, rest, n);
        }
        return std::make_pair(acc, mx);
      });
      for (const auto& [m, mx] : parts) {
        cur += m;
        fscale = std::max(fscale, mx);
      }
    }
    for (std::size_t k = 0; k < setups.size(); ++k)
      rep.nodes_per_variable[setups[k].var] = static_cast<int>(quads[k].z.size());
    ++rep.refinements;
    result = cur;
    if (have_prev) {
      const double change = operator_norm(cur - prev);
      const double ref = std::max(operator_norm(cur), 1e-3 * fscale);
      rep.last_change = ref > 0.0 ? change / ref : change;
      if (change <= opts.rel_tol * ref) {
        rep.converged = true;
        break;
      }
    }
    prev = cur;
    have_prev = true;
    if (nodes * 2 > opts.max_nodes) break;
  }
  if (report) *report = rep;
  return result;
}

ComplexMatrix eval_h0_ritt(const CommutingTuple& tuple, const HoloFn& f, const std::vector<double>& betas,
                           QuadratureOptions opts, EvalReport* report) {
  if (f.kind() != CalculusKind::ritt) throw CertificateError("eval_h0_ritt needs a Ritt certificate");
  if (!betas.empty()) opts.contour_angles = betas;
  return eval_h0(tuple, f, opts, report);
}

ComplexMatrix eval_h0_sectorial(const CommutingTuple& tuple, const HoloFn& f, const std::vector<double>& nus,
                                QuadratureOptions opts, EvalReport* report) {
  if (f.kind() != CalculusKind::sectorial) throw CertificateError("eval_h0_sectorial needs a sectorial certificate");
  if (!nus.empty()) opts.contour_angles = nus;
  return eval_h0(tuple, f, opts, report);
}

ComplexMatrix eval_h01(const CommutingTuple& tuple, const H01Fn& f, CalculusKind kind, const QuadratureOptions& opts,
                       EvalReport* report) {
  if (f.kind != kind) throw CertificateError("function kind does not match the requested calculus");
  if (tuple.arity() != f.arity) throw ValidationError("tuple", "arity does not match the function");
  const auto n = tuple.dim();
  ComplexMatrix out = f.constant_term * identity(n);
  EvalReport total;
  for (const auto& [J, piece] : f.pieces) {
    EvalReport r;
    out += eval_h0(tuple, piece, opts, &r);
    total.merge(r);
  }
  if (report) *report = total;
  return out;
}

namespace {

ComplexMatrix horner(const std::vector<std::pair<MultiIndex, cplx>>& terms, std::size_t var,
                     const CommutingTuple& tuple) {
  const auto n = tuple.dim();
  if (var == tuple.arity()) {
    cplx s = 0.0;
    for (const auto& t : terms) s += t.second;
    return s * identity(n);
  }
  std::map<int, std::vector<std::pair<MultiIndex, cplx>>> groups;
  for (const auto& t : terms) groups[t.first[var]].push_back(t);
  const int top = groups.rbegin()->first;
  ComplexMatrix r = horner(groups[top], var + 1, tuple);
  for (int e = top - 1; e >= 0; --e) {
    r = tuple[var] * r;
    if (auto it = groups.find(e); it != groups.end()) r += horner(it->second, var + 1, tuple);
  }
  return r;
}

}  // namespace

ComplexMatrix eval_poly(const CommutingTuple& tuple, const Polynomial& phi) {
  if (phi.arity() != tuple.arity()) throw ValidationError("polynomial", "arity does not match the tuple");
  if (phi.is_zero()) return ComplexMatrix::Zero(tuple.dim(), tuple.dim());
  std::vector<std::pair<MultiIndex, cplx>> terms(phi.coefficients().begin(), phi.coefficients().end());
  return horner(terms, 0, tuple);
}

ComplexMatrix eval_regularized(const CommutingTuple& tuple, const H01Fn& f, double r, CalculusKind kind,
                               const QuadratureOptions& opts) {
  if (!(r > 0.0 && r < 1.0)) throw DomainError("regularization parameter must lie in (0, 1)");
  std::vector<ComplexMatrix> scaled;
  for (const auto& T : tuple.matrices()) scaled.push_back(r * T);
  return eval_h01(CommutingTuple(std::move(scaled), tuple.commutation_tol()), f, kind, opts);
}

namespace {

// Boundary parametrization: arclength for ∂B_γ, and for ∂Σ_θ the rays with
// log r = t − R (t ≥ 0, upper) and log r = −t − R (t < 0, lower).
constexpr double kRayHalf = 14.0;

cplx boundary_at(CalculusKind kind, double angle, double t) {
  if (kind == CalculusKind::ritt) return domains::StolzDomain(angle).boundary_point(t);
  if (t >= 0.0) return std::polar(std::exp(t - kRayHalf), angle);
  return std::polar(std::exp(-t - kRayHalf), -angle);
}

std::vector<double> boundary_params(CalculusKind kind, double angle, int density) {
  std::vector<double> t;
  if (kind == CalculusKind::ritt) {
    const domains::StolzDomain dom(angle);
    const double per = dom.perimeter(), l = dom.segment_length();
    for (int k = 0; k < density; ++k) t.push_back(per * k / density);
    for (int k = 1; k <= 10; ++k) {
      t.push_back(l * std::pow(0.5, k + 2));
      t.push_back(per - l * std::pow(0.5, k + 2));
    }
  } else {
    for (int k = 0; k <= density; ++k) {
      const double u = 2.0 * kRayHalf * k / density;
      t.push_back(u);
      t.push_back(-u - 1e-300);
    }
  }
  std::sort(t.begin(), t.end());
  return t;
}

}  // namespace

std::vector<cplx> boundary_samples(CalculusKind kind, double angle, int density) {
  std::vector<cplx> out;
  for (double t : boundary_params(kind, angle, density)) out.push_back(boundary_at(kind, angle, t));
  return out;
}

double boundary_supnorm(const Evaluator& f, std::size_t arity, CalculusKind kind, const std::vector<double>& angles,
                        const SupnormOptions& opts) {
  check_angles(kind, angles, arity);
  double prev = -1.0, best = 0.0;
  std::vector<double> best_t(arity, 0.0);
  std::vector<std::vector<double>> params;
  for (int density = std::max(4, opts.initial_density);; density *= 2) {
    params.assign(arity, {});
    Axes axes(arity);
    std::size_t total = 1;
    for (std::size_t i = 0; i < arity; ++i) {
      params[i] = boundary_params(kind, angles[i], density);
      for (double t : params[i]) axes[i].push_back(boundary_at(kind, angles[i], t));
      total *= axes[i].size();
    }
    if (total > opts.max_points && prev >= 0.0) break;
    const auto values = evaluate_on_grid(f, axes);
    std::size_t arg = 0;
    double mx = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k)
      if (std::abs(values[k]) > mx) {
        mx = std::abs(values[k]);
        arg = k;
      }
    std::size_t r = arg;
    for (std::size_t i = arity; i-- > 0;) {
      best_t[i] = params[i][r % params[i].size()];
      r /= params[i].size();
    }
    best = mx;
    if (prev >= 0.0 && std::abs(mx - prev) <= opts.rel_tol * std::max(mx, 1e-300)) break;
    prev = mx;
    if (total * (1u << arity) > opts.max_points) break;
  }
  // Coordinate ascent from the best grid point.
  std::vector<double> step(arity);
  for (std::size_t i = 0; i < arity; ++i) {
    const double span = params[i].back() - params[i].front();
    step[i] = span / params[i].size();
  }
  std::vector<cplx> z(arity);
  auto value_at = [&](const std::vector<double>& t) {
    for (std::size_t i = 0; i < arity; ++i) z[i] = boundary_at(kind, angles[i], t[i]);
    return std::abs(f(z));
  };
  auto t = best_t;
  best = std::max(best, value_at(t));
  for (int sweep = 0; sweep < 200; ++sweep) {
    bool any = false;
    for (std::size_t i = 0; i < arity; ++i) {
      if (step[i] < 1e-13) continue;
      any = true;
      bool moved = false;
      for (double dir : {1.0, -1.0}) {
        auto trial = t;
        trial[i] += dir * step[i];
        const double v = value_at(trial);
        if (v > best) {
          best = v;
          t = trial;
          moved = true;
          break;
        }
      }
      if (!moved) step[i] *= 0.5;
    }
    if (!any) break;
  }
  return best;
}

double poly_supnorm(const Polynomial& phi, const std::vector<double>& angles, int grid_density) {
  SupnormOptions o;
  o.initial_density = grid_density;
  return boundary_supnorm([&phi](std::span<const cplx> z) { return phi(z); }, phi.arity(), CalculusKind::ritt, angles,
                          o);
}

json FcBoundResult::to_json() const {
  json j;
  j["K_hat"] = K_hat;
  j["lower_estimate"] = true;
  j["running_max"] = running_max;
  j["witness"] = witness;
  return j;
}

FcBoundResult fc_bound_estimate(const CommutingTuple& tuple, const FcBoundOptions& opts) {
  const auto d = tuple.arity();
  const auto n = tuple.dim();
  std::vector<double> angles = opts.domain_angles;
  if (angles.empty())
    for (std::size_t i = 0; i < d; ++i)
      angles.push_back(opts.kind == CalculusKind::ritt ? 0.5 * (spectral_stolz_angle(tuple[i]) + kPi / 2)
                                                      : 0.5 * (spectral_sector_angle(tuple[i]) + kPi));
  check_angles(opts.kind, angles, d);
  std::mt19937_64 rng(opts.seed);
  FcBoundResult res;
  for (int trial = 0; trial < opts.trials; ++trial) {
    double ratio = 0.0;
    json witness;
    if (opts.kind == CalculusKind::ritt) {
      Polynomial phi = static_cast<std::size_t>(trial) < d
                           ? Polynomial::coordinate(d, trial)
                           : Polynomial::random(d, 1 + static_cast<int>(rng() % std::max(1, opts.degree_cap)), rng);
      const double sup = poly_supnorm(phi, angles);
      ratio = sup > 0.0 ? operator_norm(eval_poly(tuple, phi)) / sup : 0.0;
      witness = phi.to_json();
    } else {
      // Σ_j a_j ∏_i (1 + t_ij z_i)^{-1}
      std::normal_distribution<double> g;
      std::uniform_real_distribution<double> u(-2.0, 2.0);
      const int terms = 1 + static_cast<int>(rng() % 3);
      std::vector<cplx> a(terms);
      std::vector<std::vector<double>> tv(terms, std::vector<double>(d));
      for (int j = 0; j < terms; ++j) {
        a[j] = cplx(g(rng), g(rng));
        for (std::size_t i = 0; i < d; ++i) tv[j][i] = std::exp(u(rng));
      }
      ComplexMatrix value = ComplexMatrix::Zero(n, n);
      for (int j = 0; j < terms; ++j) {
        ComplexMatrix prod = a[j] * identity(n);
        for (std::size_t i = 0; i < d; ++i)
          prod = prod * (identity(n) + tv[j][i] * tuple[i]).partialPivLu().solve(identity(n));
        value += prod;
      }
      auto fn = [&](std::span<const cplx> z) {
        cplx s = 0.0;
        for (int j = 0; j < terms; ++j) {
          cplx p = a[j];
          for (std::size_t i = 0; i < d; ++i) p /= (1.0 + tv[j][i] * z[i]);
          s += p;
        }
        return s;
      };
      const double sup = boundary_supnorm(fn, d, CalculusKind::sectorial, angles);
      ratio = sup > 0.0 ? operator_norm(value) / sup : 0.0;
      json coeffs = json::array();
      for (int j = 0; j < terms; ++j) coeffs.push_back({{"a", complex_to_json(a[j])}, {"t", tv[j]}});
      witness = {{"rational", coeffs}};
    }
    if (ratio > res.K_hat) {
      res.K_hat = ratio;
      res.witness = witness;
    }
    res.running_max.push_back(res.K_hat);
  }
  return res;
}

HoloFn product(const HoloFn& f, const HoloFn& g) {
  audit(f);
  audit(g);
  if (f.arity != g.arity) throw ValidationError("product", "arity mismatch");
  HoloFn h;
  h.arity = f.arity;
  h.active = f.active | g.active;
  h.certificate = product_certificate(*f.certificate, *g.certificate);
  h.domain_angles.resize(f.arity);
  for (std::size_t i = 0; i < f.arity; ++i) h.domain_angles[i] = std::min(f.domain_angles[i], g.domain_angles[i]);
  h.vertex_regular = f.vertex_regular && g.vertex_regular;
  h.eval = [fe = f.eval, ge = g.eval](std::span<const cplx> z) { return fe(z) * ge(z); };
  h.grid = [f, g](const Axes& axes) {
    auto a = f.on_grid(axes);
    const auto b = g.on_grid(axes);
    for (std::size_t k = 0; k < a.size(); ++k) a[k] *= b[k];
    return a;
  };
  if (f.supnorm_hint && g.supnorm_hint) h.supnorm_hint = *f.supnorm_hint * *g.supnorm_hint;
  return h;
}

HomomorphismResult homomorphism_check(const CommutingTuple& tuple, const HoloFn& f, const HoloFn& g,
                                      CalculusKind kind, const QuadratureOptions& opts) {
  if (f.kind() != kind || g.kind() != kind) throw CertificateError("certificate kinds do not match the calculus");
  const HoloFn fg = product(f, g);
  const ComplexMatrix F = eval_h0(tuple, f, opts);
  const ComplexMatrix G = eval_h0(tuple, g, opts);
  const ComplexMatrix FG = eval_h0(tuple, fg, opts);
  HomomorphismResult r;
  r.absolute = operator_norm(F * G - FG);
  const double scale = std::max({operator_norm(F * G), operator_norm(F) * operator_norm(G), 1e-300});
  r.residual = r.absolute / scale;
  return r;
}

}  // namespace hinf::funcalc
