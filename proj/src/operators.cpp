#include "hinf/operators.hpp"

#include "hinf/domains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace hinf::operators {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> default_grid(int count) {
  std::vector<double> g;
  for (int k = 1; k <= count; ++k) g.push_back(k * kPi / 48.0);
  return g;
}

// Running sup must stay below the cap on a contiguous top segment of the grid.
template <class Map, class Ok>
std::pair<bool, double> smallest_admissible(const Map& values, Ok ok) {
  bool found = false;
  double best = 0.0;
  for (auto it = values.rbegin(); it != values.rend(); ++it) {
    if (!ok(it->second)) break;
    found = true;
    best = it->first;
  }
  return {found, best};
}

json spectrum_json(const std::vector<cplx>& s) {
  json a = json::array();
  for (auto z : s) a.push_back(complex_to_json(z));
  return a;
}

json angle_map_json(const std::map<double, double>& m) {
  json a = json::array();
  for (auto [angle, v] : m) {
    json e;
    e["angle"] = angle;
    if (std::isfinite(v))
      e["value"] = v;
    else
      e["value"] = nullptr;
    a.push_back(std::move(e));
  }
  return a;
}

}  // namespace

CommutingTuple::CommutingTuple(std::vector<ComplexMatrix> matrices, double commutation_tol)
    : matrices_(std::move(matrices)), tol_(commutation_tol) {
  if (matrices_.empty()) throw ValidationError("tuple", "a commuting tuple needs at least one matrix");
  const auto n = matrices_.front().rows();
  for (std::size_t k = 0; k < matrices_.size(); ++k) {
    const auto& m = matrices_[k];
    const std::string path = "tuple[" + std::to_string(k) + "]";
    if (m.rows() != m.cols()) throw ValidationError(path, "matrix is not square");
    if (m.rows() != n || n < 1) throw ValidationError(path, "dimension mismatch");
    if (!m.allFinite()) throw ValidationError(path, "matrix has non-finite entries");
  }
}

CommutingTuple CommutingTuple::subfamily(const std::vector<std::size_t>& idx) const {
  std::vector<ComplexMatrix> sub;
  for (auto i : idx) sub.push_back(matrices_.at(i));
  return CommutingTuple(std::move(sub), tol_);
}

json CommutatorReport::to_json() const {
  json j;
  j["relative"] = relative;
  j["max_relative"] = max_relative;
  j["tol"] = tol;
  j["pass"] = pass;
  return j;
}

CommutatorReport commutator_check(const CommutingTuple& tuple) {
  CommutatorReport r;
  const auto d = tuple.arity();
  r.tol = tuple.commutation_tol();
  r.relative.assign(d, std::vector<double>(d, 0.0));
  std::vector<double> norms(d);
  for (std::size_t k = 0; k < d; ++k) norms[k] = operator_norm(tuple[k]);
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t l = k + 1; l < d; ++l) {
      const double c = operator_norm(tuple[k] * tuple[l] - tuple[l] * tuple[k]);
      const double scale = norms[k] * norms[l];
      const double rel = scale > 0.0 ? c / scale : c;
      r.relative[k][l] = r.relative[l][k] = rel;
      r.max_relative = std::max(r.max_relative, rel);
    }
  r.pass = r.max_relative <= r.tol;
  return r;
}

void require_commuting(const CommutingTuple& tuple) {
  const auto rep = commutator_check(tuple);
  if (!rep.pass)
    throw ValidationError("tuple", "matrices do not commute (relative commutator " +
                                       std::to_string(rep.max_relative) + ")");
}

ComplexMatrix resolvent(const ComplexMatrix& T, cplx lambda) {
  const auto n = T.rows();
  ComplexMatrix A = lambda * ComplexMatrix::Identity(n, n) - T;
  Eigen::PartialPivLU<ComplexMatrix> lu(A);
  ComplexMatrix X = lu.solve(ComplexMatrix::Identity(n, n));
  if (!X.allFinite()) throw SpectralPointError("resolvent: λ is a spectral point", kInf);
  const double residual = (A * X - ComplexMatrix::Identity(n, n)).norm();
  if (residual > 1e-6)
    throw SpectralPointError("resolvent: near-singular system, residual " + std::to_string(residual),
                             residual);
  return X;
}

std::vector<ComplexMatrix> matrix_power_family(const ComplexMatrix& T, int N) {
  if (N < 0) throw DomainError("power horizon must be non-negative");
  std::vector<ComplexMatrix> out;
  out.reserve(N + 1);
  out.push_back(identity(T.rows()));
  for (int n = 1; n <= N; ++n) out.push_back(out.back() * T);
  return out;
}

std::vector<cplx> eigenvalues(const ComplexMatrix& T) {
  Eigen::ComplexEigenSolver<ComplexMatrix> es(T, false);
  std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return ev;
}

double spectral_radius(const ComplexMatrix& T) {
  double r = 0.0;
  for (auto z : eigenvalues(T)) r = std::max(r, std::abs(z));
  return r;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::ritt: return "ritt";
    case Verdict::not_ritt: return "not_ritt";
    case Verdict::sectorial: return "sectorial";
    case Verdict::not_sectorial: return "not_sectorial";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

json RittTypeReport::to_json() const {
  json j;
  j["verdict"] = to_string(verdict);
  j["alpha_hat"] = alpha_found ? json(alpha_hat) : json(nullptr);
  j["alpha_hat_is_estimate"] = true;
  j["spectrum"] = spectrum_json(spectrum);
  j["spectrum_in_disc_or_one"] = spectrum_in_disc;
  j["K_beta"] = angle_map_json(K_beta);
  j["power_bound"] = power_bound;
  j["difference_bound"] = difference_bound;
  j["power_C"] = power_C;
  j["growth_exponent"] = growth_exponent;
  return j;
}

RittTypeReport classify_ritt(const ComplexMatrix& T, const RittOptions& opts) {
  RittTypeReport rep;
  rep.spectrum = eigenvalues(T);
  const double vtol = 1e-8;
  rep.spectrum_in_disc = std::all_of(rep.spectrum.begin(), rep.spectrum.end(), [&](cplx z) {
    return std::abs(z) < 1.0 - 1e-12 || std::abs(1.0 - z) <= vtol;
  });

  const auto grid = opts.angle_grid.empty() ? default_grid(23) : opts.angle_grid;
  const int m = std::max(4, opts.sample_count);
  const auto n = T.rows();
  const ComplexMatrix I = identity(n);

  for (double beta : grid) {
    const domains::StolzDomain dom(beta);
    const bool enclosed = std::all_of(rep.spectrum.begin(), rep.spectrum.end(), [&](cplx z) {
      return std::abs(1.0 - z) <= vtol || dom.contains(z) || dom.boundary_distance(z) <= 1e-10;
    });
    if (!enclosed) {
      rep.K_beta[beta] = kInf;
      continue;
    }
    std::vector<cplx> samples;
    const double l = dom.segment_length();
    const double tmin = std::min(opts.min_vertex_distance, l);
    for (int i = 0; i < m; ++i) {
      const double t = l * std::pow(tmin / l, static_cast<double>(i) / (m - 1));
      const cplx b = 1.0 + t * dom.segment_direction();
      samples.push_back(b);
      samples.push_back(std::conj(b));
    }
    const double phi0 = kPi / 2 - beta, phi1 = 3 * kPi / 2 + beta;
    for (int i = 0; i < m; ++i) samples.push_back(std::polar(dom.radius(), phi0 + (phi1 - phi0) * (i + 0.5) / m));
    double K = 0.0;
    for (cplx b : samples) {
      const cplx lambda = b * (1.0 + opts.offset * std::abs(1.0 - b));
      try {
        K = std::max(K, operator_norm((lambda - 1.0) * resolvent(T, lambda)));
      } catch (const SpectralPointError&) {
        K = kInf;
        break;
      }
      if (!(K < opts.K_cap)) break;
    }
    for (int i = 0; i < m && K < opts.K_cap; ++i) {
      const cplx lambda = std::polar(2.0, 2 * kPi * i / m);
      K = std::max(K, operator_norm((lambda - 1.0) * resolvent(T, lambda)));
    }
    rep.K_beta[beta] = K;
  }
  auto [found, a] = smallest_admissible(rep.K_beta, [&](double K) { return K < opts.K_cap; });
  rep.alpha_found = found;
  rep.alpha_hat = a;

  const int N = std::max(4, opts.horizon);
  std::vector<double> running(N + 1, 0.0);
  ComplexMatrix prev = I, cur = I;
  for (int k = 1; k <= N; ++k) {
    cur = prev * T;
    const double pn = operator_norm(cur);
    const double dn = k * operator_norm(cur - prev);
    rep.power_bound = std::max(rep.power_bound, pn);
    rep.difference_bound = std::max(rep.difference_bound, dn);
    running[k] = std::max(running[k - 1], std::max(pn, dn));
    prev = cur;
  }
  rep.power_C = running[N];
  const double lo = running[N / 4];
  rep.growth_exponent =
      (lo > 0.0 && std::isfinite(rep.power_C)) ? std::log(rep.power_C / lo) / std::log(4.0) : (lo > 0.0 ? kInf : 0.0);

  if (!rep.spectrum_in_disc)
    rep.verdict = Verdict::not_ritt;
  else if (rep.alpha_found)
    rep.verdict = Verdict::ritt;
  else if (rep.growth_exponent >= 0.5)
    rep.verdict = Verdict::not_ritt;
  else
    rep.verdict = Verdict::inconclusive;
  return rep;
}

json SectorialTypeReport::to_json() const {
  json j;
  j["verdict"] = to_string(verdict);
  j["omega_hat"] = omega_found ? json(omega_hat) : json(nullptr);
  j["omega_hat_is_estimate"] = true;
  j["spectrum"] = spectrum_json(spectrum);
  j["C_theta"] = angle_map_json(C_theta);
  return j;
}

SectorialTypeReport classify_sectorial(const ComplexMatrix& A, const SectorialOptions& opts) {
  SectorialTypeReport rep;
  rep.spectrum = eigenvalues(A);
  const auto grid = opts.angle_grid.empty() ? default_grid(47) : opts.angle_grid;
  const int m = std::max(4, opts.sample_count);
  auto in_closure = [](cplx z, double theta) {
    return std::abs(z) <= 1e-12 || std::abs(std::arg(z)) <= theta + 1e-10;
  };
  for (double theta : grid) {
    const bool enclosed =
        std::all_of(rep.spectrum.begin(), rep.spectrum.end(), [&](cplx z) { return in_closure(z, theta); });
    if (!enclosed) {
      rep.C_theta[theta] = kInf;
      continue;
    }
    double C = 0.0;
    const double angle = std::min(theta + opts.offset, kPi);
    for (int i = 0; i < m && C < opts.C_cap; ++i) {
      const double r = std::pow(10.0, -opts.radial_decades + 2.0 * opts.radial_decades * i / (m - 1));
      for (double sgn : {1.0, -1.0}) {
        const cplx z = std::polar(r, sgn * angle);
        try {
          C = std::max(C, operator_norm(z * resolvent(A, z)));
        } catch (const SpectralPointError&) {
          C = kInf;
        }
      }
    }
    rep.C_theta[theta] = C;
  }
  auto [found, w] = smallest_admissible(rep.C_theta, [&](double C) { return C < opts.C_cap; });
  rep.omega_found = found;
  rep.omega_hat = w;
  const double widest = grid.empty() ? 0.0 : *std::max_element(grid.begin(), grid.end());
  const bool enclosed_widest =
      std::all_of(rep.spectrum.begin(), rep.spectrum.end(), [&](cplx z) { return in_closure(z, widest); });
  if (found)
    rep.verdict = Verdict::sectorial;
  else if (!enclosed_widest)
    rep.verdict = Verdict::not_sectorial;
  else
    rep.verdict = Verdict::inconclusive;
  return rep;
}

double lp_operator_norm(const ComplexMatrix& M, double p, int iterations, std::uint64_t seed) {
  if (!(p >= 1.0)) throw DomainError("ℓp norm needs p ≥ 1");
  if (p == 1.0) return M.cwiseAbs().colwise().sum().maxCoeff();
  if (p == 2.0) return operator_norm(M);
  const double q = p / (p - 1.0);
  auto lp = [](const ComplexVector& v, double r) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += std::pow(std::abs(v(i)), r);
    return std::pow(s, 1.0 / r);
  };
  // Duality map: the unit vector of ℓ_{r'} norming v.
  auto dual = [&](const ComplexVector& v, double r) {
    ComplexVector out(v.size());
    const double nv = lp(v, r);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double a = std::abs(v(i));
      out(i) = a > 0.0 ? std::pow(a / nv, r - 1.0) * std::conj(v(i)) / a : 0.0;
    }
    return out;
  };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  double best = 0.0;
  const int starts = 6;
  for (int s = 0; s < starts; ++s) {
    ComplexVector x(M.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = cplx(g(rng), g(rng));
    if (s < M.cols() && s < 3) x = ComplexVector::Unit(M.cols(), s);
    x /= lp(x, p);
    double est = 0.0;
    for (int it = 0; it < iterations; ++it) {
      const ComplexVector y = M * x;
      const double ny = lp(y, p);
      if (ny == 0.0) break;
      est = std::max(est, ny);
      const ComplexVector ystar = dual(y, p);                  // in ℓ_q, unit norm, conj-linear pairing
      const ComplexVector z = M.transpose() * ystar;           // functional x ↦ Σ ystar_i (Mx)_i
      const double nz = lp(z, q);
      if (nz == 0.0) break;
      ComplexVector xn = dual(z, q);                           // unit vector of ℓ_p norming z
      x = xn;
    }
    best = std::max(best, est);
  }
  return best;
}

}  // namespace hinf::operators
