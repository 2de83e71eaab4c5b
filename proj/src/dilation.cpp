#include "hinf/dilation.hpp"

#include "hinf/funcalc.hpp"
#include "hinf/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace hinf::dilation {

namespace {

using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double rel(const ComplexMatrix& lhs, const ComplexMatrix& rhs) {
  return operator_norm(lhs - rhs) / std::max(1.0, operator_norm(lhs));
}

Eigen::Index prod(const std::vector<Eigen::Index>& v, std::size_t from, std::size_t to) {
  Eigen::Index p = 1;
  for (std::size_t i = from; i < to; ++i) p *= v[i];
  return p;
}

ComplexMatrix unit(Eigen::Index n, Eigen::Index i) {
  ComplexMatrix e = ComplexMatrix::Zero(n, 1);
  e(i, 0) = 1.0;
  return e;
}

double unitarity(const ComplexMatrix& U) {
  const ComplexMatrix I = identity(U.rows());
  return std::max((U.adjoint() * U - I).norm(), (U * U.adjoint() - I).norm());
}

// 2-norm of a thin or wide matrix through its n × n Gram matrix.
double thin_norm(const ComplexMatrix& M) {
  const ComplexMatrix G = M.rows() <= M.cols() ? ComplexMatrix(M * M.adjoint()) : ComplexMatrix(M.adjoint() * M);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(G, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

json horizon_json(int h) { return h == kUnbounded ? json(nullptr) : json(h); }
int horizon_from_json(const json& j) { return j.is_null() ? kUnbounded : j.get<int>(); }

void check_triple_shape(const DilationTriple& t, Eigen::Index n, const std::string& path) {
  const auto q = t.V.rows();
  if (q < 1 || t.V.cols() != q) throw ValidationError(path + ".V", "must be square");
  if (t.J.rows() != q * n || t.J.cols() != n)
    throw ValidationError(path + ".J", "expected " + std::to_string(q * n) + " × " + std::to_string(n));
  if (t.Q.rows() != n || t.Q.cols() != q * n)
    throw ValidationError(path + ".Q", "expected " + std::to_string(n) + " × " + std::to_string(q * n));
  if (t.positive) {
    for (Eigen::Index i = 0; i < q; ++i)
      for (Eigen::Index j = 0; j < q; ++j) {
        const cplx v = t.V(i, j);
        if (v.real() < -1e-14 || std::abs(v.imag()) > 1e-14)
          throw ValidationError(path + ".V", "claimed positive but has a non-positive entry");
      }
  }
}

void check_tail_shape(const TailSystem& t, Eigen::Index n, std::size_t count, const std::string& path) {
  const auto y = t.J.rows();
  if (y < 1 || t.J.cols() != n) throw ValidationError(path + ".J", "expected Y × " + std::to_string(n));
  if (t.Q.rows() != n || t.Q.cols() != y) throw ValidationError(path + ".Q", "expected n × Y");
  if (t.V.size() != count)
    throw ValidationError(path + ".V", "expected " + std::to_string(count) + " operators on Y");
  for (std::size_t k = 0; k < t.V.size(); ++k)
    if (t.V[k].rows() != y || t.V[k].cols() != y)
      throw ValidationError(path + ".V[" + std::to_string(k) + "]", "must be Y × Y");
}

// Characteristic polynomial z^n + Σ c_j z^j from the eigenvalues.
std::vector<cplx> charpoly(const ComplexMatrix& T) {
  const auto ev = operators::eigenvalues(T);
  std::vector<cplx> p{1.0};  // increasing powers
  for (auto lambda : ev) {
    std::vector<cplx> next(p.size() + 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      next[i + 1] += p[i];
      next[i] -= lambda * p[i];
    }
    p = std::move(next);
  }
  return p;
}

ComplexMatrix diagonal_in(const ComplexMatrix& T, const ComplexMatrix& W, const ComplexMatrix& Winv,
                          const std::string& what) {
  ComplexMatrix D = Winv * T * W;
  ComplexMatrix off = D;
  off.diagonal().setZero();
  if (off.norm() > 1e-9 * std::max(1.0, D.norm())) throw ValidationError(what, "W does not diagonalize the matrix");
  return D;
}

ComplexMatrix inverse_checked(const ComplexMatrix& W, const std::string& path) {
  Eigen::JacobiSVD<ComplexMatrix> svd(W);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) <= 1e-12 * s(0)) throw ValidationError(path, "matrix is singular");
  return W.inverse();
}

ComplexMatrix scalar_schaffer(cplx lambda, int N) {
  ComplexMatrix t(1, 1);
  t(0, 0) = lambda;
  return schaffer_dilation(t, N).U;
}

std::vector<cplx> torus_point(const std::vector<double>& theta) {
  std::vector<cplx> z(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) z[i] = std::polar(1.0, theta[i]);
  return z;
}

double abs_on_torus(const funcalc::Polynomial& phi, const std::vector<double>& theta) {
  const auto z = torus_point(theta);
  return std::abs(phi(z));
}

// Gradient ascent on θ ↦ |φ(e^{iθ})| with backtracking.
std::vector<double> polish(const funcalc::Polynomial& phi, std::vector<double> theta) {
  const std::size_t d = theta.size();
  double f = abs_on_torus(phi, theta);
  double step = 0.1;
  for (int it = 0; it < 400 && step > 1e-14; ++it) {
    std::vector<double> g(d);
    double gn = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double h = 1e-6;
      auto a = theta, b = theta;
      a[i] += h;
      b[i] -= h;
      g[i] = (abs_on_torus(phi, a) - abs_on_torus(phi, b)) / (2 * h);
      gn += g[i] * g[i];
    }
    gn = std::sqrt(gn);
    if (gn < 1e-13) break;
    bool moved = false;
    while (step > 1e-14) {
      auto trial = theta;
      for (std::size_t i = 0; i < d; ++i) trial[i] += step * g[i] / gn;
      const double ft = abs_on_torus(phi, trial);
      if (ft > f) {
        theta = std::move(trial);
        f = ft;
        step *= 2.0;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return theta;
}

}  // namespace

// ---------------------------------------------------------------- serialization

json DilationTriple::to_json() const {
  json j;
  j["origin"] = origin;
  j["q"] = q();
  j["positive"] = positive;
  j["valid_horizon"] = horizon_json(valid_horizon);
  j["V"] = matrix_to_json(V);
  j["J"] = matrix_to_json(J);
  j["Q"] = matrix_to_json(Q);
  return j;
}

DilationTriple DilationTriple::from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  for (const char* key : {"V", "J", "Q"})
    if (!j.contains(key)) throw ValidationError(path + "." + key, "missing");
  DilationTriple t;
  t.V = matrix_from_json(j["V"], path + ".V");
  t.J = matrix_from_json(j["J"], path + ".J");
  t.Q = matrix_from_json(j["Q"], path + ".Q");
  t.positive = j.value("positive", false);
  if (j.contains("valid_horizon")) t.valid_horizon = horizon_from_json(j["valid_horizon"]);
  t.origin = j.value("origin", std::string("input"));
  return t;
}

json TailSystem::to_json() const {
  json j;
  j["origin"] = origin;
  j["Y_dim"] = y_dim();
  j["valid_horizon"] = horizon_json(valid_horizon);
  j["J"] = matrix_to_json(J);
  j["Q"] = matrix_to_json(Q);
  json v = json::array();
  for (const auto& m : V) v.push_back(matrix_to_json(m));
  j["V"] = std::move(v);
  return j;
}

TailSystem TailSystem::from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  for (const char* key : {"V", "J", "Q"})
    if (!j.contains(key)) throw ValidationError(path + "." + key, "missing");
  if (!j["V"].is_array()) throw ValidationError(path + ".V", "expected an array of matrices");
  TailSystem t;
  t.J = matrix_from_json(j["J"], path + ".J");
  t.Q = matrix_from_json(j["Q"], path + ".Q");
  for (std::size_t k = 0; k < j["V"].size(); ++k)
    t.V.push_back(matrix_from_json(j["V"][k], path + ".V[" + std::to_string(k) + "]"));
  if (j.contains("valid_horizon")) t.valid_horizon = horizon_from_json(j["valid_horizon"]);
  t.origin = j.value("origin", std::string("input"));
  return t;
}

json to_json(const AuditOptions& o) {
  json j;
  j["horizon"] = o.horizon;
  j["tol"] = o.tol;
  j["commute_tol"] = o.commute_tol;
  j["dense_commute_limit"] = o.dense_commute_limit;
  j["seed"] = o.seed;
  return j;
}

json AuditReport::to_json() const {
  json j;
  j["horizon"] = horizon;
  j["tol"] = tol;
  j["exponent_tuples"] = exponent_tuples;
  json r;
  r["comJT"] = comJT;
  r["dil"] = dil;
  r["dil2"] = dil2;
  r["premcomb"] = premcomb;
  r["combdil"] = combdil;
  r["commutation"] = commutation;
  j["residuals"] = std::move(r);
  j["commutation_method"] = commutation_method;
  j["valid_up_to_total_degree"] = horizon;
  return j;
}

// ---------------------------------------------------------------- leg operators

Eigen::Index LegOperator::total_dim() const { return prod(dims, 0, dims.size()); }

ComplexMatrix LegOperator::apply(const ComplexMatrix& X) const {
  const Eigen::Index a = prod(dims, 0, leg), q = dims[leg], b = prod(dims, leg + 1, dims.size());
  const Eigen::Index D = a * q * b;
  if (X.rows() != D) throw ValidationError("leg operator", "dimension mismatch");
  ComplexMatrix Y(D, X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c)
    for (Eigen::Index i = 0; i < a; ++i) {
      Eigen::Map<const RowMat> in(X.col(c).data() + i * q * b, q, b);
      Eigen::Map<RowMat> out(Y.col(c).data() + i * q * b, q, b);
      out.noalias() = A * in;
    }
  return Y;
}

ComplexMatrix LegOperator::materialize() const {
  const Eigen::Index a = prod(dims, 0, leg), b = prod(dims, leg + 1, dims.size());
  return kron(identity(a), kron(A, identity(b)));
}

Eigen::Index CombinedDilation::dim() const { return prod(dims, 0, dims.size()); }

ComplexMatrix CombinedDilation::compressed_power(const std::vector<int>& exponents) const {
  if (exponents.size() != U.size()) throw ValidationError("exponents", "expected one exponent per operator");
  ComplexMatrix X = J;
  for (std::size_t k = U.size(); k-- > 0;)
    for (int e = 0; e < exponents[k]; ++e) X = U[k].apply(X);
  return Q * X;
}

json CombinedDilation::to_json(bool include_matrices) const {
  json j;
  j["m"] = m;
  j["d"] = U.size();
  j["leg_dims"] = dims;
  j["dim"] = dim();
  j["convention"] = "legs q_1 ⊗ … ⊗ q_m ⊗ Y, leftmost leg first; U_k acts on leg k (k ≤ m) or on Y";
  j["norm_J"] = thin_norm(J);
  j["norm_Q"] = thin_norm(Q);
  j["audit"] = audit.to_json();
  if (include_matrices) {
    j["J"] = matrix_to_json(J);
    j["Q"] = matrix_to_json(Q);
    json u = json::array();
    for (const auto& op : U) {
      json e;
      e["leg"] = op.leg;
      e["A"] = matrix_to_json(op.A);
      u.push_back(std::move(e));
    }
    j["U"] = std::move(u);
  }
  return j;
}

// ---------------------------------------------------------------- audits

std::vector<std::vector<int>> exponent_tuples(std::size_t d, int horizon) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(d, 0);
  auto rec = [&](auto&& self, std::size_t i, int left) -> void {
    if (i == d) {
      out.push_back(cur);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      cur[i] = e;
      self(self, i + 1, left - e);
    }
    cur[i] = 0;
  };
  rec(rec, 0, horizon);
  return out;
}

ComplexMatrix tuple_power(const CommutingTuple& tuple, const std::vector<int>& exponents) {
  ComplexMatrix P = identity(tuple.dim());
  for (std::size_t k = 0; k < exponents.size(); ++k)
    for (int e = 0; e < exponents[k]; ++e) P = P * tuple[k];
  return P;
}

double dil_residual(const ComplexMatrix& T, const DilationTriple& t, int horizon) {
  const auto n = T.rows();
  const LegOperator op{{t.q(), n}, 0, t.V};
  ComplexMatrix X = t.J, P = identity(n);
  double worst = 0.0;
  for (int m = 0; m <= horizon; ++m) {
    if (m > 0) {
      X = op.apply(X);
      P = P * T;
    }
    worst = std::max(worst, rel(P, t.Q * X));
  }
  return worst;
}

double comJT_residual(const DilationTriple& t, const ComplexMatrix& Tj) {
  const ComplexMatrix lhs = t.J * Tj;
  const ComplexMatrix rhs = LegOperator{{t.q(), Tj.rows()}, 1, Tj}.apply(t.J);
  return (lhs - rhs).norm() / std::max(1.0, t.J.norm() * Tj.norm());
}

double dil2_residual(const std::vector<ComplexMatrix>& T, const TailSystem& tail, int horizon) {
  const auto n = tail.J.cols();
  double worst = 0.0;
  for (const auto& e : exponent_tuples(T.size(), horizon)) {
    ComplexMatrix P = identity(n), X = tail.J;
    for (std::size_t k = 0; k < T.size(); ++k)
      for (int i = 0; i < e[k]; ++i) P = P * T[k];
    for (std::size_t k = T.size(); k-- > 0;)
      for (int i = 0; i < e[k]; ++i) X = tail.V[k] * X;
    worst = std::max(worst, rel(P, tail.Q * X));
  }
  return worst;
}

CombinedDilation combine_dilations(const CommutingTuple& tuple, const std::vector<DilationTriple>& triples,
                                   const std::optional<TailSystem>& tail, const AuditOptions& opts) {
  const std::size_t d = tuple.arity(), m = triples.size();
  const auto n = tuple.dim();
  if (m < 1 || m > d) throw ValidationError("triples", "need between 1 and d triples");
  if (m < d && !tail) throw ValidationError("tail", "required when fewer triples than operators are given");
  if (m == d && tail) throw ValidationError("tail", "must be absent when every operator has a triple");
  if (opts.horizon < 0) throw ValidationError("horizon", "must be non-negative");
  for (std::size_t k = 0; k < m; ++k) check_triple_shape(triples[k], n, "triples[" + std::to_string(k) + "]");
  if (tail) check_tail_shape(*tail, n, d - m, "tail");

  AuditReport rep;
  rep.horizon = opts.horizon;
  rep.tol = opts.tol;

  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) rep.comJT = std::max(rep.comJT, comJT_residual(triples[i], tuple[j]));
  if (rep.comJT > opts.tol)
    throw AssumptionViolation("comJT", "J_i T_j differs from (I ⊗ T_j) J_i, residual " + std::to_string(rep.comJT));

  for (std::size_t k = 0; k < m; ++k) rep.dil = std::max(rep.dil, dil_residual(tuple[k], triples[k], opts.horizon));
  if (rep.dil > opts.tol)
    throw AssumptionViolation("dil", "T_k^n differs from Q_k (V_k ⊗ I)^n J_k, residual " + std::to_string(rep.dil));

  if (tail) {
    std::vector<ComplexMatrix> rest(tuple.matrices().begin() + static_cast<std::ptrdiff_t>(m),
                                    tuple.matrices().end());
    rep.dil2 = dil2_residual(rest, *tail, opts.horizon);
    if (rep.dil2 > opts.tol)
      throw AssumptionViolation("dil2", "tail system does not reproduce the remaining powers, residual " +
                                            std::to_string(rep.dil2));
  }

  CombinedDilation out;
  out.m = m;
  std::vector<Eigen::Index> legs;
  for (const auto& t : triples) legs.push_back(t.q());

  // (J): J̃_k = (I^{⊗k−1} ⊗ J_k) J̃_{k−1};  (Q): Q̃_k = Q̃_{k−1} (I^{⊗k−1} ⊗ Q_k).
  out.Jtilde = triples[0].J;
  out.Qtilde = triples[0].Q;
  for (std::size_t k = 1; k < m; ++k) {
    const auto a = prod(legs, 0, k);
    out.Jtilde = kron(identity(a), triples[k].J) * out.Jtilde;
    out.Qtilde = out.Qtilde * kron(identity(a), triples[k].Q);
  }

  auto sdims = legs;
  sdims.push_back(n);
  for (std::size_t k = 0; k < m; ++k) out.S.push_back(LegOperator{sdims, k, triples[k].V});

  out.dims = legs;
  const auto a = prod(legs, 0, m);
  if (tail) {
    out.dims.push_back(tail->y_dim());
    out.J = kron(identity(a), tail->J) * out.Jtilde;
    out.Q = out.Qtilde * kron(identity(a), tail->Q);
  } else {
    out.dims.push_back(n);
    out.J = out.Jtilde;
    out.Q = out.Qtilde;
  }
  // (Rk) and (Rk2).
  for (std::size_t k = 0; k < m; ++k) out.U.push_back(LegOperator{out.dims, k, triples[k].V});
  if (tail)
    for (const auto& V : tail->V) out.U.push_back(LegOperator{out.dims, m, V});

  // (premcomb) on the first m operators.
  {
    const auto es = exponent_tuples(m, opts.horizon);
    const auto res = parallel_map<double>(es.size(), [&](std::size_t i) {
      ComplexMatrix X = out.Jtilde;
      for (std::size_t k = m; k-- > 0;)
        for (int e = 0; e < es[i][k]; ++e) X = out.S[k].apply(X);
      std::vector<int> full(d, 0);
      std::copy(es[i].begin(), es[i].end(), full.begin());
      return rel(tuple_power(tuple, full), out.Qtilde * X);
    });
    rep.premcomb = *std::max_element(res.begin(), res.end());
  }
  if (rep.premcomb > opts.tol)
    throw AssumptionViolation("premcomb", "partial combination fails, residual " + std::to_string(rep.premcomb));

  {
    const auto es = exponent_tuples(d, opts.horizon);
    rep.exponent_tuples = es.size();
    const auto res = parallel_map<double>(es.size(), [&](std::size_t i) {
      return rel(tuple_power(tuple, es[i]), out.compressed_power(es[i]));
    });
    rep.combdil = *std::max_element(res.begin(), res.end());
  }
  if (rep.combdil > opts.tol)
    throw AssumptionViolation("combdil", "combined identity fails, residual " + std::to_string(rep.combdil));

  const auto D = out.dim();
  if (D <= opts.dense_commute_limit) {
    rep.commutation_method = "dense";
    std::vector<ComplexMatrix> full;
    for (const auto& op : out.U) full.push_back(op.materialize());
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) {
        const double scale = std::max(1.0, operator_norm(out.U[i].A) * operator_norm(out.U[j].A));
        rep.commutation =
            std::max(rep.commutation, (full[i] * full[j] - full[j] * full[i]).norm() / (scale * std::sqrt(double(D))));
      }
  } else {
    rep.commutation_method = "random probe, 16 columns";
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> g;
    ComplexMatrix X(D, 16);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = cplx(g(rng), g(rng));
    X /= X.norm();
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) {
        const double scale = std::max(1.0, operator_norm(out.U[i].A) * operator_norm(out.U[j].A));
        const ComplexMatrix c = out.U[i].apply(out.U[j].apply(X)) - out.U[j].apply(out.U[i].apply(X));
        rep.commutation = std::max(rep.commutation, c.norm() / scale);
      }
  }
  if (rep.commutation > opts.commute_tol)
    throw AssumptionViolation("Rk", "dilating operators do not commute, residual " + std::to_string(rep.commutation));

  out.audit = rep;
  return out;
}

// ---------------------------------------------------------------- constructors

DilationTriple trivial_triple(const ComplexMatrix& T) {
  const auto n = T.rows();
  const cplx c = T(0, 0);
  if ((T - c * identity(n)).norm() > 1e-14 * std::max(1.0, std::abs(c)))
    throw ValidationError("T", "trivial triple needs a scalar multiple of the identity");
  DilationTriple t;
  t.V = ComplexMatrix::Constant(1, 1, c);
  t.J = identity(n);
  t.Q = identity(n);
  t.positive = c.imag() == 0.0 && c.real() >= 0.0;
  t.origin = "trivial";
  return t;
}

DilationTriple companion_triple(const ComplexMatrix& T) {
  const auto n = T.rows();
  const auto p = charpoly(T);
  DilationTriple t;
  t.V = ComplexMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j + 1 < n; ++j) t.V(j + 1, j) = 1.0;
  for (Eigen::Index j = 0; j < n; ++j) t.V(j, n - 1) = -p[j];
  t.J = kron(unit(n, 0), identity(n));
  t.Q = ComplexMatrix(n, n * n);
  const auto pw = operators::matrix_power_family(T, static_cast<int>(n) - 1);
  for (Eigen::Index j = 0; j < n; ++j) t.Q.middleCols(j * n, n) = pw[j];
  t.origin = "companion";
  return t;
}

DilationTriple shift_triple(const ComplexMatrix& T, int N) {
  if (N < 0) throw ValidationError("N", "must be non-negative");
  const auto n = T.rows();
  const Eigen::Index q = N + 1;
  DilationTriple t;
  t.V = ComplexMatrix::Zero(q, q);
  for (Eigen::Index j = 0; j + 1 < q; ++j) t.V(j + 1, j) = 1.0;
  t.J = kron(unit(q, 0), identity(n));
  t.Q = ComplexMatrix(n, q * n);
  const auto pw = operators::matrix_power_family(T, N);
  for (Eigen::Index j = 0; j < q; ++j) t.Q.middleCols(j * n, n) = pw[j];
  t.positive = true;
  t.valid_horizon = N;
  t.origin = "shift";
  return t;
}

DilationTriple spectral_triple(const ComplexMatrix& T, const ComplexMatrix& W) {
  const auto n = T.rows();
  const ComplexMatrix Winv = inverse_checked(W, "W");
  const ComplexMatrix D = diagonal_in(T, W, Winv, "T");
  DilationTriple t;
  t.V = ComplexMatrix::Zero(n, n);
  t.J = ComplexMatrix(n * n, n);
  t.Q = ComplexMatrix(n, n * n);
  bool pos = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    t.V(i, i) = D(i, i);
    pos = pos && std::abs(D(i, i).imag()) <= 1e-14 && D(i, i).real() >= -1e-14;
    t.J.middleRows(i * n, n) = W.col(i) * Winv.row(i);
    t.Q.middleCols(i * n, n) = identity(n);
  }
  if (pos) t.V = t.V.real().cwiseMax(0.0).cast<cplx>();
  t.positive = pos;
  t.origin = "spectral";
  return t;
}

DilationTriple spectral_unitary_triple(const ComplexMatrix& T, const ComplexMatrix& W, int N) {
  const auto n = T.rows();
  const ComplexMatrix Winv = inverse_checked(W, "W");
  const ComplexMatrix D = diagonal_in(T, W, Winv, "T");
  const Eigen::Index s = 2 * N + 1, q = n * s;
  DilationTriple t;
  t.V = ComplexMatrix::Zero(q, q);
  t.J = ComplexMatrix::Zero(q * n, n);
  t.Q = ComplexMatrix::Zero(n, q * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(D(i, i)) > 1.0 + 1e-12) throw NotContractionError("eigenvalue outside the closed unit disc");
    t.V.block(i * s, i * s, s, s) = scalar_schaffer(D(i, i), N);
    const Eigen::Index f = i * s + N;
    t.J.middleRows(f * n, n) = W.col(i) * Winv.row(i);
    t.Q.middleCols(f * n, n) = identity(n);
  }
  t.valid_horizon = N;
  t.origin = "spectral_unitary";
  return t;
}

TailSystem trivial_tail(const std::vector<ComplexMatrix>& T) {
  if (T.empty()) throw ValidationError("tail", "needs at least one operator");
  TailSystem t;
  t.J = identity(T.front().rows());
  t.Q = t.J;
  t.V = T;
  t.origin = "trivial";
  return t;
}

TailSystem schaffer_tail(const std::vector<ComplexMatrix>& T, const ComplexMatrix& W, int N) {
  if (T.empty()) throw ValidationError("tail", "needs at least one operator");
  const auto n = T.front().rows();
  const ComplexMatrix Winv = inverse_checked(W, "W");
  const std::size_t r = T.size();
  const Eigen::Index s = 2 * N + 1;
  Eigen::Index block = 1;
  for (std::size_t a = 0; a < r; ++a) block *= s;
  const Eigen::Index Y = n * block;

  std::vector<ComplexMatrix> D;
  for (std::size_t a = 0; a < r; ++a) D.push_back(diagonal_in(T[a], W, Winv, "T[" + std::to_string(a) + "]"));

  TailSystem t;
  t.V.assign(r, ComplexMatrix::Zero(Y, Y));
  ComplexMatrix E = ComplexMatrix::Zero(Y, n);
  Eigen::Index centre = 0;
  for (std::size_t a = 0; a < r; ++a) centre = centre * s + N;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<Eigen::Index> dims(r, s);
    for (std::size_t a = 0; a < r; ++a) {
      if (std::abs(D[a](i, i)) > 1.0 + 1e-12) throw NotContractionError("eigenvalue outside the closed unit disc");
      t.V[a].block(i * block, i * block, block, block) =
          LegOperator{dims, a, scalar_schaffer(D[a](i, i), N)}.materialize();
    }
    E(i * block + centre, i) = 1.0;
  }
  t.J = E * Winv;
  t.Q = W * E.transpose();
  t.valid_horizon = N;
  t.origin = "schaffer";
  return t;
}

ComplexMatrix joint_eigenbasis(const CommutingTuple& tuple, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  ComplexMatrix C = ComplexMatrix::Zero(tuple.dim(), tuple.dim());
  for (const auto& T : tuple.matrices()) C += g(rng) * T;
  Eigen::ComplexEigenSolver<ComplexMatrix> es(C);
  ComplexMatrix W = es.eigenvectors();
  for (Eigen::Index j = 0; j < W.cols(); ++j) W.col(j).normalize();
  return W;
}

// ---------------------------------------------------------------- unitary dilation

ComplexMatrix defect_root(const ComplexMatrix& A) {
  const auto n = A.rows();
  const ComplexMatrix H = identity(n) - 0.5 * (A + A.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(H);
  const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

json SchaefferDilation::to_json(bool include_matrices) const {
  json j;
  j["N"] = N;
  j["dim"] = U.rows();
  j["unitarity_residual"] = unitarity_residual;
  j["compression_residual"] = compression_residual;
  j["valid_horizon"] = N;
  if (include_matrices) {
    j["U"] = matrix_to_json(U);
    j["J_H"] = matrix_to_json(JH);
  }
  return j;
}

SchaefferDilation schaffer_dilation(const ComplexMatrix& T, int N) {
  if (T.rows() != T.cols() || T.rows() < 1) throw ValidationError("T", "must be square");
  if (N < 1) throw ValidationError("N", "horizon must be at least 1");
  if (operator_norm(T) > 1.0 + 1e-12) throw NotContractionError("‖T‖ exceeds 1");
  const auto n = T.rows();
  const Eigen::Index s = 2 * N + 1;
  SchaefferDilation out;
  out.N = N;
  // One SVD T = W Σ V* gives D_T = V (I − Σ²)^{1/2} V* and D_{T*} = W (I − Σ²)^{1/2} W*,
  // so T D_T = D_{T*} T holds to rounding even when σ_i = 1.
  Eigen::JacobiSVD<ComplexMatrix> svd(T, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const ComplexVector root =
      (1.0 - svd.singularValues().array().square()).cwiseMax(0.0).sqrt().matrix().cast<cplx>();
  out.defect = svd.matrixV() * root.asDiagonal() * svd.matrixV().adjoint();
  out.defect_star = svd.matrixU() * root.asDiagonal() * svd.matrixU().adjoint();
  out.U = ComplexMatrix::Zero(s * n, s * n);
  auto blk = [&](int row, int col) { return out.U.block((row + N) * n, (col + N) * n, n, n); };
  blk(0, 0) = T;
  blk(1, 0) = out.defect;
  blk(0, -1) = out.defect_star;
  blk(1, -1) = -T.adjoint();
  for (int p = 1; p < N; ++p) blk(p + 1, p) = identity(n);
  blk(-N, N) = identity(n);
  for (int p = -N; p <= -2; ++p) blk(p + 1, p) = identity(n);

  out.JH = kron(unit(s, N), identity(n));
  out.PH = out.JH.adjoint();
  out.unitarity_residual = unitarity(out.U);
  ComplexMatrix X = out.JH, P = identity(n);
  for (int k = 0; k <= N; ++k) {
    if (k > 0) {
      X = out.U * X;
      P = P * T;
    }
    out.compression_residual = std::max(out.compression_residual, operator_norm(out.PH * X - P));
  }
  return out;
}

// ---------------------------------------------------------------- von Neumann

JointSpectrum joint_spectrum(const std::vector<ComplexMatrix>& family, std::uint64_t seed) {
  if (family.empty()) throw ValidationError("family", "empty");
  const auto n = family.front().rows();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  ComplexMatrix C = ComplexMatrix::Zero(n, n);
  for (const auto& F : family) C += cplx(g(rng), g(rng)) * F;
  Eigen::ComplexSchur<ComplexMatrix> schur(C);
  const ComplexMatrix& Z = schur.matrixU();
  JointSpectrum js;
  js.points.assign(n, std::vector<cplx>(family.size()));
  for (std::size_t k = 0; k < family.size(); ++k) {
    ComplexMatrix D = Z.adjoint() * family[k] * Z;
    for (Eigen::Index i = 0; i < n; ++i) js.points[i][k] = D(i, i);
    D.diagonal().setZero();
    js.diagonalization_residual =
        std::max(js.diagonalization_residual, D.norm() / std::max(1.0, family[k].norm()));
  }
  return js;
}

TorusSup torus_sup(const funcalc::Polynomial& phi, const std::vector<std::vector<cplx>>& extra_starts,
                   const TorusSupOptions& opts) {
  const std::size_t d = phi.arity();
  TorusSup out;
  if (d == 0 || phi.is_zero()) return out;
  int G = std::max(4, opts.density);
  while (G > 4 && std::pow(static_cast<double>(G), static_cast<double>(d)) > static_cast<double>(opts.max_points))
    G /= 2;
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= static_cast<std::size_t>(G);

  // Best grid points, kept sorted by value.
  std::vector<std::pair<double, std::size_t>> best;
  std::vector<double> theta(d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t r = idx;
    for (std::size_t i = d; i-- > 0;) {
      theta[i] = 2.0 * kPi * static_cast<double>(r % G) / G;
      r /= G;
    }
    const double v = abs_on_torus(phi, theta);
    if (static_cast<int>(best.size()) < opts.polish_starts || v > best.back().first) {
      best.emplace_back(v, idx);
      std::sort(best.begin(), best.end(), [](auto& a, auto& b) { return a.first > b.first; });
      if (static_cast<int>(best.size()) > opts.polish_starts) best.pop_back();
    }
  }
  out.grid_value = best.empty() ? 0.0 : best.front().first;

  std::vector<std::vector<double>> starts;
  for (auto [v, idx] : best) {
    std::vector<double> t(d);
    std::size_t r = idx;
    for (std::size_t i = d; i-- > 0;) {
      t[i] = 2.0 * kPi * static_cast<double>(r % G) / G;
      r /= G;
    }
    starts.push_back(std::move(t));
  }
  for (const auto& z : extra_starts) {
    if (z.size() != d) throw ValidationError("extra_starts", "arity mismatch");
    std::vector<double> t(d);
    for (std::size_t i = 0; i < d; ++i) t[i] = std::arg(z[i]);
    starts.push_back(std::move(t));
  }
  out.value = out.grid_value;
  for (const auto& s : starts) {
    const auto t = polish(phi, s);
    const double v = abs_on_torus(phi, t);
    if (v >= out.value) {
      out.value = v;
      out.argmax = torus_point(t);
    }
  }
  return out;
}

json VonNeumannResult::to_json() const {
  json j;
  j["lhs"] = lhs;
  j["rhs"] = rhs;
  j["grid_rhs"] = grid_rhs;
  if (direct_norm >= 0.0) j["direct_norm"] = direct_norm;
  j["unitarity_residual"] = unitarity_residual;
  j["commutation_residual"] = commutation_residual;
  j["diagonalization_residual"] = diagonalization_residual;
  j["holds"] = holds;
  j["equality"] = equality;
  return j;
}

VonNeumannResult vonneumann_unitaries(const std::vector<ComplexMatrix>& U, const funcalc::Polynomial& phi,
                                      const TorusSupOptions& opts, double tol) {
  if (U.empty()) throw ValidationError("U", "empty family");
  if (phi.arity() != U.size()) throw ValidationError("polynomial", "arity does not match the family");
  VonNeumannResult r;
  for (std::size_t k = 0; k < U.size(); ++k) {
    if (U[k].rows() != U[k].cols() || U[k].rows() != U.front().rows())
      throw ValidationError("U[" + std::to_string(k) + "]", "dimension mismatch");
    r.unitarity_residual = std::max(r.unitarity_residual, unitarity(U[k]));
  }
  if (r.unitarity_residual > 1e-10) throw ValidationError("U", "family is not unitary (hence not known normal)");
  for (std::size_t i = 0; i < U.size(); ++i)
    for (std::size_t j = i + 1; j < U.size(); ++j)
      r.commutation_residual = std::max(r.commutation_residual, (U[i] * U[j] - U[j] * U[i]).norm());
  if (r.commutation_residual > 1e-10) throw ValidationError("U", "family does not commute");

  const auto js = joint_spectrum(U);
  r.diagonalization_residual = js.diagonalization_residual;
  if (r.diagonalization_residual > 1e-8) throw ValidationError("U", "joint diagonalization failed");
  std::vector<std::pair<double, std::size_t>> vals;
  for (std::size_t i = 0; i < js.points.size(); ++i) vals.emplace_back(std::abs(phi(js.points[i])), i);
  std::sort(vals.begin(), vals.end(), std::greater<>());
  r.lhs = vals.front().first;
  std::vector<std::vector<cplx>> starts;
  for (std::size_t i = 0; i < std::min<std::size_t>(vals.size(), 8); ++i) starts.push_back(js.points[vals[i].second]);
  const auto sup = torus_sup(phi, starts, opts);
  r.rhs = sup.value;
  r.grid_rhs = sup.grid_value;
  if (U.front().rows() <= 256) r.direct_norm = operator_norm(funcalc::eval_poly(CommutingTuple(U), phi));
  r.holds = r.lhs <= r.rhs + tol;
  r.equality = r.lhs >= r.rhs - tol;
  return r;
}

json Th51Report::to_json() const {
  json j;
  j["lhs"] = lhs;
  j["unitary_norm"] = unitary_norm;
  j["torus_sup"] = torus_sup;
  j["C_hat"] = C_hat;
  j["rhs"] = rhs;
  j["compression_residual"] = compression_residual;
  j["degree"] = degree;
  j["horizon"] = horizon;
  j["holds"] = holds;
  j["note"] = "finite-horizon dilation, faithful for total degree ≤ horizon";
  j["audit"] = audit.to_json();
  return j;
}

Th51Report inequality_witness_th51(const CommutingTuple& tuple, const std::vector<DilationTriple>& triples,
                                   const TailSystem& tail, const funcalc::Polynomial& phi, int horizon,
                                   const TorusSupOptions& sup_opts) {
  if (phi.arity() != tuple.arity()) throw ValidationError("polynomial", "arity does not match the tuple");
  Th51Report r;
  r.degree = phi.degree();
  r.horizon = horizon;
  if (r.degree > horizon)
    throw GuardError("polynomial degree " + std::to_string(r.degree) + " exceeds the dilation horizon " +
                     std::to_string(horizon));
  int valid = tail.valid_horizon;
  for (const auto& t : triples) valid = std::min(valid, t.valid_horizon);
  if (horizon > valid)
    throw GuardError("requested horizon " + std::to_string(horizon) + " exceeds the dilations' valid horizon " +
                     std::to_string(valid));

  AuditOptions ao;
  ao.horizon = horizon;
  const auto comb = combine_dilations(tuple, triples, tail, ao);
  r.audit = comb.audit;

  for (const auto& op : comb.U)
    if (unitarity(op.A) > 1e-10) throw AssumptionViolation("calcunit", "dilating operators are not unitary");

  // Joint spectrum of U: per-leg spectra times the joint spectrum of the tail.
  std::vector<std::vector<cplx>> legs;
  for (const auto& t : triples) {
    const auto js = joint_spectrum({t.V});
    std::vector<cplx> e;
    for (const auto& p : js.points) e.push_back(p[0]);
    legs.push_back(std::move(e));
  }
  const auto tail_js = joint_spectrum(tail.V);
  std::vector<std::pair<double, std::vector<cplx>>> top;
  std::vector<std::size_t> idx(legs.size(), 0);
  std::vector<cplx> point(tuple.arity());
  while (true) {
    for (std::size_t k = 0; k < legs.size(); ++k) point[k] = legs[k][idx[k]];
    for (const auto& tp : tail_js.points) {
      std::copy(tp.begin(), tp.end(), point.begin() + static_cast<std::ptrdiff_t>(legs.size()));
      const double v = std::abs(phi(point));
      r.unitary_norm = std::max(r.unitary_norm, v);
      if (top.size() < 8 || v > top.back().first) {
        top.emplace_back(v, point);
        std::sort(top.begin(), top.end(), [](auto& a, auto& b) { return a.first > b.first; });
        if (top.size() > 8) top.pop_back();
      }
    }
    std::size_t k = 0;
    while (k < legs.size() && ++idx[k] == legs[k].size()) idx[k++] = 0;
    if (k == legs.size()) break;
  }
  std::vector<std::vector<cplx>> starts;
  for (auto& [v, p] : top) starts.push_back(p);
  r.torus_sup = torus_sup(phi, starts, sup_opts).value;

  const ComplexMatrix lhsM = funcalc::eval_poly(tuple, phi);
  r.lhs = operator_norm(lhsM);
  ComplexMatrix viaU = ComplexMatrix::Zero(tuple.dim(), tuple.dim());
  for (const auto& [alpha, c] : phi.coefficients()) viaU += c * comb.compressed_power(alpha);
  r.compression_residual = rel(lhsM, viaU);
  r.C_hat = thin_norm(comb.Q) * thin_norm(comb.J);
  r.rhs = r.C_hat * r.torus_sup;
  r.holds = r.lhs <= r.rhs + 1e-8 * std::max(1.0, r.rhs);
  return r;
}

json SimilarityCheck::to_json() const {
  json j;
  j["norms"] = norms;
  j["max_norm"] = max_norm;
  j["condition"] = condition;
  j["pass"] = pass;
  return j;
}

SimilarityCheck verify_similarity(const CommutingTuple& tuple, const ComplexMatrix& S, double tol) {
  if (S.rows() != tuple.dim() || S.cols() != tuple.dim()) throw ValidationError("S", "dimension mismatch");
  const ComplexMatrix Sinv = inverse_checked(S, "S");
  SimilarityCheck c;
  Eigen::JacobiSVD<ComplexMatrix> svd(S);
  c.condition = svd.singularValues()(0) / svd.singularValues()(S.rows() - 1);
  for (const auto& T : tuple.matrices()) {
    c.norms.push_back(operator_norm(Sinv * T * S));
    c.max_norm = std::max(c.max_norm, c.norms.back());
  }
  c.pass = c.max_norm <= 1.0 + tol;
  return c;
}

// ---------------------------------------------------------------- corpus

namespace {

struct Seeded {
  ComplexMatrix W;
  std::vector<ComplexMatrix> T;
};

ComplexMatrix random_conditioned(Eigen::Index n, double cond, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix A(n, n);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = cplx(g(rng), g(rng));
  Eigen::JacobiSVD<ComplexMatrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = n == 1 ? 1.0 : std::pow(cond, -static_cast<double>(i) / (n - 1));
  return svd.matrixU() * s.cast<cplx>().asDiagonal() * svd.matrixV().adjoint();
}

// Simultaneously diagonalizable tuple with joint eigenvalues in the disc of radius 0.9.
Seeded diagonalizable(Eigen::Index n, std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Seeded s;
  s.W = random_conditioned(n, 4.0, rng);
  const ComplexMatrix Winv = s.W.inverse();
  for (std::size_t k = 0; k < d; ++k) {
    Eigen::VectorXcd lam(n);
    for (Eigen::Index i = 0; i < n; ++i) lam(i) = std::polar(0.9 * std::sqrt(u(rng)), 2 * kPi * u(rng));
    s.T.push_back(s.W * lam.asDiagonal() * Winv);
  }
  return s;
}

// Polynomials in a Jordan block: not diagonalizable.
std::vector<ComplexMatrix> jordan_tuple(std::size_t d) {
  ComplexMatrix M = 0.4 * identity(3);
  M(0, 1) = 1.0;
  M(1, 2) = 1.0;
  std::vector<ComplexMatrix> T{M};
  if (d > 1) T.push_back(0.5 * M * M - 0.2 * identity(3));
  if (d > 2) T.push_back(identity(3) - 0.3 * M);
  return T;
}

DilationSystem make(std::string name, std::vector<ComplexMatrix> T, std::vector<DilationTriple> triples,
                    std::optional<TailSystem> tail, std::string failure = {}) {
  return DilationSystem{std::move(name), CommutingTuple(std::move(T)), std::move(triples), std::move(tail),
                        std::move(failure)};
}

std::vector<ComplexMatrix> slice(const std::vector<ComplexMatrix>& T, std::size_t from) {
  return {T.begin() + static_cast<std::ptrdiff_t>(from), T.end()};
}

}  // namespace

std::vector<DilationSystem> dilation_corpus(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<DilationSystem> out;
  const int N = 5;

  // d = 1
  {
    auto s = diagonalizable(3, 1, rng);
    out.push_back(make("d1-companion", s.T, {companion_triple(s.T[0])}, std::nullopt));
    out.push_back(make("d1-shift", s.T, {shift_triple(s.T[0], 6)}, std::nullopt));
    out.push_back(make("d1-spectral", s.T, {spectral_triple(s.T[0], s.W)}, std::nullopt));
    auto s2 = diagonalizable(2, 1, rng);
    out.push_back(make("d1-spectral-unitary", s2.T, {spectral_unitary_triple(s2.T[0], s2.W, N)}, std::nullopt));
  }
  // d = 2, m = 1
  {
    auto s = diagonalizable(3, 2, rng);
    out.push_back(make("d2-m1-companion-trivial", s.T, {companion_triple(s.T[0])}, trivial_tail(slice(s.T, 1))));
    out.push_back(make("d2-m1-shift-schaffer", s.T, {shift_triple(s.T[0], N)}, schaffer_tail(slice(s.T, 1), s.W, N)));
    out.push_back(make("d2-m1-spectral-trivial", s.T, {spectral_triple(s.T[0], s.W)}, trivial_tail(slice(s.T, 1))));
    auto s2 = diagonalizable(2, 2, rng);
    out.push_back(make("d2-m1-unitary-schaffer", s2.T, {spectral_unitary_triple(s2.T[0], s2.W, N)},
                       schaffer_tail(slice(s2.T, 1), s2.W, N)));
    auto J = jordan_tuple(2);
    out.push_back(make("d2-m1-jordan-companion", J, {companion_triple(J[0])}, trivial_tail(slice(J, 1))));
  }
  // d = 2, m = 2
  {
    auto s = diagonalizable(3, 2, rng);
    out.push_back(make("d2-m2-companion-shift", s.T, {companion_triple(s.T[0]), shift_triple(s.T[1], N)},
                       std::nullopt));
    out.push_back(make("d2-m2-spectral", s.T, {spectral_triple(s.T[0], s.W), spectral_triple(s.T[1], s.W)},
                       std::nullopt));
    auto J = jordan_tuple(2);
    out.push_back(make("d2-m2-jordan", J, {shift_triple(J[0], N), companion_triple(J[1])}, std::nullopt));
    auto s2 = diagonalizable(2, 2, rng);
    out.push_back(make("d2-m2-unitary-companion", s2.T,
                       {spectral_unitary_triple(s2.T[0], s2.W, N), companion_triple(s2.T[1])}, std::nullopt));
  }
  // d = 3, m = 1
  {
    auto s = diagonalizable(2, 3, rng);
    out.push_back(make("d3-m1-companion-schaffer", s.T, {companion_triple(s.T[0])},
                       schaffer_tail(slice(s.T, 1), s.W, N)));
    auto s3 = diagonalizable(3, 3, rng);
    out.push_back(make("d3-m1-shift-trivial", s3.T, {shift_triple(s3.T[0], N)}, trivial_tail(slice(s3.T, 1))));
  }
  // d = 3, m = 2
  {
    auto s = diagonalizable(3, 3, rng);
    out.push_back(make("d3-m2-companion-spectral", s.T, {companion_triple(s.T[0]), spectral_triple(s.T[1], s.W)},
                       trivial_tail(slice(s.T, 2))));
    auto s2 = diagonalizable(2, 3, rng);
    out.push_back(make("d3-m2-unitary-shift-schaffer", s2.T,
                       {spectral_unitary_triple(s2.T[0], s2.W, N), shift_triple(s2.T[1], N)},
                       schaffer_tail(slice(s2.T, 2), s2.W, N)));
  }
  // d = 3, m = 3
  {
    auto s = diagonalizable(3, 3, rng);
    out.push_back(make("d3-m3-companion", s.T,
                       {companion_triple(s.T[0]), companion_triple(s.T[1]), companion_triple(s.T[2])},
                       std::nullopt));
    auto s2 = diagonalizable(3, 3, rng);
    out.push_back(make("d3-m3-mixed", s2.T,
                       {shift_triple(s2.T[0], N), spectral_triple(s2.T[1], s2.W), companion_triple(s2.T[2])},
                       std::nullopt));
    auto J = jordan_tuple(3);
    out.push_back(make("d3-m3-jordan", J, {companion_triple(J[0]), shift_triple(J[1], N), companion_triple(J[2])},
                       std::nullopt));
  }
  return out;
}

std::vector<DilationSystem> broken_dilation_corpus(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<DilationSystem> out;
  const int N = 5;
  {
    // J = e_0 ⊗ S with S not commuting with T_2: (dil) holds, (comJT) does not.
    auto s = diagonalizable(3, 2, rng);
    const ComplexMatrix S = random_conditioned(3, 3.0, rng);
    auto t = shift_triple(s.T[0], N);
    t.J = kron(unit(N + 1, 0), S);
    const ComplexMatrix Sinv = S.inverse();
    const auto pw = operators::matrix_power_family(s.T[0], N);
    for (int j = 0; j <= N; ++j) t.Q.middleCols(j * 3, 3) = pw[j] * Sinv;
    out.push_back(make("broken-comJT-twisted-embedding", s.T, {t}, trivial_tail(slice(s.T, 1)), "comJT"));
  }
  {
    auto s = diagonalizable(3, 2, rng);
    out.push_back(make("broken-dil-short-shift", s.T, {shift_triple(s.T[0], 3), companion_triple(s.T[1])},
                       std::nullopt, "dil"));
  }
  {
    auto s = diagonalizable(3, 2, rng);
    auto tail = trivial_tail(slice(s.T, 1));
    tail.V[0](0, 1) += 0.1;
    out.push_back(make("broken-dil2-perturbed-tail", s.T, {companion_triple(s.T[0])}, tail, "dil2"));
  }
  {
    auto s = diagonalizable(3, 2, rng);
    auto t = companion_triple(s.T[0]);
    t.V(0, 2) += 0.05;
    out.push_back(make("broken-dil-perturbed-companion", s.T, {t, companion_triple(s.T[1])}, std::nullopt, "dil"));
  }
  {
    // T_1 = 0.5 I is diagonal in every basis, so W need not diagonalize T_2.
    auto s = diagonalizable(3, 1, rng);
    std::vector<ComplexMatrix> T{0.5 * identity(3), s.T[0]};
    const ComplexMatrix W = random_conditioned(3, 3.0, rng);
    out.push_back(make("broken-comJT-foreign-projections", T, {spectral_triple(T[0], W)}, trivial_tail(slice(T, 1)),
                       "comJT"));
  }
  return out;
}

}  // namespace hinf::dilation
