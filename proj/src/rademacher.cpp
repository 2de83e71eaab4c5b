#include "hinf/rademacher.hpp"

#include "hinf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hinf::rad {

namespace {

constexpr std::size_t kChunks = 64;

void check_p(double p, const std::string& path) {
  if (!(p >= 1.0)) throw ValidationError(path, "p must be at least 1");
}

ComplexVector gaussian(Eigen::Index m, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexVector v(m);
  for (Eigen::Index i = 0; i < m; ++i) v(i) = cplx(g(rng), g(rng));
  return v;
}

// c = s^{(0)} ⊗ ⋯ ⊗ s^{(d−1)}, bit k·n + i of the pattern giving s^{(k)}_i.
void chaos_coefficients(const std::vector<std::uint64_t>& words, std::size_t d, Eigen::Index n, Eigen::VectorXd& c) {
  c.resize(1);
  c(0) = 1.0;
  for (std::size_t k = 0; k < d; ++k) {
    Eigen::VectorXd next(c.size() * n);
    for (Eigen::Index a = 0; a < c.size(); ++a)
      for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t b = k * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
        const bool neg = (words[b / 64] >> (b % 64)) & 1u;
        next(a * n + i) = neg ? -c(a) : c(a);
      }
    c.swap(next);
  }
}

json vector_json(const ComplexVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(complex_to_json(v(i)));
  return a;
}

ComplexVector random_coefficients(Eigen::Index count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ComplexVector a(count);
  switch (rng() % 4) {
    case 0:  // real signs
      for (Eigen::Index i = 0; i < count; ++i) a(i) = (rng() & 1u) ? -1.0 : 1.0;
      break;
    case 1:  // unimodular
      for (Eigen::Index i = 0; i < count; ++i) a(i) = std::polar(1.0, 2 * kPi * u(rng));
      break;
    case 2:  // closed unit disc
      for (Eigen::Index i = 0; i < count; ++i) a(i) = std::polar(std::sqrt(u(rng)), 2 * kPi * u(rng));
      break;
    default:  // 0/1 masks
      for (Eigen::Index i = 0; i < count; ++i) a(i) = (rng() & 1u) ? 1.0 : 0.0;
      if (a.cwiseAbs().maxCoeff() == 0.0) a(0) = 1.0;
  }
  return a;
}

IndexedFamily random_family(std::size_t d, Eigen::Index n, Eigen::Index m, std::mt19937_64& rng) {
  const Eigen::Index count = static_cast<Eigen::Index>(std::pow(n, d));
  ComplexMatrix x(m, count);
  switch (rng() % 3) {
    case 0:
      for (Eigen::Index c = 0; c < count; ++c) x.col(c) = gaussian(m, rng);
      break;
    case 1: {  // few directions with random amplitudes
      const ComplexVector u = gaussian(m, rng), v = gaussian(m, rng);
      for (Eigen::Index c = 0; c < count; ++c) x.col(c) = gaussian(1, rng)(0) * u + gaussian(1, rng)(0) * v;
      break;
    }
    default:  // one heavy coordinate per vector
      for (Eigen::Index c = 0; c < count; ++c) x.col(c) = 0.1 * gaussian(m, rng);
      for (Eigen::Index c = 0; c < count; ++c) x(static_cast<Eigen::Index>(rng() % m), c) += gaussian(1, rng)(0) * 3.0;
  }
  return IndexedFamily(d, n, std::move(x));
}

double exact_nd(const IndexedFamily& f, const FiniteNormedSpace& X) {
  return rad_norm(f, X).value;
}

}  // namespace

// ---------------------------------------------------------------- spaces

FiniteNormedSpace::FiniteNormedSpace(Eigen::Index m, double p) : p_(p), scales_(static_cast<std::size_t>(m), 1.0) {
  check_p(p, "space.p");
  if (m < 1) throw ValidationError("space.m", "dimension must be at least 1");
}

FiniteNormedSpace::FiniteNormedSpace(double p, std::vector<double> scales) : p_(p), scales_(std::move(scales)) {
  check_p(p, "space.p");
  if (scales_.empty()) throw ValidationError("space.scales", "dimension must be at least 1");
  for (double s : scales_)
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("space.scales", "scales must be positive and finite");
}

FiniteNormedSpace FiniteNormedSpace::weighted(double p, const std::vector<double>& weights) {
  check_p(p, "space.p");
  if (std::isinf(p)) throw ValidationError("space.p", "weights need a finite p");
  std::vector<double> s;
  for (double w : weights) {
    if (!(w > 0.0)) throw ValidationError("space.weights", "weights must be positive");
    s.push_back(std::pow(w, -1.0 / p));
  }
  return FiniteNormedSpace(p, std::move(s));
}

bool FiniteNormedSpace::hilbert() const {
  return p_ == 2.0 && std::all_of(scales_.begin(), scales_.end(), [](double s) { return s == 1.0; });
}

double FiniteNormedSpace::norm(const ComplexVector& x) const {
  if (x.size() != dim()) throw ValidationError("vector", "dimension does not match the space");
  if (std::isinf(p_)) {
    double m = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) m = std::max(m, std::abs(x(j)) / scales_[j]);
    return m;
  }
  if (p_ == 2.0) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) s += std::norm(x(j)) / (scales_[j] * scales_[j]);
    return std::sqrt(s);
  }
  double s = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) s += std::pow(std::abs(x(j)) / scales_[j], p_);
  return std::pow(s, 1.0 / p_);
}

FiniteNormedSpace FiniteNormedSpace::dual() const {
  const double q = std::isinf(p_) ? 1.0 : (p_ == 1.0 ? kInfP : p_ / (p_ - 1.0));
  std::vector<double> s;
  for (double v : scales_) s.push_back(1.0 / v);
  return FiniteNormedSpace(q, std::move(s));
}

ComplexVector FiniteNormedSpace::norming_functional(const ComplexVector& x) const {
  const double nx = norm(x);
  ComplexVector f = ComplexVector::Zero(x.size());
  if (nx == 0.0) return f;
  auto phase = [](cplx z) { return z == 0.0 ? cplx(0.0) : std::conj(z) / std::abs(z); };
  if (std::isinf(p_)) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < x.size(); ++j)
      if (std::abs(x(j)) / scales_[j] > std::abs(x(best)) / scales_[best]) best = j;
    f(best) = phase(x(best)) / scales_[best];
    return f;
  }
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double a = std::abs(x(j)) / scales_[j];
    f(j) = phase(x(j)) * std::pow(a, p_ - 1.0) / scales_[j] / std::pow(nx, p_ - 1.0);
  }
  return f;
}

json FiniteNormedSpace::to_json() const {
  json j;
  j["kind"] = "lp";
  if (std::isinf(p_))
    j["p"] = "inf";
  else
    j["p"] = p_;
  j["m"] = dim();
  if (!std::all_of(scales_.begin(), scales_.end(), [](double s) { return s == 1.0; })) j["scales"] = scales_;
  return j;
}

FiniteNormedSpace FiniteNormedSpace::from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  if (!j.contains("p")) throw ValidationError(path + ".p", "missing");
  double p;
  if (j["p"].is_string() && j["p"].get<std::string>() == "inf")
    p = kInfP;
  else if (j["p"].is_number())
    p = j["p"].get<double>();
  else
    throw ValidationError(path + ".p", "expected a number or \"inf\"");
  if (j.contains("weights")) {
    if (!j["weights"].is_array()) throw ValidationError(path + ".weights", "expected an array");
    return weighted(p, j["weights"].get<std::vector<double>>());
  }
  if (j.contains("scales")) {
    if (!j["scales"].is_array()) throw ValidationError(path + ".scales", "expected an array");
    return FiniteNormedSpace(p, j["scales"].get<std::vector<double>>());
  }
  if (!j.contains("m") || !j["m"].is_number_integer()) throw ValidationError(path + ".m", "missing or not an integer");
  return FiniteNormedSpace(j["m"].get<Eigen::Index>(), p);
}

double norm_axiom_violation(const FiniteNormedSpace& X, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const ComplexVector x = gaussian(X.dim(), rng), y = gaussian(X.dim(), rng);
    const cplx c = gaussian(1, rng)(0);
    const double nx = X.norm(x), ny = X.norm(y);
    worst = std::max(worst, std::abs(X.norm(c * x) - std::abs(c) * nx) / (std::abs(c) * nx));
    worst = std::max(worst, (X.norm(x + y) - nx - ny) / (nx + ny));
    if (!(nx > 0.0)) worst = std::max(worst, 1.0);
  }
  return worst;
}

// ---------------------------------------------------------------- families

IndexedFamily::IndexedFamily(std::size_t d_, Eigen::Index n_, ComplexMatrix vectors)
    : d(d_), n(n_), x(std::move(vectors)) {
  if (d < 1) throw ValidationError("family.d", "arity must be at least 1");
  if (n < 1) throw ValidationError("family.n", "index range must be at least 1");
  if (static_cast<double>(x.cols()) != std::pow(static_cast<double>(n), static_cast<double>(d)))
    throw ValidationError("family.vectors", "expected n^d vectors");
  if (!x.allFinite()) throw ValidationError("family.vectors", "non-finite entry");
}

IndexedFamily IndexedFamily::random(std::size_t d, Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto count = static_cast<Eigen::Index>(std::pow(n, d));
  ComplexMatrix x(m, count);
  for (Eigen::Index c = 0; c < count; ++c) x.col(c) = gaussian(m, rng);
  return IndexedFamily(d, n, std::move(x));
}

IndexedFamily IndexedFamily::scaled(const ComplexVector& a) const {
  if (a.size() != count()) throw ValidationError("coefficients", "expected one coefficient per vector");
  return IndexedFamily(d, n, x * a.asDiagonal());
}

json IndexedFamily::to_json() const {
  json j;
  j["d"] = d;
  j["n"] = n;
  j["m"] = dim();
  json v = json::array();
  for (Eigen::Index c = 0; c < count(); ++c) v.push_back(vector_json(x.col(c)));
  j["vectors"] = std::move(v);
  return j;
}

IndexedFamily IndexedFamily::from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  for (const char* key : {"d", "n"})
    if (!j.contains(key) || !j[key].is_number_integer())
      throw ValidationError(path + "." + key, "missing or not an integer");
  if (!j.contains("vectors") || !j["vectors"].is_array() || j["vectors"].empty())
    throw ValidationError(path + ".vectors", "missing or empty");
  const auto& v = j["vectors"];
  const auto m = static_cast<Eigen::Index>(v[0].size());
  ComplexMatrix x(m, static_cast<Eigen::Index>(v.size()));
  for (std::size_t c = 0; c < v.size(); ++c) {
    const std::string cp = path + ".vectors[" + std::to_string(c) + "]";
    if (!v[c].is_array() || static_cast<Eigen::Index>(v[c].size()) != m)
      throw ValidationError(cp, "expected " + std::to_string(m) + " entries");
    for (Eigen::Index r = 0; r < m; ++r)
      x(r, static_cast<Eigen::Index>(c)) = complex_from_json(v[c][r], cp + "[" + std::to_string(r) + "]");
  }
  return IndexedFamily(j["d"].get<std::size_t>(), j["n"].get<Eigen::Index>(), std::move(x));
}

// ---------------------------------------------------------------- N_d

json RadNorm::to_json() const {
  json j;
  j["value"] = value;
  j["mode"] = exact ? "exhaustive" : "montecarlo";
  j["patterns"] = patterns;
  j["mean_square"] = mean_square;
  if (!exact) {
    j["sigma_square"] = sigma_square;
    j["band"] = json::array({band_lo, band_hi});
  }
  return j;
}

RadNorm rad_norm(const IndexedFamily& f, const FiniteNormedSpace& X, const RadOptions& opts) {
  if (f.dim() != X.dim()) throw ValidationError("family", "vector dimension does not match the space");
  const std::size_t bits = f.sign_bits();
  RadNorm r;
  if (opts.mode == RadMode::exhaustive) {
    if (bits > opts.max_sign_bits)
      throw GuardError("exhaustive N_d needs " + std::to_string(bits) + " sign bits, limit " +
                       std::to_string(opts.max_sign_bits));
    // Flipping every sign of the first copy negates the sum, so bit 0 is fixed.
    const std::uint64_t half = std::uint64_t{1} << (bits - 1);
    const std::size_t chunks = static_cast<std::size_t>(std::min<std::uint64_t>(kChunks, half));
    const auto partial = parallel_map<double>(chunks, [&](std::size_t c) {
      const std::uint64_t lo = half * c / chunks, hi = half * (c + 1) / chunks;
      Eigen::VectorXd coef;
      std::vector<std::uint64_t> words(1);
      double s = 0.0;
      for (std::uint64_t k = lo; k < hi; ++k) {
        words[0] = k << 1;
        chaos_coefficients(words, f.d, f.n, coef);
        const double v = X.norm(f.x * coef.cast<cplx>());
        s += v * v;
      }
      return s;
    });
    double total = 0.0;
    for (double s : partial) total += s;
    r.mean_square = total / static_cast<double>(half);
    r.value = std::sqrt(r.mean_square);
    r.band_lo = r.band_hi = r.value;
    r.patterns = static_cast<std::size_t>(half) * 2;
    r.exact = true;
    return r;
  }

  if (opts.samples < 2) throw ValidationError("samples", "Monte Carlo needs at least 2 samples");
  const std::size_t chunks = std::min(kChunks, opts.samples);
  const auto partial = parallel_map<std::pair<double, double>>(chunks, [&](std::size_t c) {
    const std::size_t lo = opts.samples * c / chunks, hi = opts.samples * (c + 1) / chunks;
    std::seed_seq seq{opts.seed, static_cast<std::uint64_t>(c)};
    std::mt19937_64 rng(seq);
    Eigen::VectorXd coef;
    double s1 = 0.0, s2 = 0.0;
    std::vector<std::uint64_t> words((bits + 63) / 64);
    for (std::size_t k = lo; k < hi; ++k) {
      for (auto& w : words) w = rng();
      chaos_coefficients(words, f.d, f.n, coef);
      const double v = X.norm(f.x * coef.cast<cplx>());
      s1 += v * v;
      s2 += v * v * v * v;
    }
    return std::make_pair(s1, s2);
  });
  double s1 = 0.0, s2 = 0.0;
  for (auto [a, b] : partial) s1 += a, s2 += b;
  const double N = static_cast<double>(opts.samples);
  r.mean_square = s1 / N;
  const double var = std::max(0.0, (s2 / N - r.mean_square * r.mean_square) * N / (N - 1.0));
  r.sigma_square = std::sqrt(var / N);
  r.value = std::sqrt(r.mean_square);
  r.band_lo = std::sqrt(std::max(0.0, r.mean_square - 3 * r.sigma_square));
  r.band_hi = std::sqrt(r.mean_square + 3 * r.sigma_square);
  r.patterns = opts.samples;
  return r;
}

double khintchine_constant(double p, std::size_t d) {
  check_p(p, "p");
  const double dd = static_cast<double>(d);
  if (std::isinf(p)) return kInfP;
  if (p >= 2.0) return std::pow(p - 1.0, dd / 2.0);
  return std::pow(3.0, dd * (2.0 - p) / p);
}

double lattice_square_function(const IndexedFamily& f, const FiniteNormedSpace& X) {
  if (f.dim() != X.dim()) throw ValidationError("family", "vector dimension does not match the space");
  const ComplexVector s = f.x.cwiseAbs2().rowwise().sum().cwiseSqrt().cast<cplx>();
  return X.norm(s);
}

json SquareFunctionReport::to_json() const {
  json j;
  j["square_function"] = square_function;
  j["N_d"] = rad;
  j["ratio"] = ratio;
  j["C_K"] = C_K;
  j["within"] = within;
  return j;
}

SquareFunctionReport square_function_report(const IndexedFamily& f, const FiniteNormedSpace& X) {
  SquareFunctionReport r;
  r.square_function = lattice_square_function(f, X);
  RadOptions o;
  if (f.sign_bits() > o.max_sign_bits) o.mode = RadMode::montecarlo;
  r.rad = rad_norm(f, X, o).value;
  r.ratio = r.square_function > 0.0 ? r.rad / r.square_function : 1.0;
  r.C_K = khintchine_constant(X.p(), f.d);
  r.within = r.ratio >= 1.0 / r.C_K - 1e-12 && r.ratio <= r.C_K + 1e-12;
  return r;
}

// ---------------------------------------------------------------- probes

json ProbeResult::to_json() const {
  json j;
  j["C_hat"] = C_hat;
  j["trials"] = trials;
  j["d"] = d;
  j["n"] = n;
  j["estimate"] = "finite-section lower bound from random search";
  j["witness"] = witness;
  return j;
}

ProbeResult alpha_probe(const FiniteNormedSpace& X, Eigen::Index n, int trials, std::uint64_t seed) {
  if (n < 1 || n > 4) throw GuardError("alpha probe supports 1 ≤ n ≤ 4");
  if (trials < 1) throw ValidationError("trials", "must be positive");
  std::mt19937_64 rng(seed);
  ProbeResult out;
  out.trials = trials;
  out.d = 2;
  out.n = n;
  const Eigen::Index count = n * n;
  auto ratio = [&](const IndexedFamily& f, const ComplexVector& a) {
    const double base = exact_nd(f, X);
    const double sup = a.cwiseAbs().maxCoeff();
    if (base == 0.0 || sup == 0.0) return 0.0;
    return exact_nd(f.scaled(a), X) / (sup * base);
  };
  for (int t = 0; t < trials; ++t) {
    const auto f = random_family(2, n, X.dim(), rng);
    ComplexVector a = t == 0 ? ComplexVector::Ones(count).eval() : random_coefficients(count, rng);
    double best = ratio(f, a);
    if (t > 0) {
      // Single-entry sign flips.
      for (Eigen::Index i = 0; i < count; ++i) {
        a(i) = -a(i);
        const double v = ratio(f, a);
        if (v > best)
          best = v;
        else
          a(i) = -a(i);
      }
    }
    if (best > out.C_hat || t == 0) {
      out.C_hat = std::max(out.C_hat, best);
      out.witness = json{{"trial", t}, {"a", vector_json(a)}, {"x", f.to_json()}, {"ratio", best}};
    }
  }
  return out;
}

ProbeResult Ad_probe(const FiniteNormedSpace& X, std::size_t d, Eigen::Index n, int trials, std::uint64_t seed) {
  if (d < 1) throw ValidationError("d", "must be at least 1");
  if (d * static_cast<std::size_t>(n) > RadOptions{}.max_sign_bits)
    throw GuardError("A_d probe needs n·d within the exhaustive guard");
  if (trials < 1) throw ValidationError("trials", "must be positive");
  const auto Xs = X.dual();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ProbeResult out;
  out.trials = trials;
  out.d = d;
  out.n = n;
  for (int t = 0; t < trials; ++t) {
    const auto f = random_family(d, n, X.dim(), rng);
    const auto count = f.count();
    ComplexMatrix xs(X.dim(), count);
    const bool aligned = t == 0 || (rng() % 2 == 0);
    for (Eigen::Index c = 0; c < count; ++c) {
      if (aligned) {
        const double scale = t == 0 ? X.norm(f.x.col(c)) : X.norm(f.x.col(c)) * std::exp(u(rng) - 0.5);
        xs.col(c) = scale * X.norming_functional(f.x.col(c));
      } else {
        xs.col(c) = gaussian(X.dim(), rng);
      }
    }
    const IndexedFamily fs(d, n, xs);
    ComplexVector a(count);
    for (Eigen::Index c = 0; c < count; ++c) {
      const cplx pair = (xs.col(c).transpose() * f.x.col(c))(0);
      if (t == 0)
        a(c) = 1.0;
      else if (rng() % 2 == 0)
        a(c) = pair == 0.0 ? cplx(1.0) : std::conj(pair) / std::abs(pair);
      else
        a(c) = std::polar(std::sqrt(u(rng)), 2 * kPi * u(rng));
    }
    cplx num = 0.0;
    for (Eigen::Index c = 0; c < count; ++c) num += a(c) * (xs.col(c).transpose() * f.x.col(c))(0);
    const double den = a.cwiseAbs().maxCoeff() * exact_nd(f, X) * exact_nd(fs, Xs);
    const double ratio = den > 0.0 ? std::abs(num) / den : 0.0;
    if (ratio > out.C_hat || t == 0) {
      out.C_hat = std::max(out.C_hat, ratio);
      out.witness = json{{"trial", t}, {"a", vector_json(a)}, {"x", f.to_json()}, {"x_star", fs.to_json()},
                         {"ratio", ratio}};
    }
  }
  return out;
}

}  // namespace hinf::rad
