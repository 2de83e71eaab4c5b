#include "hinf/funcalc.hpp"

#include <cmath>
#include <limits>

namespace hinf::funcalc {

namespace {

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

json to_json(const LimitOptions& o) {
  return {{"first", o.first}, {"ratio", o.ratio}, {"count", o.count}, {"tol", o.tol}};
}

cplx vertex_point(CalculusKind kind) { return kind == CalculusKind::ritt ? 1.0 : 0.0; }
cplx inactive_fill(CalculusKind kind) { return kind == CalculusKind::ritt ? 0.0 : 1.0; }

LimitResult extrapolate(const std::vector<cplx>& seq) {
  LimitResult best{seq.empty() ? cplx(0.0) : seq.back(), std::numeric_limits<double>::infinity()};
  if (seq.size() < 2) return best;

  auto consider = [&](const std::vector<cplx>& col) {
    for (std::size_t j = 1; j < col.size(); ++j) {
      if (!finite(col[j]) || !finite(col[j - 1])) continue;
      double err = std::abs(col[j] - col[j - 1]);
      if (j >= 2) {
        if (!finite(col[j - 2])) continue;
        err += std::abs(col[j - 1] - col[j - 2]);
      } else {
        err *= 2.0;
      }
      if (err < best.error_estimate) best = {col[j], err};
    }
  };

  std::vector<cplx> prev(seq.size() + 1, 0.0);
  std::vector<cplx> cur = seq;
  consider(cur);
  for (std::size_t k = 1; cur.size() >= 2; ++k) {
    std::vector<cplx> next(cur.size() - 1);
    for (std::size_t j = 0; j + 1 < cur.size(); ++j) {
      const cplx diff = cur[j + 1] - cur[j];
      if (diff == 0.0) {
        // Column already stationary: its common value is the limit.
        if (k % 2 == 1 && finite(cur[j])) {
          best = {cur[j + 1], 0.0};
          return best;
        }
        next[j] = cplx(std::numeric_limits<double>::infinity(), 0.0);
      } else {
        next[j] = prev[j + 1] + 1.0 / diff;
      }
    }
    if (k % 2 == 0) consider(next);
    prev = std::move(cur);
    cur = std::move(next);
  }
  return best;
}

LimitResult vertex_limit(const std::function<cplx(cplx)>& g, CalculusKind kind, const LimitOptions& opts) {
  std::vector<cplx> seq;
  double eps = opts.first;
  for (int k = 0; k < opts.count; ++k, eps *= opts.ratio)
    seq.push_back(g(kind == CalculusKind::ritt ? cplx(1.0 - eps) : cplx(eps)));
  auto res = extrapolate(seq);
  if (!(res.error_estimate <= opts.tol * std::max(1.0, std::abs(res.value))))
    throw LimitDivergenceError("limit at the distinguished point did not settle: spread " +
                               std::to_string(res.error_estimate));
  return res;
}

cplx frozen_value(const Evaluator& f, std::vector<cplx> point, VarSet frozen, CalculusKind kind,
                  const LimitOptions& opts) {
  if (frozen.empty()) return f(point);
  const auto idx = frozen.indices();
  const std::size_t v = idx.front();
  const VarSet rest = frozen.without(v);
  return vertex_limit(
             [&](cplx z) {
               point[v] = z;
               return frozen_value(f, point, rest, kind, opts);
             },
             kind, opts)
      .value;
}

}  // namespace hinf::funcalc
