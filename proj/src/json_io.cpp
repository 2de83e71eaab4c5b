#include "hinf/json_io.hpp"

#include <cmath>

namespace hinf {

json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx complex_from_json(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ValidationError(path, "expected a number or [re, im]");
  cplx z{j[0].get<double>(), j[1].get<double>()};
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw ValidationError(path, "entry is not finite");
  return z;
}

json matrix_to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  json out;
  out["n"] = m.rows();
  if (m.rows() != m.cols()) out["cols"] = m.cols();
  out["entries"] = std::move(rows);
  return out;
}

ComplexMatrix matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "expected an object with \"n\" and \"entries\"");
  if (!j.contains("n") || !j["n"].is_number_integer())
    throw ValidationError(path + ".n", "missing or not an integer");
  const auto n = j["n"].get<long long>();
  if (n < 1) throw ValidationError(path + ".n", "dimension must be at least 1");
  long long cols = n;
  if (j.contains("cols")) {
    if (!j["cols"].is_number_integer() || j["cols"].get<long long>() < 1)
      throw ValidationError(path + ".cols", "must be a positive integer");
    cols = j["cols"].get<long long>();
  }
  if (!j.contains("entries") || !j["entries"].is_array())
    throw ValidationError(path + ".entries", "missing or not an array");
  const auto& rows = j["entries"];
  if (static_cast<long long>(rows.size()) != n)
    throw ValidationError(path + ".entries", "expected " + std::to_string(n) + " rows, got " +
                                                 std::to_string(rows.size()));
  ComplexMatrix m(n, cols);
  for (long long r = 0; r < n; ++r) {
    const std::string rpath = path + ".entries[" + std::to_string(r) + "]";
    if (!rows[r].is_array() || static_cast<long long>(rows[r].size()) != cols)
      throw ValidationError(rpath, "expected a row of " + std::to_string(cols) + " entries");
    for (long long c = 0; c < cols; ++c)
      m(r, c) = complex_from_json(rows[r][c], rpath + "[" + std::to_string(c) + "]");
  }
  return m;
}

std::string dump_report(const json& j) { return j.dump(2) + "\n"; }

}  // namespace hinf
