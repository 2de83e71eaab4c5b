#pragma once

#include "hinf/core.hpp"

#include <json.hpp>

namespace hinf {

using json = nlohmann::ordered_json;

json complex_to_json(cplx z);
cplx complex_from_json(const json& j, const std::string& path);

// {"n": n, "entries": [[[re, im], ...], ...]} row-major.
json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const json& j, const std::string& path = "matrix");

// Shortest round-trip formatting keeps reports byte-stable.
std::string dump_report(const json& j);

}  // namespace hinf
