#pragma once

#include "hinf/funcalc.hpp"

#include <map>
#include <string>
#include <vector>

namespace hinf::funcalc {

using Params = std::map<std::string, double>;

struct CatalogEntry {
  std::string id;
  CalculusKind kind;
  std::size_t arity;
  std::string formula;
  Params defaults;
  // Single H∞₀ piece (no constant, one active set) versus a general H∞₀,₁ function.
  bool single_piece;
  std::function<H01Fn(const std::vector<double>& angles, const Params& params)> make;
};

const std::vector<CatalogEntry>& catalog();
const CatalogEntry& catalog_entry(const std::string& id);

H01Fn make_catalog_function(const std::string& id, const std::vector<double>& angles, const Params& params = {});
// Only for single-piece entries.
HoloFn make_catalog_holo(const std::string& id, const std::vector<double>& angles, const Params& params = {});

json catalog_to_json();

}  // namespace hinf::funcalc
