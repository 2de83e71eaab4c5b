#include "hinf/catalog.hpp"
#include "hinf/dilation.hpp"
#include "hinf/franksmcintosh.hpp"
#include "hinf/operators.hpp"
#include "hinf/rademacher.hpp"
#include "hinf/scenario.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace hinf;

namespace {

enum Exit { kPass = 0, kCheckFailure = 1, kUsage = 2 };

struct Global {
  std::string output;
  bool timings = false;
  int threads = 0;
};

json read_json(const std::string& file, const std::string& what) {
  std::string text;
  if (file == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    text = ss.str();
  } else {
    std::ifstream in(file);
    if (!in) throw ValidationError(what, "cannot open \"" + file + "\"");
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(what, std::string("malformed JSON: ") + e.what());
  }
}

void emit(const Global& g, const json& report) {
  const std::string text = dump_report(report);
  if (g.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(g.output);
  if (!out) throw ValidationError("--output", "cannot write \"" + g.output + "\"");
  out << text;
}

std::vector<ComplexMatrix> matrices_from(const json& j, const std::string& path) {
  if (j.is_object() && j.contains("entries")) return {matrix_from_json(j, path)};
  if (!j.is_array() || j.empty()) throw ValidationError(path, "expected a matrix or a non-empty array of matrices");
  std::vector<ComplexMatrix> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(matrix_from_json(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

funcalc::Params parse_params(const std::vector<std::string>& kv) {
  funcalc::Params p;
  for (const auto& s : kv) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ValidationError("--param", "expected key=value, got \"" + s + "\"");
    try {
      p[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
    } catch (const std::exception&) {
      throw ValidationError("--param " + s.substr(0, eq), "value is not a number");
    }
  }
  return p;
}

// ---------------------------------------------------------------- classify

struct ClassifyArgs {
  std::string input;
  std::string kind = "ritt";
  int horizon = 256;
};

int run_classify(const Global& g, const ClassifyArgs& a) {
  const auto doc = read_json(a.input, "input");
  const json& src = doc.is_object() && doc.contains("matrices") ? doc["matrices"] : doc;
  const operators::CommutingTuple tuple(matrices_from(src, "matrices"));
  const auto kind = calculus_kind_from_string(a.kind);
  json members = json::array();
  bool pass = true;
  for (std::size_t i = 0; i < tuple.arity(); ++i) {
    if (kind == CalculusKind::ritt) {
      operators::RittOptions o;
      o.horizon = a.horizon;
      const auto r = operators::classify_ritt(tuple[i], o);
      pass = pass && r.verdict == operators::Verdict::ritt;
      members.push_back(r.to_json());
    } else {
      const auto r = operators::classify_sectorial(tuple[i]);
      pass = pass && r.verdict == operators::Verdict::sectorial;
      members.push_back(r.to_json());
    }
  }
  const auto comm = operators::commutator_check(tuple);
  pass = pass && comm.pass;
  json report;
  report["command"] = "classify";
  report["kind"] = a.kind;
  report["members"] = members;
  report["commutation"] = comm.to_json();
  report["tolerances"] = {{"commutation", comm.tol}, {"horizon", a.horizon}};
  report["pass"] = pass;
  emit(g, report);
  return pass ? kPass : kCheckFailure;
}

// ---------------------------------------------------------------- fcalc

struct FcalcArgs {
  std::string input;
  std::string matrices;
  std::string catalog;
  std::string polynomial;
  std::vector<std::string> params;
  std::vector<double> angles;
  std::string kind;
};

int run_fcalc(const Global& g, const FcalcArgs& a) {
  json doc;
  if (!a.input.empty()) {
    doc = read_json(a.input, "input");
    if (!doc.is_object()) throw ValidationError("input", "expected an object");
  } else {
    if (a.matrices.empty()) throw ValidationError("--matrices", "required without --input");
    doc["matrices"] = read_json(a.matrices, "--matrices");
    if (doc["matrices"].is_object() && doc["matrices"].contains("matrices"))
      doc["matrices"] = json(doc["matrices"]["matrices"]);
    if (doc["matrices"].is_object()) doc["matrices"] = json::array({doc["matrices"]});
    if (!a.catalog.empty() == !a.polynomial.empty())
      throw ValidationError("--catalog", "give exactly one of --catalog and --polynomial");
    if (!a.catalog.empty()) {
      json p = json::object();
      for (const auto& [k, v] : parse_params(a.params)) p[k] = v;
      doc["function"] = {{"catalog", a.catalog}, {"params", p}};
    } else {
      doc["function"] = {{"polynomial", read_json(a.polynomial, "--polynomial")}};
    }
  }
  if (!a.angles.empty()) doc["angles"] = a.angles;
  if (!a.kind.empty()) doc["kind"] = a.kind;
  if (!doc.contains("kind") && doc.contains("function") && doc["function"].contains("catalog") &&
      doc["function"]["catalog"].is_string()) {
    const auto id = doc["function"]["catalog"].get<std::string>();
    if (id.rfind("sect/", 0) == 0) doc["kind"] = "sectorial";
  }
  if (!doc.contains("name")) doc["name"] = "fcalc";
  if (!doc.contains("checks")) doc["checks"] = json::array({"commutation"});
  const auto s = scenario::Scenario::from_json(doc);

  const auto t0 = std::chrono::steady_clock::now();
  const auto tuple = scenario::build_tuple(s);
  const auto f = scenario::build_function(s, tuple.arity());
  operators::require_commuting(tuple);
  funcalc::EvalReport er;
  const ComplexMatrix fT = funcalc::eval_h01(tuple, f, s.kind, s.quadrature, &er);
  json report;
  report["command"] = "fcalc";
  report["input"] = s.to_json();
  report["domain_angles"] = f.domain_angles;
  report["tolerances"] = {{"quadrature", funcalc::to_json(s.quadrature)},
                          {"limits", funcalc::to_json(f.limits)},
                          {"commutation", tuple.commutation_tol()}};
  report["result"] = matrix_to_json(fT);
  report["convergence"] = er.to_json();
  report["pass"] = er.converged;
  if (g.timings)
    report["timings"] = {{"total", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
  emit(g, report);
  return er.converged ? kPass : kCheckFailure;
}

// ---------------------------------------------------------------- fm-decompose

struct FmArgs {
  std::string catalog;
  std::vector<std::string> params;
  fm::FMOptions opts;
  double tol = 1e-4;
  int grid_points = 64;
  bool coefficients = false;
};

int run_fm(const Global& g, const FmArgs& a) {
  const auto& entry = [&]() -> const funcalc::CatalogEntry& {
    try {
      return funcalc::catalog_entry(a.catalog);
    } catch (const std::exception&) {
      throw ValidationError("--catalog", "unknown catalog id \"" + a.catalog + "\"");
    }
  }();
  if (entry.kind != CalculusKind::ritt) throw ValidationError("--catalog", "decompositions need a Ritt-kind function");
  if (entry.arity > 2) throw GuardError("decompositions are limited to two variables");
  if (!(0.0 < a.opts.alpha && a.opts.alpha < a.opts.mu && a.opts.mu < kPi / 2))
    throw ValidationError("--alpha/--mu", "need 0 < α < μ < π/2");
  const std::vector<double> angles(entry.arity, a.opts.mu);
  const auto f = funcalc::make_catalog_function(a.catalog, angles, parse_params(a.params));

  const auto t0 = std::chrono::steady_clock::now();
  const auto geom = fm::build_geometry(a.opts);
  json report;
  report["command"] = "fm-decompose";
  report["function"] = {{"catalog", a.catalog}, {"formula", entry.formula}, {"arity", entry.arity}};
  report["geometry"] = geom->to_json();
  double err = 0.0, ratio = 0.0;
  if (entry.arity == 1) {
    const auto h = [&f](cplx z) {
      const cplx w[] = {z};
      return f(w);
    };
    const auto d = fm::decompose_1var(geom, h);
    const auto grid = fm::zeta_grid(a.opts.alpha, a.grid_points);
    err = fm::reconstruction_error(d, h, grid);
    ratio = d.max_bound_ratio;
    json dj = d.to_json();
    if (!a.coefficients) dj.erase("coefficients");
    report["decomposition"] = dj;
    report["grid_size"] = grid.size();
  } else {
    const auto t = fm::decompose_dvar({geom, geom}, [&f](std::span<const cplx> z) { return f(z); });
    const auto axis = fm::zeta_grid(a.opts.alpha, std::max(4, a.grid_points / 8));
    const auto rec = fm::reconstruct_dvar_grid(t, {axis, axis});
    for (std::size_t i = 0; i < axis.size(); ++i)
      for (std::size_t k = 0; k < axis.size(); ++k) {
        const cplx z[] = {axis[i], axis[k]};
        err = std::max(err, std::abs(rec[i * axis.size() + k] - f(z)));
      }
    ratio = t.max_bound_ratio;
    json tj = t.to_json();
    if (!a.coefficients) tj.erase("coefficients");
    report["decomposition"] = tj;
    report["grid_size"] = axis.size() * axis.size();
  }
  const double bound_tol = 1e-9;
  const bool pass = err <= a.tol && ratio <= 1.0 + bound_tol;
  report["checks"] = json::array({{{"name", "reconstruction"}, {"pass", err <= a.tol}, {"residual", err}, {"tol", a.tol}},
                                  {{"name", "coefficient_bound"},
                                   {"pass", ratio <= 1.0 + bound_tol},
                                   {"residual", ratio},
                                   {"tol", 1.0 + bound_tol}}});
  report["tolerances"] = {{"reconstruction", a.tol}, {"coefficient_bound", 1.0 + bound_tol}};
  report["pass"] = pass;
  if (g.timings)
    report["timings"] = {{"total", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
  emit(g, report);
  return pass ? kPass : kCheckFailure;
}

// ---------------------------------------------------------------- dilate

int horizon_of(const json& j, const std::string& path) {
  if (!j.contains("N")) throw ValidationError(path + ".N", "required by this construction");
  if (!j["N"].is_number_integer() || j["N"].get<int>() < 1) throw ValidationError(path + ".N", "must be a positive integer");
  return j["N"].get<int>();
}

dilation::DilationTriple triple_from(const json& j, const std::string& path, const ComplexMatrix& T,
                                     const ComplexMatrix& W) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  if (!j.contains("construct")) return dilation::DilationTriple::from_json(j, path);
  if (!j["construct"].is_string()) throw ValidationError(path + ".construct", "must be a string");
  const auto c = j["construct"].get<std::string>();
  if (c == "companion") return dilation::companion_triple(T);
  if (c == "trivial") return dilation::trivial_triple(T);
  if (c == "shift") return dilation::shift_triple(T, horizon_of(j, path));
  if (c == "spectral") return dilation::spectral_triple(T, W);
  if (c == "spectral_unitary") return dilation::spectral_unitary_triple(T, W, horizon_of(j, path));
  throw ValidationError(path + ".construct",
                        "must be companion, trivial, shift, spectral or spectral_unitary, got \"" + c + "\"");
}

struct DilateArgs {
  std::string input;
  bool include_matrices = false;
};

int run_dilate(const Global& g, const DilateArgs& a) {
  const auto doc = read_json(a.input, "input");
  if (!doc.is_object()) throw ValidationError("input", "expected an object");
  if (!doc.contains("matrices")) throw ValidationError("matrices", "required");
  const operators::CommutingTuple tuple(matrices_from(doc["matrices"], "matrices"));
  const ComplexMatrix W = dilation::joint_eigenbasis(tuple);
  if (!doc.contains("triples") || !doc["triples"].is_array()) throw ValidationError("triples", "must be an array");
  std::vector<dilation::DilationTriple> triples;
  for (std::size_t k = 0; k < doc["triples"].size(); ++k) {
    if (k >= tuple.arity()) throw ValidationError("triples", "more triples than operators");
    triples.push_back(triple_from(doc["triples"][k], "triples[" + std::to_string(k) + "]", tuple[k], W));
  }
  std::optional<dilation::TailSystem> tail;
  if (doc.contains("tail") && !doc["tail"].is_null()) {
    const auto& t = doc["tail"];
    std::vector<ComplexMatrix> rest(tuple.matrices().begin() + static_cast<std::ptrdiff_t>(triples.size()),
                                    tuple.matrices().end());
    if (t.is_object() && t.contains("construct")) {
      const auto c = t["construct"].is_string() ? t["construct"].get<std::string>() : "";
      if (c == "trivial")
        tail = dilation::trivial_tail(rest);
      else if (c == "schaffer")
        tail = dilation::schaffer_tail(rest, W, horizon_of(t, "tail"));
      else
        throw ValidationError("tail.construct", "must be trivial or schaffer");
    } else {
      tail = dilation::TailSystem::from_json(t, "tail");
    }
  }
  dilation::AuditOptions opts;
  if (doc.contains("audit")) {
    const auto& au = doc["audit"];
    if (!au.is_object()) throw ValidationError("audit", "expected an object");
    for (const auto& [key, value] : au.items()) {
      if (key == "horizon" && value.is_number_integer() && value.get<int>() >= 0)
        opts.horizon = value.get<int>();
      else if (key == "tol" && value.is_number() && value.get<double>() > 0)
        opts.tol = value.get<double>();
      else if (key == "commute_tol" && value.is_number() && value.get<double>() > 0)
        opts.commute_tol = value.get<double>();
      else if (key == "seed" && value.is_number_unsigned())
        opts.seed = value.get<std::uint64_t>();
      else
        throw ValidationError("audit." + key, "unknown field or invalid value");
    }
  }
  json report;
  report["command"] = "dilate";
  report["tolerances"] = dilation::to_json(opts);
  try {
    const auto combined = dilation::combine_dilations(tuple, triples, tail, opts);
    report["combined"] = combined.to_json(a.include_matrices || doc.value("include_matrices", false));
    report["pass"] = true;
    emit(g, report);
    return kPass;
  } catch (const AssumptionViolation& e) {
    report["error"] = {{"equation", e.equation()}, {"message", e.what()}};
    report["pass"] = false;
    emit(g, report);
    return kCheckFailure;
  }
}

// ---------------------------------------------------------------- rad-probe

struct RadArgs {
  std::string space;
  double p = 2.0;
  long m = 2;
  std::vector<double> weights;
  std::string probe = "alpha";
  long d = 2;
  long n = 2;
  int trials = 64;
  std::uint64_t seed = 1;
  std::string family;
  std::size_t samples = 20000;
};

int run_rad(const Global& g, const RadArgs& a) {
  const rad::FiniteNormedSpace X = [&] {
    if (!a.space.empty()) return rad::FiniteNormedSpace::from_json(read_json(a.space, "--space"), "space");
    if (!a.weights.empty()) return rad::FiniteNormedSpace::weighted(a.p, a.weights);
    return rad::FiniteNormedSpace(a.m, a.p);
  }();
  json report;
  report["command"] = "rad-probe";
  report["space"] = X.to_json();
  report["label"] = "finite-section estimates";
  json checks = json::array();
  bool pass = true;
  if (!a.family.empty()) {
    const auto fam = rad::IndexedFamily::from_json(read_json(a.family, "--family"), "family");
    if (fam.dim() != X.dim()) throw ValidationError("family", "vector length differs from the space dimension");
    rad::RadOptions ro;
    ro.seed = a.seed;
    ro.samples = a.samples;
    ro.mode = fam.sign_bits() <= ro.max_sign_bits ? rad::RadMode::exhaustive : rad::RadMode::montecarlo;
    report["rad_norm"] = rad::rad_norm(fam, X, ro).to_json();
  }
  if (a.probe != "none") {
    rad::ProbeResult r;
    if (a.probe == "alpha")
      r = rad::alpha_probe(X, a.n, a.trials, a.seed);
    else if (a.probe == "Ad")
      r = rad::Ad_probe(X, static_cast<std::size_t>(a.d), a.n, a.trials, a.seed);
    else
      throw ValidationError("--probe", "must be alpha, Ad or none");
    report["probe"] = r.to_json();
    if (X.hilbert()) {
      const double tol = 1e-9;
      const double res = std::abs(r.C_hat - 1.0);
      checks.push_back({{"name", "hilbert_constant_one"}, {"pass", res <= tol}, {"residual", res}, {"tol", tol}});
      pass = pass && res <= tol;
    }
  }
  report["checks"] = checks;
  report["tolerances"] = {{"hilbert_constant", 1e-9}, {"montecarlo_band_sigmas", 3}};
  report["pass"] = pass;
  emit(g, report);
  return pass ? kPass : kCheckFailure;
}

// ---------------------------------------------------------------- verify-all

struct VerifyArgs {
  std::vector<std::string> names;
  std::vector<std::string> files;
};

int run_verify(const Global& g, const VerifyArgs& a) {
  std::vector<scenario::Scenario> list;
  for (const auto& n : a.names) list.push_back(scenario::builtin_scenario(n));
  for (const auto& f : a.files) {
    const auto doc = read_json(f, f);
    if (doc.is_array()) {
      for (const auto& s : doc) list.push_back(scenario::Scenario::from_json(s));
    } else {
      list.push_back(scenario::Scenario::from_json(doc));
    }
  }
  if (a.names.empty() && a.files.empty()) list = scenario::builtin_scenarios();
  json reports = json::array();
  json summary = json::array();
  bool pass = true;
  for (const auto& s : list) {
    auto r = scenario::run_scenario(s, {.timings = g.timings});
    const bool ok = r["pass"].get<bool>();
    pass = pass && ok;
    summary.push_back({{"name", s.name}, {"pass", ok}});
    reports.push_back(std::move(r));
  }
  json report;
  report["command"] = "verify-all";
  report["summary"] = summary;
  report["reports"] = reports;
  report["pass"] = pass;
  emit(g, report);
  return pass ? kPass : kCheckFailure;
}

int run_list(const Global& g) {
  json names = json::array();
  for (const auto& s : scenario::builtin_scenarios()) names.push_back(s.name);
  emit(g, {{"command", "list-catalog"},
           {"functions", funcalc::catalog_to_json()},
           {"scenarios", names},
           {"checks", scenario::known_checks()}});
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint H-infinity functional calculus toolkit"};
  app.require_subcommand(1);
  Global g;
  app.add_option("-o,--output", g.output, "Write the JSON report to a file");
  app.add_flag("--timings", g.timings, "Include wall-clock timings in reports");
  app.add_option("--threads", g.threads, "Worker threads (overrides HINF_THREADS)")->check(CLI::PositiveNumber);

  ClassifyArgs ca;
  auto* classify = app.add_subcommand("classify", "Estimate Ritt or sectorial type of each matrix");
  classify->add_option("input", ca.input, "Matrix or matrices JSON (- for stdin)")->required();
  classify->add_option("--kind", ca.kind)->check(CLI::IsMember({"ritt", "sectorial"}));
  classify->add_option("--horizon", ca.horizon)->check(CLI::PositiveNumber);

  FcalcArgs fa;
  auto* fcalc = app.add_subcommand("fcalc", "Evaluate f(T_1, ..., T_d) by the contour calculus");
  fcalc->add_option("--input", fa.input, "Scenario-style JSON with matrices, function, angles");
  fcalc->add_option("--matrices", fa.matrices, "Matrices JSON");
  fcalc->add_option("--catalog", fa.catalog, "Catalog function id");
  fcalc->add_option("--param", fa.params, "Catalog parameter key=value");
  fcalc->add_option("--polynomial", fa.polynomial, "Polynomial JSON");
  fcalc->add_option("--angles", fa.angles, "Domain angles")->delimiter(',');
  fcalc->add_option("--kind", fa.kind)->check(CLI::IsMember({"ritt", "sectorial"}));

  FmArgs fm;
  auto* fmd = app.add_subcommand("fm-decompose", "Franks-McIntosh decomposition of a catalog function");
  fmd->add_option("--catalog", fm.catalog)->required();
  fmd->add_option("--param", fm.params, "Catalog parameter key=value");
  fmd->add_option("--alpha", fm.opts.alpha);
  fmd->add_option("--mu", fm.opts.mu);
  fmd->add_option("--rho", fm.opts.rho)->check(CLI::Range(1.0001, 100.0));
  fmd->add_option("--kmax", fm.opts.Kmax)->check(CLI::PositiveNumber);
  fmd->add_option("--jmax", fm.opts.Jmax)->check(CLI::NonNegativeNumber);
  fmd->add_option("--tol", fm.tol, "Accepted sup-grid reconstruction error");
  fmd->add_option("--grid", fm.grid_points, "Boundary points of the zeta grid")->check(CLI::PositiveNumber);
  fmd->add_flag("--coefficients", fm.coefficients, "Include all coefficients");

  DilateArgs da;
  auto* dilate = app.add_subcommand("dilate", "Combine per-operator dilations and audit them");
  dilate->add_option("input", da.input, "Matrices, triples and tail JSON (- for stdin)")->required();
  dilate->add_flag("--matrices", da.include_matrices, "Include J and Q in the report");

  RadArgs ra;
  auto* radp = app.add_subcommand("rad-probe", "Rademacher averages and (alpha)/(A_d) probes");
  radp->add_option("--space", ra.space, "Space JSON");
  radp->add_option("--p", ra.p, "Exponent (inf allowed)");
  radp->add_option("--m", ra.m, "Dimension")->check(CLI::PositiveNumber);
  radp->add_option("--weights", ra.weights)->delimiter(',');
  radp->add_option("--probe", ra.probe)->check(CLI::IsMember({"alpha", "Ad", "none"}));
  radp->add_option("--d", ra.d)->check(CLI::PositiveNumber);
  radp->add_option("--n", ra.n)->check(CLI::PositiveNumber);
  radp->add_option("--trials", ra.trials)->check(CLI::PositiveNumber);
  radp->add_option("--seed", ra.seed);
  radp->add_option("--family", ra.family, "Indexed family JSON for N_d");
  radp->add_option("--samples", ra.samples)->check(CLI::PositiveNumber);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify-all", "Run builtin or given scenarios");
  verify->add_option("--scenario", va.names, "Builtin scenario name");
  verify->add_option("--file", va.files, "Scenario JSON file");

  auto* list = app.add_subcommand("list-catalog", "List catalog functions and builtin scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }
  if (g.threads > 0) setenv("HINF_THREADS", std::to_string(g.threads).c_str(), 1);

  try {
    if (classify->parsed()) return run_classify(g, ca);
    if (fcalc->parsed()) return run_fcalc(g, fa);
    if (fmd->parsed()) return run_fm(g, fm);
    if (dilate->parsed()) return run_dilate(g, da);
    if (radp->parsed()) return run_rad(g, ra);
    if (verify->parsed()) return run_verify(g, va);
    if (list->parsed()) return run_list(g);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const GuardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return kCheckFailure;
  }
  return kUsage;
}
