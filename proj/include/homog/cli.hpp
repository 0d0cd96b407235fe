#pragma once

// Command-line front end. Exit status: 0 success, 1 failed verification, 2 invalid input,
// 3 solver failure.

#include <charconv>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "homog/cell_tensor.hpp"
#include "homog/homogenize.hpp"
#include "homog/io.hpp"
#include "homog/verify.hpp"

#ifndef HOMOG_FIXTURE_DIR
#define HOMOG_FIXTURE_DIR "fixtures"
#endif

namespace homog::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitSolver = 3;

/// Accepts a decimal or a fraction "a/b".
inline double parse_number(const std::string& tok) {
  const auto slash = tok.find('/');
  auto one = [&](std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end || s.empty()) throw ValidationError("not a number: \"" + tok + "\"");
    return v;
  };
  if (slash == std::string::npos) return one(tok);
  const double den = one(std::string_view(tok).substr(slash + 1));
  if (den == 0.0) throw ValidationError("zero denominator in \"" + tok + "\"");
  return one(std::string_view(tok).substr(0, slash)) / den;
}

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string::npos ? text.size() : comma;
    std::string tok = text.substr(start, end - start);
    tok.erase(0, tok.find_first_not_of(' '));
    tok.erase(tok.find_last_not_of(' ') + 1);
    out.push_back(parse_number(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline Vec2 parse_xi(const std::string& text) {
  const auto v = parse_list(text);
  if (v.size() != 2) throw ValidationError("xi must be two comma-separated numbers");
  return {v[0], v[1]};
}

inline std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_list(text)) {
    if (v != std::floor(v) || v < 1 || v > 1e6) throw ValidationError("expected positive integers in \"" + text + "\"");
    out.push_back(int(v));
  }
  return out;
}

struct RunConfig {
  std::string geom;
  std::string xi = "1,0";
  int m = 32;
  std::string t_list = "1,2,4";
  int t = 2;
  std::string eps_list = "1/2,1/4,1/8";
  std::string lambdas = "0.5,1,2,4";
  double c = 1.0;
  double p = 1.0;
  double beta = 0.5;
  std::string betas;
  std::string out;
  std::string csv;
  std::string fixture;
  std::string fixture_dir = HOMOG_FIXTURE_DIR;
  int starts = 4;
  std::uint64_t seed = 0x5EED;
  bool regen = false;
  bool exact = false;
};

namespace detail {

inline CellOptions cell_options(const RunConfig& cfg) {
  if (cfg.starts < 1) throw ValidationError("--starts must be >= 1");
  CellOptions o;
  o.ms.starts = cfg.starts;
  o.ms.seed = cfg.seed;
  o.exact = cfg.exact;
  return o;
}

inline void emit(const RunConfig& cfg, const Json& j, std::ostream& out) {
  const std::string text = dump_json(j);
  if (cfg.out.empty()) out << text;
  else write_atomic(cfg.out, text);
}

inline void emit_csv(const RunConfig& cfg, const std::string& csv) {
  if (!cfg.csv.empty()) write_atomic(cfg.csv, csv);
}

inline Geometry geometry(const RunConfig& cfg) {
  if (cfg.geom.empty()) throw ValidationError("--geom is required");
  return load_geometry(cfg.geom);
}

inline void require_resolution(const Geometry& g, int m) {
  if (m < 4) throw ValidationError("--m must be >= 4");
  if (!resolution_ok(g, m)) throw ResolutionTooCoarse("--m too coarse: need m * delta >= 2");
}

inline int cell_tensor(const RunConfig& cfg, std::ostream& out) {
  const Geometry g = geometry(cfg);
  require_resolution(g, cfg.m);
  emit(cfg, to_json(effective_tensor(g, cfg.m), g), out);
  return kExitOk;
}

inline int fhom(const RunConfig& cfg, std::ostream& out) {
  const Geometry g = geometry(cfg);
  const Vec2 xi = parse_xi(cfg.xi);
  const auto ts = parse_int_list(cfg.t_list);
  require_resolution(g, cfg.m);
  const auto R = estimate_fhom(g, xi, ts, cfg.m, cell_options(cfg));
  emit_csv(cfg, trace_csv(R));
  emit(cfg, to_json(R), out);
  return kExitOk;
}

inline int probe(const RunConfig& cfg, std::ostream& out) {
  const Geometry g = geometry(cfg);
  const Vec2 xi = parse_xi(cfg.xi);
  const auto ls = parse_list(cfg.lambdas);
  require_resolution(g, cfg.m);
  emit(cfg, to_json(homogeneity_probe(g, xi, ls, cfg.t, cfg.m, cell_options(cfg))), out);
  return kExitOk;
}

inline int sweep(const RunConfig& cfg, std::ostream& out) {
  const Geometry g = geometry(cfg);
  const Vec2 xi = parse_xi(cfg.xi);
  const auto eps = parse_list(cfg.eps_list);
  for (double e : eps) eps_to_t(e);
  require_resolution(g, cfg.m);
  const auto S = regime_sweep(g, xi, RegimeSchedule{cfg.c, cfg.p}, eps, cfg.m, cfg.beta, cell_options(cfg));
  emit_csv(cfg, trace_csv(S));
  emit(cfg, to_json(S), out);
  return kExitOk;
}

inline int appendix(const RunConfig& cfg, std::ostream& out) {
  const Geometry g = geometry(cfg);
  const Vec2 xi = parse_xi(cfg.xi);
  std::vector<double> betas;
  if (cfg.betas.empty()) {
    if (!(g.length_F() > 0.0)) throw ValidationError("--beta-list is required when F is empty");
    for (double f : {0.5, 0.25, 0.125, 0.0625}) betas.push_back(f * g.length_F());
  } else {
    betas = parse_list(cfg.betas);
  }
  require_resolution(g, cfg.m);
  emit(cfg, to_json(appendix_verify(g, xi, betas, cfg.m, cell_options(cfg))), out);
  return kExitOk;
}

inline int oracle(const RunConfig& cfg, std::ostream& out) {
  if (cfg.fixture.empty()) throw ValidationError("--fixture is required");
  Fixture f = load_fixture(cfg.fixture);
  if (cfg.regen) {
    regenerate_expected(f);
    write_atomic(cfg.fixture, dump_json(fixture_to_json(f)));
    out << "regenerated " << f.expected.size() << " expectations in " << cfg.fixture << "\n";
    return kExitOk;
  }
  const Lattice lat = fixture_lattice(f);
  MinimizeOptions mo;
  mo.starts = cfg.starts;
  mo.seed = cfg.seed;
  Json rows = Json::array();
  bool ok = true;
  for (const auto& e : f.expected) {
    const MSSolution s = minimize(MSProblem{lat, f.xi, e.surface_weight}, mo);
    const double gap = s.breakdown.total - e.total;
    const bool match = std::abs(gap) <= 1e-9;
    ok = ok && match;
    rows.push_back(Json{{"surface_weight", e.surface_weight},
                        {"expected", e.total},
                        {"heuristic", s.breakdown.total},
                        {"gap", gap},
                        {"match", match}});
  }
  Json j;
  j["fixture"] = f.name;
  j["breakable"] = lat.breakable().size();
  j["rows"] = std::move(rows);
  j["ok"] = ok;
  emit(cfg, j, out);
  return ok ? kExitOk : kExitFailed;
}

inline int verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const VerifyResult r = verify_fixtures(cfg.fixture_dir);
  emit(cfg, r.report, out);
  err << "verify: " << r.passed << " passed, " << r.failed << " failed\n";
  return r.ok() ? kExitOk : kExitFailed;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Numerical homogenization of periodic media with brittle inclusions"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto geom_opts = [&](CLI::App* sc) {
    sc->add_option("--geom", cfg.geom, "geometry JSON file")->required();
    sc->add_option("--m", cfg.m, "nodes per unit cell and axis");
    sc->add_option("--out", cfg.out, "output JSON path (stdout when omitted)");
  };
  auto search_opts = [&](CLI::App* sc) {
    sc->add_option("--starts", cfg.starts, "multi-start count (>= 1)");
    sc->add_option("--seed", cfg.seed, "seed of the random starts");
    sc->add_flag("--exact", cfg.exact, "use exhaustive enumeration instead of the heuristic");
  };

  auto* ct = app.add_subcommand("cell-tensor", "effective tensor A0 of the perforated cell");
  geom_opts(ct);

  auto* fh = app.add_subcommand("fhom", "g(t) over a list of t and the f_hom sandwich");
  geom_opts(fh);
  search_opts(fh);
  fh->add_option("--xi", cfg.xi, "macroscopic gradient \"x,y\"");
  fh->add_option("--t", cfg.t_list, "strictly increasing t values \"1,2,4\"");
  fh->add_option("--csv", cfg.csv, "per-t trace CSV");

  auto* pr = app.add_subcommand("probe-homogeneity", "compare E(lambda xi) with lambda^2 E(xi)");
  geom_opts(pr);
  search_opts(pr);
  pr->add_option("--xi", cfg.xi, "base gradient \"x,y\"");
  pr->add_option("--lambda", cfg.lambdas, "lambda values");
  pr->add_option("--t", cfg.t, "cell size t");

  auto* sw = app.add_subcommand("sweep", "finite-eps regime sweep with alpha = c eps^p");
  geom_opts(sw);
  search_opts(sw);
  sw->add_option("--xi", cfg.xi, "macroscopic gradient \"x,y\"");
  sw->add_option("--eps", cfg.eps_list, "eps values of the form 1/t");
  sw->add_option("--c", cfg.c, "schedule prefactor");
  sw->add_option("--p", cfg.p, "schedule exponent");
  sw->add_option("--beta", cfg.beta, "bad-cell threshold");
  sw->add_option("--csv", cfg.csv, "per-eps trace CSV");

  auto* ap = app.add_subcommand("appendix", "crack-budget energy ratios on the unit cell");
  geom_opts(ap);
  search_opts(ap);
  ap->add_option("--xi", cfg.xi, "affine boundary slope \"x,y\"");
  ap->add_option("--beta-list", cfg.betas, "decreasing crack budgets (default: length_F times 1/2, 1/4, 1/8, 1/16)");

  auto* orc = app.add_subcommand("oracle", "check or regenerate an oracle fixture");
  orc->add_option("--fixture", cfg.fixture, "fixture JSON file")->required();
  orc->add_flag("--regen-oracle", cfg.regen, "rewrite expected totals from exhaustive enumeration");
  orc->add_option("--starts", cfg.starts, "multi-start count (>= 1)");
  orc->add_option("--seed", cfg.seed, "seed of the random starts");
  orc->add_option("--out", cfg.out, "output JSON path (stdout when omitted)");

  auto* vf = app.add_subcommand("verify", "run the invariant suite on the shipped fixtures");
  vf->add_option("--fixtures", cfg.fixture_dir, "fixture directory");
  vf->add_option("--out", cfg.out, "output JSON path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*ct) return detail::cell_tensor(cfg, out);
    if (*fh) return detail::fhom(cfg, out);
    if (*pr) return detail::probe(cfg, out);
    if (*sw) return detail::sweep(cfg, out);
    if (*ap) return detail::appendix(cfg, out);
    if (*orc) return detail::oracle(cfg, out);
    if (*vf) return detail::verify(cfg, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitInvalid;
}

}  // namespace homog::cli
