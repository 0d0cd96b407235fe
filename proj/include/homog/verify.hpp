#pragma once

// Self-contained invariant suite over the shipped fixture tree:
//   <dir>/geometry/*.json  geometry documents (quadratic-form checks on f0)
//   <dir>/oracle/*.json    oracle fixtures (exhaustive minima, heuristic agreement, ...)
// The report holds no timings or paths, so repeated runs are byte-identical.

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "homog/brittle_ms.hpp"
#include "homog/cell_tensor.hpp"
#include "homog/homogenize.hpp"
#include "homog/io.hpp"

namespace homog {

struct VerifyResult {
  Json report;
  int passed = 0;
  int failed = 0;
  bool ok() const { return failed == 0; }
};

namespace verify_detail {

class Recorder {
 public:
  void check(const std::string& name, bool ok, Json detail = Json::object()) {
    Json c;
    c["name"] = name;
    c["ok"] = ok;
    c["detail"] = std::move(detail);
    checks_.push_back(std::move(c));
    (ok ? passed_ : failed_)++;
  }
  VerifyResult finish() && {
    VerifyResult r;
    r.report["checks"] = std::move(checks_);
    r.report["passed"] = passed_;
    r.report["failed"] = failed_;
    r.passed = passed_;
    r.failed = failed_;
    return r;
  }

 private:
  Json checks_ = Json::array();
  int passed_ = 0;
  int failed_ = 0;
};

inline std::vector<std::filesystem::path> json_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

/// FNV-1a of the fixture name: a per-fixture seed that does not depend on the standard library.
inline std::uint64_t name_seed(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

inline void geometry_checks(Recorder& rec, const std::string& name, const Geometry& g, int m) {
  const Lattice cell = perforated_cell(g, m);
  const Vec2 xi{0.7, -0.3}, eta{0.2, 0.9};
  const std::vector<Vec2> probes{xi, eta, xi + eta, xi - eta, 0.5 * xi, 2.0 * xi, 10.0 * xi};
  const auto v = parallel_map<double>(probes.size(), [&](std::size_t k) { return f0(cell, probes[k]); });
  const double para = rel(v[2] + v[3], 2.0 * v[0] + 2.0 * v[1]);
  rec.check(name + "/parallelogram", para <= 1e-6, Json{{"relative_defect", para}});
  double homog = 0.0;
  const double lam[] = {0.5, 2.0, 10.0};
  for (int k = 0; k < 3; ++k) homog = std::max(homog, rel(v[4 + k], lam[k] * lam[k] * v[0]));
  rec.check(name + "/two_homogeneity", homog <= 1e-6, Json{{"relative_defect", homog}});
  const EffectiveTensor T = effective_tensor(g, m);
  const double asym = std::abs(T.A0[0][1] - T.A0[1][0]);
  const auto ev = T.eigenvalues();
  rec.check(name + "/tensor", asym <= 1e-8 && ev[0] > 0.0 && ev[1] <= 1.0 + 1e-6,
            Json{{"A0", Json::array({Json::array({T.A0[0][0], T.A0[0][1]}), Json::array({T.A0[1][0], T.A0[1][1]})})},
                 {"eigenvalues", Json::array({ev[0], ev[1]})}});
}

inline void oracle_checks(Recorder& rec, const Fixture& f) {
  const Lattice lat = fixture_lattice(f);
  const std::size_t nb = lat.breakable().size();
  const bool exhaustive = nb <= 12;
  const double vol = double(lat.t()) * lat.t();
  const std::string base = "oracle/" + f.name;

  // Exhaustive minima are recomputed for small fixtures and compared with the frozen values.
  std::vector<MSSolution> exact(f.surface_weights.size());
  std::vector<MSSolution> heur(f.surface_weights.size());
  parallel_for(f.surface_weights.size(), [&](std::size_t k) {
    MSProblem p{lat, f.xi, f.surface_weights[k]};
    if (exhaustive) exact[k] = brute_force_min(p);
    heur[k] = minimize(p);
  });
  for (std::size_t k = 0; k < f.surface_weights.size(); ++k) {
    const double w = f.surface_weights[k];
    const std::string tag = base + "/w=" + format_double(w);
    const FixtureExpectation* ex = nullptr;
    for (const auto& e : f.expected)
      if (e.surface_weight == w) ex = &e;
    if (!ex) {
      rec.check(tag + "/expected_present", false);
      continue;
    }
    if (exhaustive) {
      const bool same = std::abs(exact[k].breakdown.total - ex->total) <= 1e-9 && exact[k].crack.broken == ex->crack;
      rec.check(tag + "/oracle_frozen", same, Json{{"total", exact[k].breakdown.total}, {"frozen", ex->total}});
    }
    const double ref = exhaustive ? exact[k].breakdown.total : ex->total;
    const double gap = heur[k].breakdown.total - ref;
    rec.check(tag + "/heuristic_gap", std::abs(gap) <= 1e-9,
              Json{{"heuristic", heur[k].breakdown.total}, {"oracle", ref}, {"gap", gap}});
    rec.check(tag + "/below_elastic", heur[k].breakdown.total / vol <= norm2(f.xi) + 1e-9,
              Json{{"density", heur[k].breakdown.total / vol}, {"xi2", norm2(f.xi)}});
    // Breaking one bond costs more than the whole intact energy: the minimum is uncracked.
    const double intact = min_bulk_energy(lat, make_conductance(lat), f.xi);
    if (w * lat.bond_measure() > intact)
      rec.check(tag + "/threshold_empty", ex->crack.empty(), Json{{"intact", intact}});
    for (std::size_t q = 0; q < f.surface_weights.size(); ++q) {
      if (!(f.surface_weights[q] > w)) continue;
      const FixtureExpectation* hi = nullptr;
      for (const auto& e : f.expected)
        if (e.surface_weight == f.surface_weights[q]) hi = &e;
      if (hi)
        rec.check(tag + "/measure_monotone_vs_w=" + format_double(f.surface_weights[q]),
                  hi->crack.size() <= ex->crack.size());
    }
  }

  if (exhaustive && !f.surface_weights.empty()) {
    const double w = f.surface_weights.front();
    const double e1 = brute_force_min(MSProblem{lat, f.xi, w}).breakdown.total;
    const double lams[] = {0.5, 2.0, 4.0};
    const auto el = parallel_map<double>(3, [&](std::size_t k) {
      return brute_force_min(MSProblem{lat, lams[k] * f.xi, w}).breakdown.total;
    });
    for (int k = 0; k < 3; ++k) {
      const double l2 = lams[k] * lams[k] * e1;
      const bool ok = lams[k] >= 1.0 ? el[k] <= l2 + 1e-12 : el[k] >= l2 - 1e-12;
      rec.check(base + "/homogeneity/lambda=" + format_double(lams[k]), ok,
                Json{{"e_lambda", el[k]}, {"lambda2_e", l2}});
    }
  }

  // Truncation of random fields never raises the energy.
  std::mt19937_64 eng(name_seed(f.name));
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  const auto br = lat.breakable();
  int worst = 0;
  double max_increase = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 xi = lat.bc() == BoundaryCondition::Periodic ? Vec2{} : f.xi;
    MSProblem p{lat, xi, f.surface_weights.empty() ? 1.0 : f.surface_weights.front()};
    CorrectorField w = zero_corrector(lat, xi);
    for (std::size_t v = 0; v < w.w.size(); ++v)
      if (!lat.nodes()[v].fixed) w.w[v] = U(eng);
    std::vector<BondId> ids;
    for (BondId b : br)
      if (eng() >> 63) ids.push_back(b);
    const CrackState crack = make_crack(lat, ids);
    double lo = U(eng), hi = U(eng);
    if (lo > hi) std::swap(lo, hi);
    lo = std::min(lo, 0.0);
    hi = std::max(hi, 0.0);
    if (lat.bc() == BoundaryCondition::DirichletZero) {
      // The clamp window must contain the boundary data.
      for (std::size_t v = 0; v < w.w.size(); ++v)
        if (lat.nodes()[v].fixed) {
          const double u = dot(xi, lat.nodes()[v].pos);
          lo = std::min(lo, u);
          hi = std::max(hi, u);
        }
    }
    const double before = ms_energy(p, w, crack).total;
    const double after = ms_energy(p, truncate(lat, w, lo, hi), crack).total;
    max_increase = std::max(max_increase, after - before);
    if (after > before * (1.0 + 1e-14) + 1e-14) ++worst;
  }
  rec.check(base + "/truncation", worst == 0, Json{{"violations", worst}, {"max_increase", max_increase}});
}

}  // namespace verify_detail

inline VerifyResult verify_fixtures(const std::filesystem::path& dir, int tensor_m = 32) {
  verify_detail::Recorder rec;
  const auto geoms = verify_detail::json_files(dir / "geometry");
  const auto oracles = verify_detail::json_files(dir / "oracle");
  rec.check("fixtures_present", !geoms.empty() && !oracles.empty(),
            Json{{"geometry", geoms.size()}, {"oracle", oracles.size()}});
  for (const auto& p : geoms) {
    const Geometry g = load_geometry(p);
    if (!resolution_ok(g, tensor_m)) continue;
    verify_detail::geometry_checks(rec, "geometry/" + p.stem().string(), g, tensor_m);
  }
  for (const auto& p : oracles) verify_detail::oracle_checks(rec, load_fixture(p));
  return std::move(rec).finish();
}

}  // namespace homog
