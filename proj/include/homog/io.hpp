#pragma once

// JSON and CSV emission, geometry and fixture files. Every float is written with 17 significant
// digits and objects keep insertion order, so identical results give identical bytes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "homog/brittle_ms.hpp"
#include "homog/cell_tensor.hpp"
#include "homog/error.hpp"
#include "homog/geometry.hpp"
#include "homog/homogenize.hpp"
#include "homog/lattice.hpp"

namespace homog {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  // Keep floats recognisable as floats on re-read.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

namespace io_detail {

inline void dump(const Json& j, std::string& out, int indent, int depth) {
  const std::string pad(std::size_t(indent) * (depth + 1), ' ');
  const std::string close(std::size_t(indent) * depth, ' ');
  switch (j.type()) {
    case Json::value_t::number_float: out += format_double(j.get<double>()); return;
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",";
        if (!flat) out += "\n" + pad;
        dump(e, out, indent, depth + 1);
        first = false;
      }
      if (!flat) out += "\n" + close;
      out += ']';
      return;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        out += "\n" + pad + Json(it.key()).dump() + ": ";
        dump(it.value(), out, indent, depth + 1);
        first = false;
      }
      out += "\n" + close + '}';
      return;
    }
    default: out += j.dump(); return;
  }
}

}  // namespace io_detail

inline std::string dump_json(const Json& j) {
  std::string out;
  io_detail::dump(j, out, 2, 0);
  out += '\n';
  return out;
}

/// Writes to a sibling temporary file and renames it over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ValidationError("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw ValidationError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ValidationError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline Json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------------------------
// Geometry

namespace io_detail {

inline Vec2 point(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError(std::string(what) + " must be a pair of numbers");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline std::vector<Vec2> points(const Json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array of points");
  std::vector<Vec2> out;
  for (const auto& p : j) out.push_back(point(p, what));
  return out;
}

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

inline double number(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number()) throw ParseError(std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

inline int integer(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_integer()) throw ParseError(std::string("field \"") + key + "\" must be an integer");
  return v.get<int>();
}

inline Json pair(Vec2 p) { return Json::array({p.x, p.y}); }

inline Json point_list(const std::vector<Vec2>& pts) {
  Json a = Json::array();
  for (Vec2 p : pts) a.push_back(pair(p));
  return a;
}

}  // namespace io_detail

/// Parses {"delta", "E": [...], "F": [...]} into an unvalidated spec.
inline GeometrySpec parse_geometry_spec(const Json& j) {
  using namespace io_detail;
  if (!j.is_object()) throw ParseError("geometry must be a JSON object");
  GeometrySpec s;
  s.delta = number(j, "delta");
  if (j.contains("dim")) s.dim = integer(j, "dim");
  if (j.contains("E")) {
    if (!j["E"].is_array()) throw ParseError("\"E\" must be an array");
    for (const auto& e : j["E"]) {
      const Json& kind = field(e, "kind");
      if (!kind.is_string()) throw ParseError("\"kind\" must be a string");
      const auto k = kind.get<std::string>();
      if (k == "disk") s.e_shapes.push_back(Disk{point(field(e, "center"), "center"), number(e, "radius")});
      else if (k == "rect") s.e_shapes.push_back(Rect{point(field(e, "lo"), "lo"), point(field(e, "hi"), "hi")});
      else if (k == "polygon") s.e_shapes.push_back(Polygon{points(field(e, "points"), "points")});
      else throw ParseError("unknown shape kind \"" + k + "\"");
    }
  }
  if (j.contains("F")) {
    if (!j["F"].is_array()) throw ParseError("\"F\" must be an array");
    for (const auto& f : j["F"]) s.f_curves.push_back(Polyline{points(field(f, "points"), "points")});
  }
  return s;
}

inline Json geometry_to_json(const GeometrySpec& s) {
  using io_detail::pair;
  Json j;
  j["delta"] = s.delta;
  if (s.dim != 2) j["dim"] = s.dim;
  Json E = Json::array();
  for (const Shape& sh : s.e_shapes) {
    Json e;
    if (const auto* d = std::get_if<Disk>(&sh)) {
      e["kind"] = "disk";
      e["center"] = pair(d->center);
      e["radius"] = d->radius;
    } else if (const auto* r = std::get_if<Rect>(&sh)) {
      e["kind"] = "rect";
      e["lo"] = pair(r->lo);
      e["hi"] = pair(r->hi);
    } else {
      e["kind"] = "polygon";
      e["points"] = io_detail::point_list(std::get<Polygon>(sh).points);
    }
    E.push_back(std::move(e));
  }
  Json F = Json::array();
  for (const Polyline& f : s.f_curves) F.push_back(Json{{"points", io_detail::point_list(f.points)}});
  j["E"] = std::move(E);
  j["F"] = std::move(F);
  return j;
}

inline Geometry load_geometry(const std::filesystem::path& path) {
  return validate(parse_geometry_spec(parse_json_text(read_file(path), path.string())));
}

// ---------------------------------------------------------------------------------------------
// Results

inline Json lattice_summary(const Lattice& lat) {
  Json j;
  j["t"] = lat.t();
  j["m"] = lat.m();
  j["h"] = lat.h();
  j["bc"] = to_string(lat.bc());
  j["nodes"] = lat.node_count();
  j["free_nodes"] = lat.free_count();
  j["bonds"] = lat.bond_count();
  j["elastic"] = lat.count(BondKind::Elastic);
  j["breakable"] = lat.count(BondKind::Breakable);
  j["void"] = lat.count(BondKind::Void);
  return j;
}

inline Json to_json(const EnergyBreakdown& e) { return Json{{"bulk", e.bulk}, {"surface", e.surface}, {"total", e.total}}; }

inline Json to_json(const EffectiveTensor& T, const Geometry& g) {
  Json j;
  j["A0"] = Json::array({Json::array({T.A0[0][0], T.A0[0][1]}), Json::array({T.A0[1][0], T.A0[1][1]})});
  j["m"] = T.m;
  j["area_E"] = g.area_E();
  j["perim_E"] = g.perim_E();
  const auto ev = T.eigenvalues();
  j["eigenvalues"] = Json::array({ev[0], ev[1]});
  char fp[17];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(T.fingerprint));
  j["fingerprint"] = fp;
  return j;
}

inline Json to_json(const TRecord& r) {
  Json j;
  j["t"] = r.t;
  j["m"] = r.m;
  j["surface_weight"] = r.surface_weight;
  j["g_hat"] = r.g_hat;
  j["breakdown"] = to_json(r.breakdown);
  j["crack_measure"] = r.crack_measure;
  j["broken"] = r.broken;
  j["converged"] = r.converged;
  j["start"] = r.start;
  return j;
}

inline Json to_json(const HomogReport& R) {
  Json j;
  j["xi"] = io_detail::pair(R.xi);
  j["m"] = R.m;
  Json recs = Json::array();
  for (std::size_t k = 0; k < R.records.size(); ++k) {
    Json r = to_json(R.records[k]);
    r["g_elastic"] = R.g_elastic[k];
    recs.push_back(std::move(r));
  }
  j["records"] = std::move(recs);
  j["fhom_estimate"] = R.fhom_estimate;
  j["bounds"] = Json{{"f0_value", R.f0_value}, {"perim_E", R.perim_E}, {"upper", R.upper}};
  j["mesh_indicator"] = R.mesh_indicator ? Json(*R.mesh_indicator) : Json(nullptr);
  j["slack"] = R.slack;
  j["flags"] = Json{{"sandwich_ok", R.sandwich_ok}, {"cauchy_gap", R.cauchy_gap}};
  j["signed_gap"] = R.signed_gap;
  return j;
}

inline Json to_json(const ProbeReport& P) {
  Json j;
  j["xi"] = io_detail::pair(P.xi);
  j["t"] = P.t;
  j["m"] = P.m;
  j["e_base"] = P.e_base;
  Json rows = Json::array();
  for (const auto& r : P.rows)
    rows.push_back(Json{{"lambda", r.lambda}, {"e_lambda", r.e_lambda}, {"lambda2_e", r.lambda2_e}, {"side", r.side}});
  j["rows"] = std::move(rows);
  j["non2homog_detected"] = P.non2homog_detected;
  j["max_deficit"] = P.max_deficit;
  return j;
}

inline Json to_json(const SweepReport& S) {
  Json j;
  j["xi"] = io_detail::pair(S.xi);
  j["schedule"] = Json{{"c", S.schedule.c}, {"p", S.schedule.p}, {"label", S.schedule.label()}};
  j["beta"] = S.beta;
  Json pts = Json::array();
  for (const auto& p : S.points) {
    Json r;
    r["eps"] = p.eps;
    r["t"] = p.record.t;
    r["alpha"] = p.alpha;
    r["surface_weight"] = p.record.surface_weight;
    r["bulk"] = p.record.breakdown.bulk;
    r["surface"] = p.record.breakdown.surface;
    r["total"] = p.record.breakdown.total;
    r["crack_measure"] = p.record.crack_measure;
    r["n_bad"] = p.n_bad;
    pts.push_back(std::move(r));
  }
  j["trace"] = std::move(pts);
  j["trend"] = S.trend;
  return j;
}

inline Json to_json(const AppendixReport& R) {
  Json j;
  j["xi"] = io_detail::pair(R.xi);
  j["m"] = R.m;
  j["candidates"] = R.candidates;
  Json rows = Json::array();
  for (const auto& r : R.rows)
    rows.push_back(Json{{"beta", r.beta},
                        {"ms_total", r.ms_total},
                        {"dirichlet", r.dirichlet},
                        {"ratio", r.ratio},
                        {"crack_measure", r.crack_measure},
                        {"omega", r.omega}});
  j["rows"] = std::move(rows);
  j["c"] = R.c;
  j["c_least_squares"] = R.c_least_squares;
  j["residual"] = R.residual;
  return j;
}

// ---------------------------------------------------------------------------------------------
// CSV traces: t_or_eps, g_hat_or_total, bulk, surface, crack_measure, n_bad

inline constexpr const char* kCsvHeader = "t_or_eps,g_hat_or_total,bulk,surface,crack_measure,n_bad\n";

inline std::string trace_csv(const HomogReport& R) {
  std::string out = kCsvHeader;
  for (const auto& r : R.records)
    out += std::to_string(r.t) + "," + format_double(r.g_hat) + "," + format_double(r.breakdown.bulk) + "," +
           format_double(r.breakdown.surface) + "," + format_double(r.crack_measure) + ",\n";
  return out;
}

inline std::string trace_csv(const SweepReport& S) {
  std::string out = kCsvHeader;
  for (const auto& p : S.points)
    out += format_double(p.eps) + "," + format_double(p.record.g_hat) + "," + format_double(p.record.breakdown.bulk) +
           "," + format_double(p.record.breakdown.surface) + "," + format_double(p.record.crack_measure) + "," +
           std::to_string(p.n_bad) + "\n";
  return out;
}

// ---------------------------------------------------------------------------------------------
// Oracle fixtures

struct FixtureExpectation {
  double surface_weight = 0.0;
  /// Raw lattice total of the exhaustive minimum.
  double total = 0.0;
  std::vector<BondId> crack;
};

struct Fixture {
  std::string name;
  GeometrySpec geometry;
  Vec2 xi;
  int t = 1;
  int m = 6;
  BoundaryCondition bc = BoundaryCondition::DirichletZero;
  std::vector<double> surface_weights;
  std::vector<FixtureExpectation> expected;
};

inline Fixture parse_fixture(const Json& j) {
  using namespace io_detail;
  Fixture f;
  const Json& name = field(j, "name");
  if (!name.is_string()) throw ParseError("\"name\" must be a string");
  f.name = name.get<std::string>();
  f.geometry = parse_geometry_spec(field(j, "geometry"));
  f.xi = point(field(j, "xi"), "xi");
  f.t = integer(j, "t");
  f.m = integer(j, "m");
  const Json& bc = field(j, "bc");
  if (bc == "dirichlet") f.bc = BoundaryCondition::DirichletZero;
  else if (bc == "periodic") f.bc = BoundaryCondition::Periodic;
  else throw ParseError("\"bc\" must be \"dirichlet\" or \"periodic\"");
  const Json& ws = field(j, "surface_weights");
  if (!ws.is_array()) throw ParseError("\"surface_weights\" must be an array");
  for (const auto& w : ws) {
    if (!w.is_number()) throw ParseError("surface weights must be numbers");
    f.surface_weights.push_back(w.get<double>());
  }
  if (j.contains("expected")) {
    for (const auto& e : j["expected"]) {
      FixtureExpectation x;
      x.surface_weight = number(e, "surface_weight");
      x.total = number(e, "total");
      for (const auto& b : field(e, "crack")) x.crack.push_back(b.get<BondId>());
      f.expected.push_back(std::move(x));
    }
  }
  return f;
}

inline Json fixture_to_json(const Fixture& f) {
  Json j;
  j["name"] = f.name;
  j["geometry"] = geometry_to_json(f.geometry);
  j["xi"] = io_detail::pair(f.xi);
  j["t"] = f.t;
  j["m"] = f.m;
  j["bc"] = to_string(f.bc);
  j["surface_weights"] = f.surface_weights;
  Json ex = Json::array();
  for (const auto& e : f.expected)
    ex.push_back(Json{{"surface_weight", e.surface_weight}, {"total", e.total}, {"crack", e.crack}});
  j["expected"] = std::move(ex);
  return j;
}

inline Fixture load_fixture(const std::filesystem::path& path) {
  return parse_fixture(parse_json_text(read_file(path), path.string()));
}

inline Lattice fixture_lattice(const Fixture& f) { return build_lattice(validate(f.geometry), f.t, f.m, f.bc); }

/// Recomputes the expected block from brute_force_min.
inline void regenerate_expected(Fixture& f) {
  const Lattice lat = fixture_lattice(f);
  f.expected.clear();
  for (double w : f.surface_weights) {
    const MSSolution s = brute_force_min(MSProblem{lat, f.xi, w});
    f.expected.push_back({w, s.breakdown.total, s.crack.broken});
  }
}

}  // namespace homog
