#pragma once

// Periodic microstructure of the unit cell: the margin delta, the inclusion set E
// (disks, axis rectangles, simple polygons) and the slit set F (polylines).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "homog/error.hpp"
#include "homog/vec.hpp"

namespace homog {

struct Disk {
  Vec2 center;
  double radius = 0.0;
};

struct Rect {
  Vec2 lo;
  Vec2 hi;
};

struct Polygon {
  std::vector<Vec2> points;
};

using Shape = std::variant<Disk, Rect, Polygon>;

struct Polyline {
  std::vector<Vec2> points;
};

struct GeometrySpec {
  double delta = 0.25;
  std::vector<Shape> e_shapes;
  std::vector<Polyline> f_curves;
  int dim = 2;
};

/// Minimum gap between distinct primitives, in cell units.
inline constexpr double kSepTol = 1e-9;

namespace geom_detail {

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = norm2(ab);
  if (len2 == 0.0) return norm(p - a);
  const double s = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return norm(p - (a + s * ab));
}

inline bool on_segment(Vec2 p, Vec2 a, Vec2 b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

/// Closed segments [a,b] and [c,d] share at least one point.
inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double o1 = orient(a, b, c);
  const double o2 = orient(a, b, d);
  const double o3 = orient(c, d, a);
  const double o4 = orient(c, d, b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0)))
    return true;
  if (o1 == 0 && on_segment(c, a, b)) return true;
  if (o2 == 0 && on_segment(d, a, b)) return true;
  if (o3 == 0 && on_segment(a, c, d)) return true;
  if (o4 == 0 && on_segment(b, c, d)) return true;
  return false;
}

inline double segment_segment_distance(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  if (segments_intersect(a, b, c, d)) return 0.0;
  return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                   point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

/// Bond crossing test: the endpoints of the bond (a,b) lie strictly on opposite sides of the
/// line through (p,q), and the slit segment (p,q) reaches the bond. Collinear overlap is not a
/// crossing.
inline bool bond_crosses_segment(Vec2 a, Vec2 b, Vec2 p, Vec2 q) {
  const double oa = orient(p, q, a);
  const double ob = orient(p, q, b);
  if (!((oa > 0 && ob < 0) || (oa < 0 && ob > 0))) return false;
  const double op = orient(a, b, p);
  const double oq = orient(a, b, q);
  return !((op > 0 && oq > 0) || (op < 0 && oq < 0));
}

inline std::vector<Vec2> rect_points(const Rect& r) {
  return {r.lo, {r.hi.x, r.lo.y}, r.hi, {r.lo.x, r.hi.y}};
}

/// Closed point-in-polygon (boundary counts as inside).
inline bool point_in_polygon(Vec2 p, const std::vector<Vec2>& poly) {
  const std::size_t n = poly.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[j];
    const Vec2 b = poly[i];
    if (orient(a, b, p) == 0.0 && on_segment(p, a, b)) return true;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xint = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < xint) inside = !inside;
    }
  }
  return inside;
}

inline double polygon_signed_area(const std::vector<Vec2>& poly) {
  double s = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) s += cross(poly[j], poly[i]);
  return 0.5 * s;
}

inline double closed_length(const std::vector<Vec2>& poly) {
  double s = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) s += norm(poly[i] - poly[j]);
  return s;
}

inline double open_length(const std::vector<Vec2>& line) {
  double s = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) s += norm(line[i] - line[i - 1]);
  return s;
}

inline bool polygon_is_simple(const std::vector<Vec2>& poly) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(a, b, poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

inline bool polyline_is_simple(const std::vector<Vec2>& line) {
  const std::size_t nseg = line.size() - 1;
  const bool closed = line.front() == line.back();
  for (std::size_t i = 0; i < nseg; ++i) {
    for (std::size_t j = i + 1; j < nseg; ++j) {
      const bool adjacent = (j == i + 1) || (closed && i == 0 && j == nseg - 1);
      if (adjacent) continue;
      if (segments_intersect(line[i], line[i + 1], line[j], line[j + 1])) return false;
    }
  }
  return true;
}

/// Boundary polygon of a non-disk shape.
inline std::vector<Vec2> outline(const Shape& s) {
  if (const auto* r = std::get_if<Rect>(&s)) return rect_points(*r);
  return std::get<Polygon>(s).points;
}

/// Distance between a closed shape and a point set given as segments; negative or zero when
/// they touch or overlap.
inline double shape_polyline_distance(const Shape& s, const std::vector<Vec2>& line, bool closed) {
  const std::size_t nseg = closed ? line.size() : line.size() - 1;
  auto seg = [&](std::size_t k) { return std::pair{line[k], line[(k + 1) % line.size()]}; };
  if (const auto* d = std::get_if<Disk>(&s)) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < nseg; ++k) {
      auto [a, b] = seg(k);
      best = std::min(best, point_segment_distance(d->center, a, b) - d->radius);
    }
    if (closed && point_in_polygon(d->center, line)) return -1.0;
    return best;
  }
  const std::vector<Vec2> poly = outline(s);
  for (const Vec2& p : line)
    if (point_in_polygon(p, poly)) return -1.0;
  if (closed)
    for (const Vec2& p : poly)
      if (point_in_polygon(p, line)) return -1.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < nseg; ++k) {
    auto [a, b] = seg(k);
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
      best = std::min(best, segment_segment_distance(a, b, poly[j], poly[i]));
  }
  return best;
}

inline double shape_shape_distance(const Shape& s1, const Shape& s2) {
  const auto* d1 = std::get_if<Disk>(&s1);
  const auto* d2 = std::get_if<Disk>(&s2);
  if (d1 && d2) return norm(d1->center - d2->center) - d1->radius - d2->radius;
  if (d2) return shape_shape_distance(s2, s1);
  return shape_polyline_distance(s1, outline(s2), /*closed=*/true);
}

inline double polyline_polyline_distance(const std::vector<Vec2>& l1, const std::vector<Vec2>& l2) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < l1.size(); ++i)
    for (std::size_t j = 1; j < l2.size(); ++j)
      best = std::min(best, segment_segment_distance(l1[i - 1], l1[i], l2[j - 1], l2[j]));
  return best;
}

inline bool shape_contains(const Shape& s, Vec2 p) {
  if (const auto* d = std::get_if<Disk>(&s)) return norm2(p - d->center) <= d->radius * d->radius;
  if (const auto* r = std::get_if<Rect>(&s))
    return r->lo.x <= p.x && p.x <= r->hi.x && r->lo.y <= p.y && p.y <= r->hi.y;
  return point_in_polygon(p, std::get<Polygon>(s).points);
}

inline bool shape_meets_segment(const Shape& s, Vec2 a, Vec2 b) {
  if (const auto* d = std::get_if<Disk>(&s)) return point_segment_distance(d->center, a, b) <= d->radius;
  if (shape_contains(s, a) || shape_contains(s, b)) return true;
  const std::vector<Vec2> poly = outline(s);
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
    if (segments_intersect(a, b, poly[j], poly[i])) return true;
  return false;
}

struct Box {
  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

  void add(Vec2 p) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  bool empty() const { return lo.x > hi.x; }
};

inline Box shape_box(const Shape& s) {
  Box b;
  if (const auto* d = std::get_if<Disk>(&s)) {
    b.add(d->center - Vec2{d->radius, d->radius});
    b.add(d->center + Vec2{d->radius, d->radius});
  } else {
    for (const Vec2& p : outline(s)) b.add(p);
  }
  return b;
}

inline double reduce(double v) { return v - std::floor(v); }

}  // namespace geom_detail

enum class Membership { InE, NearF, Outside };
enum class SegmentHit { CrossesF, EntersE, Neither };

inline const char* to_string(Membership m) {
  switch (m) {
    case Membership::InE: return "in_E";
    case Membership::NearF: return "near_F";
    default: return "outside";
  }
}

inline const char* to_string(SegmentHit h) {
  switch (h) {
    case SegmentHit::CrossesF: return "crosses_F";
    case SegmentHit::EntersE: return "enters_E";
    default: return "neither";
  }
}

/// A validated microstructure with cached analytic measures. Immutable; build it with
/// validate().
class Geometry {
 public:
  const GeometrySpec& spec() const { return spec_; }
  double delta() const { return spec_.delta; }
  int dim() const { return spec_.dim; }
  double area_E() const { return area_E_; }
  double perim_E() const { return perim_E_; }
  double length_F() const { return length_F_; }
  bool empty() const { return spec_.e_shapes.empty() && spec_.f_curves.empty(); }

  /// Classifies a point of the plane against E + Z^2 and F + Z^2.
  Membership tiled_membership(Vec2 p, double tol = 1e-9) const {
    const Vec2 r{geom_detail::reduce(p.x), geom_detail::reduce(p.y)};
    for (const Shape& s : spec_.e_shapes)
      if (geom_detail::shape_contains(s, r)) return Membership::InE;
    if (tol > 0.0 && !spec_.f_curves.empty()) {
      for (int ox = -1; ox <= 1; ++ox)
        for (int oy = -1; oy <= 1; ++oy) {
          const Vec2 q = r - Vec2{double(ox), double(oy)};
          for (const Polyline& f : spec_.f_curves)
            for (std::size_t i = 1; i < f.points.size(); ++i)
              if (geom_detail::point_segment_distance(q, f.points[i - 1], f.points[i]) < tol)
                return Membership::NearF;
        }
    }
    return Membership::Outside;
  }

  /// Tests the open segment (a,b) against the tiled slit set and the tiled inclusion set.
  /// A slit crossing takes precedence over touching E.
  SegmentHit segment_crosses(Vec2 a, Vec2 b) const {
    if (empty()) return SegmentHit::Neither;
    const int x0 = int(std::floor(std::min(a.x, b.x)));
    const int x1 = int(std::floor(std::max(a.x, b.x)));
    const int y0 = int(std::floor(std::min(a.y, b.y)));
    const int y1 = int(std::floor(std::max(a.y, b.y)));
    bool enters = false;
    for (int ox = x0; ox <= x1; ++ox)
      for (int oy = y0; oy <= y1; ++oy) {
        const Vec2 off{double(ox), double(oy)};
        const Vec2 pa = a - off, pb = b - off;
        if (!overlaps_box(pa, pb)) continue;
        for (const Polyline& f : spec_.f_curves)
          for (std::size_t i = 1; i < f.points.size(); ++i)
            if (geom_detail::bond_crosses_segment(pa, pb, f.points[i - 1], f.points[i]))
              return SegmentHit::CrossesF;
        if (!enters)
          for (const Shape& s : spec_.e_shapes)
            if (geom_detail::shape_meets_segment(s, pa, pb)) {
              enters = true;
              break;
            }
      }
    return enters ? SegmentHit::EntersE : SegmentHit::Neither;
  }

  /// Stable 64-bit hash of the primitive parameters.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](double v) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffU;
        h *= 1099511628211ULL;
      }
    };
    mix(spec_.delta);
    for (const Shape& s : spec_.e_shapes) {
      mix(double(s.index()));
      if (const auto* d = std::get_if<Disk>(&s)) {
        mix(d->center.x), mix(d->center.y), mix(d->radius);
      } else {
        for (const Vec2& p : geom_detail::outline(s)) mix(p.x), mix(p.y);
      }
    }
    for (const Polyline& f : spec_.f_curves) {
      mix(-1.0);
      for (const Vec2& p : f.points) mix(p.x), mix(p.y);
    }
    return h;
  }

 private:
  friend Geometry validate(GeometrySpec spec);
  explicit Geometry(GeometrySpec spec) : spec_(std::move(spec)) {
    for (const Shape& s : spec_.e_shapes) {
      box_.add(geom_detail::shape_box(s).lo);
      box_.add(geom_detail::shape_box(s).hi);
    }
    for (const Polyline& f : spec_.f_curves)
      for (const Vec2& p : f.points) box_.add(p);
  }

  bool overlaps_box(Vec2 a, Vec2 b) const {
    if (box_.empty()) return false;
    return std::max(a.x, b.x) >= box_.lo.x && std::min(a.x, b.x) <= box_.hi.x &&
           std::max(a.y, b.y) >= box_.lo.y && std::min(a.y, b.y) <= box_.hi.y;
  }

  GeometrySpec spec_;
  geom_detail::Box box_;
  double area_E_ = 0.0;
  double perim_E_ = 0.0;
  double length_F_ = 0.0;
};

inline double shape_area(const Shape& s) {
  if (const auto* d = std::get_if<Disk>(&s)) return std::numbers::pi * d->radius * d->radius;
  if (const auto* r = std::get_if<Rect>(&s)) return (r->hi.x - r->lo.x) * (r->hi.y - r->lo.y);
  return std::abs(geom_detail::polygon_signed_area(std::get<Polygon>(s).points));
}

inline double shape_perimeter(const Shape& s) {
  if (const auto* d = std::get_if<Disk>(&s)) return 2.0 * std::numbers::pi * d->radius;
  return geom_detail::closed_length(geom_detail::outline(s));
}

/// Checks containment in Q_delta, primitive sanity and pairwise separation, and caches
/// the analytic measures.
inline Geometry validate(GeometrySpec spec) {
  using namespace geom_detail;
  if (spec.dim != 2) throw DimensionUnsupported("only dim = 2 is supported");
  const double delta = spec.delta;
  if (!(delta > 0.0 && delta < 0.5)) throw BadPrimitive("delta must lie in (0, 1/2)");
  auto inside = [delta](Vec2 p) {
    return p.x > delta && p.x < 1.0 - delta && p.y > delta && p.y < 1.0 - delta;
  };
  auto finite = [](Vec2 p) { return std::isfinite(p.x) && std::isfinite(p.y); };

  for (std::size_t k = 0; k < spec.e_shapes.size(); ++k) {
    const Shape& s = spec.e_shapes[k];
    const std::string tag = "E[" + std::to_string(k) + "]";
    if (const auto* d = std::get_if<Disk>(&s)) {
      if (!finite(d->center) || !(d->radius > 0.0) || !std::isfinite(d->radius))
        throw BadPrimitive(tag + ": disk radius must be positive");
      const Vec2 r{d->radius, d->radius};
      if (!inside(d->center - r) || !inside(d->center + r)) throw MarginViolation(tag + " leaves Q_delta");
    } else if (const auto* r = std::get_if<Rect>(&s)) {
      if (!finite(r->lo) || !finite(r->hi) || !(r->lo.x < r->hi.x) || !(r->lo.y < r->hi.y))
        throw BadPrimitive(tag + ": rect needs lo < hi");
      if (!inside(r->lo) || !inside(r->hi)) throw MarginViolation(tag + " leaves Q_delta");
    } else {
      const auto& pts = std::get<Polygon>(s).points;
      if (pts.size() < 3) throw BadPrimitive(tag + ": polygon needs at least 3 vertices");
      for (const Vec2& p : pts)
        if (!finite(p)) throw BadPrimitive(tag + ": non-finite vertex");
      if (!(std::abs(polygon_signed_area(pts)) > 0.0)) throw BadPrimitive(tag + ": degenerate polygon");
      if (!polygon_is_simple(pts)) throw BadPrimitive(tag + ": polygon is not simple");
      for (const Vec2& p : pts)
        if (!inside(p)) throw MarginViolation(tag + " leaves Q_delta");
    }
  }
  for (std::size_t k = 0; k < spec.f_curves.size(); ++k) {
    const auto& pts = spec.f_curves[k].points;
    const std::string tag = "F[" + std::to_string(k) + "]";
    if (pts.size() < 2) throw BadPrimitive(tag + ": polyline needs at least 2 points");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!finite(pts[i])) throw BadPrimitive(tag + ": non-finite vertex");
      if (i > 0 && pts[i] == pts[i - 1]) throw BadPrimitive(tag + ": zero-length segment");
    }
    if (!polyline_is_simple(pts)) throw BadPrimitive(tag + ": polyline self-intersects");
    for (const Vec2& p : pts)
      if (!inside(p)) throw MarginViolation(tag + " leaves Q_delta");
  }

  const auto& E = spec.e_shapes;
  const auto& F = spec.f_curves;
  for (std::size_t i = 0; i < E.size(); ++i)
    for (std::size_t j = i + 1; j < E.size(); ++j)
      if (shape_shape_distance(E[i], E[j]) <= kSepTol)
        throw OverlapViolation("E[" + std::to_string(i) + "] and E[" + std::to_string(j) + "] are not separated");
  for (std::size_t i = 0; i < F.size(); ++i) {
    const bool closed = F[i].points.front() == F[i].points.back();
    for (std::size_t j = 0; j < E.size(); ++j)
      if (shape_polyline_distance(E[j], F[i].points, false) <= kSepTol ||
          (closed && shape_polyline_distance(E[j], F[i].points, true) <= kSepTol))
        throw OverlapViolation("F[" + std::to_string(i) + "] meets E[" + std::to_string(j) + "]");
    for (std::size_t j = i + 1; j < F.size(); ++j)
      if (polyline_polyline_distance(F[i].points, F[j].points) <= kSepTol)
        throw OverlapViolation("F[" + std::to_string(i) + "] and F[" + std::to_string(j) + "] are not separated");
  }

  Geometry g(std::move(spec));
  for (const Shape& s : g.spec_.e_shapes) {
    g.area_E_ += shape_area(s);
    g.perim_E_ += shape_perimeter(s);
  }
  for (const Polyline& f : g.spec_.f_curves) g.length_F_ += open_length(f.points);
  return g;
}

inline double perimeter_E(const Geometry& g) { return g.perim_E(); }

}  // namespace homog
