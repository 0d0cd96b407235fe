#pragma once

// Cell-centred finite-difference lattice over (0,t)^2 with m nodes per unit cell and axis.
// Nodes sit at ((i+1/2)h, (j+1/2)h). Under DirichletZero the boundary values live on extra
// fixed nodes at the face midpoints, joined to the outer ring by half-length bonds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "homog/error.hpp"
#include "homog/geometry.hpp"
#include "homog/vec.hpp"

namespace homog {

enum class BoundaryCondition { Periodic, DirichletZero };

enum class BondKind : std::uint8_t { Elastic, Breakable, Void };

inline const char* to_string(BoundaryCondition bc) {
  return bc == BoundaryCondition::Periodic ? "periodic" : "dirichlet";
}

inline const char* to_string(BondKind k) {
  switch (k) {
    case BondKind::Elastic: return "elastic";
    case BondKind::Breakable: return "breakable";
    default: return "void";
  }
}

using NodeId = std::uint32_t;
using BondId = std::uint32_t;

struct Node {
  Vec2 pos;
  bool fixed = false;
};

struct Bond {
  NodeId i = 0;
  NodeId j = 0;
  BondKind kind = BondKind::Elastic;
  double length = 0.0;
  /// Energy coefficient h^{n-1}/length: 1 for interior bonds, 2 for boundary half bonds.
  double kappa = 1.0;
  /// Displacement from node i to node j (minimal image under periodic wrap).
  Vec2 d;
  Vec2 mid;
};

class Lattice {
 public:
  Lattice() = default;

  int t() const { return t_; }
  int m() const { return m_; }
  int n() const { return 2; }
  double h() const { return 1.0 / m_; }
  /// Nodes per axis, t*m.
  int side() const { return t_ * m_; }
  BoundaryCondition bc() const { return bc_; }

  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Bond> bonds() const { return bonds_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t bond_count() const { return bonds_.size(); }
  std::size_t free_count() const { return free_count_; }

  /// Bond ids incident to a node.
  std::span<const BondId> incident(NodeId v) const {
    return {inc_.data() + inc_start_[v], inc_.data() + inc_start_[v + 1]};
  }

  /// Breakable bond ids in ascending order.
  std::span<const BondId> breakable() const { return breakable_; }

  std::size_t count(BondKind k) const {
    return std::size_t(std::count_if(bonds_.begin(), bonds_.end(), [k](const Bond& b) { return b.kind == k; }));
  }

  /// Surface measure of a single broken bond, h^{n-1}.
  double bond_measure() const { return h(); }

  /// Same lattice with every Breakable bond turned into a Void bond.
  Lattice perforated() const {
    Lattice out = *this;
    for (Bond& b : out.bonds_)
      if (b.kind == BondKind::Breakable) b.kind = BondKind::Void;
    out.breakable_.clear();
    return out;
  }

  /// Assembles a lattice from explicit parts. Used by build() and by tests that need
  /// hand-made stencils.
  static Lattice from_parts(int t, int m, BoundaryCondition bc, std::vector<Node> nodes, std::vector<Bond> bonds) {
    Lattice L;
    L.t_ = t;
    L.m_ = m;
    L.bc_ = bc;
    L.nodes_ = std::move(nodes);
    L.bonds_ = std::move(bonds);
    L.free_count_ = std::size_t(std::count_if(L.nodes_.begin(), L.nodes_.end(), [](const Node& v) { return !v.fixed; }));
    L.index();
    return L;
  }

 private:
  void index() {
    inc_start_.assign(nodes_.size() + 1, 0);
    for (const Bond& b : bonds_) {
      ++inc_start_[b.i + 1];
      ++inc_start_[b.j + 1];
    }
    for (std::size_t v = 0; v < nodes_.size(); ++v) inc_start_[v + 1] += inc_start_[v];
    inc_.assign(inc_start_.back(), 0);
    std::vector<std::uint32_t> fill(inc_start_.begin(), inc_start_.end() - 1);
    for (BondId b = 0; b < bonds_.size(); ++b) {
      inc_[fill[bonds_[b].i]++] = b;
      inc_[fill[bonds_[b].j]++] = b;
    }
    breakable_.clear();
    for (BondId b = 0; b < bonds_.size(); ++b)
      if (bonds_[b].kind == BondKind::Breakable) breakable_.push_back(b);
  }

  int t_ = 1;
  int m_ = 4;
  BoundaryCondition bc_ = BoundaryCondition::Periodic;
  std::vector<Node> nodes_;
  std::vector<Bond> bonds_;
  std::size_t free_count_ = 0;
  std::vector<std::uint32_t> inc_start_;
  std::vector<BondId> inc_;
  std::vector<BondId> breakable_;
};

/// A bond is Breakable when its midpoint lies in E + Z^2 or its open segment crosses F + Z^2.
inline BondKind classify_bond(const Geometry& geom, Vec2 a, Vec2 b) {
  if (geom.empty()) return BondKind::Elastic;
  const Vec2 mid = 0.5 * (a + b);
  if (geom.tiled_membership(mid, 0.0) == Membership::InE) return BondKind::Breakable;
  if (geom.segment_crosses(a, b) == SegmentHit::CrossesF) return BondKind::Breakable;
  return BondKind::Elastic;
}

inline Lattice build_lattice(const Geometry& geom, int t, int m, BoundaryCondition bc) {
  if (t < 1) throw ValidationError("t must be >= 1");
  if (m < 4) throw ValidationError("m must be >= 4");
  if (m * geom.delta() < 2.0)
    throw ResolutionTooCoarse("m*delta = " + std::to_string(m * geom.delta()) + " < 2");

  const int N = t * m;
  const double h = 1.0 / m;
  auto id = [N](int i, int j) { return NodeId(j * N + i); };
  auto center = [h](int i, int j) { return Vec2{(i + 0.5) * h, (j + 0.5) * h}; };

  std::vector<Node> nodes;
  nodes.reserve(std::size_t(N) * N + (bc == BoundaryCondition::DirichletZero ? 4 * N : 0));
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) nodes.push_back({center(i, j), false});

  const NodeId left0 = NodeId(N) * N;
  const NodeId right0 = left0 + N;
  const NodeId bottom0 = right0 + N;
  const NodeId top0 = bottom0 + N;
  if (bc == BoundaryCondition::DirichletZero) {
    for (int j = 0; j < N; ++j) nodes.push_back({{0.0, (j + 0.5) * h}, true});
    for (int j = 0; j < N; ++j) nodes.push_back({{double(t), (j + 0.5) * h}, true});
    for (int i = 0; i < N; ++i) nodes.push_back({{(i + 0.5) * h, 0.0}, true});
    for (int i = 0; i < N; ++i) nodes.push_back({{(i + 0.5) * h, double(t)}, true});
  }

  std::vector<Bond> bonds;
  bonds.reserve(2 * std::size_t(N) * (N + 1));
  auto add = [&](NodeId a, NodeId b, Vec2 pa, Vec2 d) {
    Bond bd;
    bd.i = a;
    bd.j = b;
    bd.d = d;
    bd.length = norm(d);
    bd.kappa = h / bd.length;
    bd.mid = pa + 0.5 * d;
    bd.kind = classify_bond(geom, pa, pa + d);
    bonds.push_back(bd);
  };

  const bool periodic = bc == BoundaryCondition::Periodic;
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) {
      const Vec2 p = center(i, j);
      if (i + 1 < N) add(id(i, j), id(i + 1, j), p, {h, 0.0});
      else if (periodic) add(id(i, j), id(0, j), p, {h, 0.0});
      else add(id(i, j), right0 + NodeId(j), p, {0.5 * h, 0.0});

      if (j + 1 < N) add(id(i, j), id(i, j + 1), p, {0.0, h});
      else if (periodic) add(id(i, j), id(i, 0), p, {0.0, h});
      else add(id(i, j), top0 + NodeId(i), p, {0.0, 0.5 * h});
    }
  if (!periodic) {
    for (int j = 0; j < N; ++j) add(left0 + NodeId(j), id(0, j), nodes[left0 + j].pos, {0.5 * h, 0.0});
    for (int i = 0; i < N; ++i) add(bottom0 + NodeId(i), id(i, 0), nodes[bottom0 + i].pos, {0.0, 0.5 * h});
  }
  return Lattice::from_parts(t, m, bc, std::move(nodes), std::move(bonds));
}

/// A set of broken bonds (sorted, unique) with its surface measure |broken| * h^{n-1}.
struct CrackState {
  std::vector<BondId> broken;
  double measure = 0.0;

  bool empty() const { return broken.empty(); }
  friend bool operator==(const CrackState&, const CrackState&) = default;
};

/// Builds a crack from bond ids; every id must name a Breakable bond.
inline CrackState make_crack(const Lattice& lat, std::vector<BondId> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (BondId b : ids) {
    if (b >= lat.bond_count() || lat.bonds()[b].kind != BondKind::Breakable)
      throw CrackOutsideInclusions("bond " + std::to_string(b) + " is not breakable");
  }
  CrackState c;
  c.measure = double(ids.size()) * lat.bond_measure();
  c.broken = std::move(ids);
  return c;
}

struct CellClassification {
  int t = 1;
  /// Row-major t x t flags, index ky*t + kx.
  std::vector<bool> bad;
  /// Crack measure per subcell in physical units (lattice measure scaled by t^{-(n-1)}).
  std::vector<double> measure;
  int n_good = 0;
  int n_bad = 0;
};

/// Labels each unit subcell of the t-cell bad when its share of the crack exceeds
/// beta * t^{-(n-1)}. Broken bonds go to the subcell holding their midpoint.
inline CellClassification classify_cells(const Lattice& lat, const CrackState& crack, double beta) {
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  const int t = lat.t();
  const double scale = 1.0 / t;
  CellClassification out;
  out.t = t;
  out.measure.assign(std::size_t(t) * t, 0.0);
  std::vector<int> counts(std::size_t(t) * t, 0);
  auto wrap = [t](double v) {
    int k = int(std::floor(v));
    return ((k % t) + t) % t;
  };
  for (BondId b : crack.broken) {
    const Vec2 mid = lat.bonds()[b].mid;
    ++counts[std::size_t(wrap(mid.y)) * t + wrap(mid.x)];
  }
  const double threshold = beta * scale;
  out.bad.assign(counts.size(), false);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out.measure[k] = counts[k] * lat.bond_measure() * scale;
    out.bad[k] = out.measure[k] > threshold;
    (out.bad[k] ? out.n_bad : out.n_good)++;
  }
  return out;
}

}  // namespace homog
