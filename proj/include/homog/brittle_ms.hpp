#pragma once

// Discrete Mumford-Shah energy with cracks confined to Breakable bonds (weak-membrane model):
// an intact bond stores kappa * stretch^2, a broken bond stores nothing and pays
// surface_weight * h^{n-1}.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "homog/direct.hpp"
#include "homog/lattice.hpp"
#include "homog/parallel.hpp"
#include "homog/solver.hpp"

namespace homog {

struct MSProblem {
  const Lattice& lattice;
  Vec2 xi;
  double surface_weight = 1.0;
};

struct EnergyBreakdown {
  double bulk = 0.0;
  double surface = 0.0;
  double total = 0.0;

  EnergyBreakdown scaled(double s) const { return {bulk * s, surface * s, total * s}; }
  friend bool operator==(const EnergyBreakdown&, const EnergyBreakdown&) = default;
};

struct MSSolution {
  CorrectorField corrector;
  CrackState crack;
  /// Raw energies over the whole lattice.
  EnergyBreakdown breakdown;
  int iterations = 0;
  bool converged = false;
  std::string start;
  /// Total energy after each outer iteration.
  std::vector<double> trace;

  /// Energies per unit volume (divided by t^n).
  EnergyBreakdown density(const Lattice& lat) const {
    return breakdown.scaled(1.0 / (double(lat.t()) * lat.t()));
  }
};

struct MinimizeOptions {
  int starts = 4;
  int max_outer = 200;
  double tol = 1e-10;
  std::uint64_t seed = 0x5EED;
};

/// Hard cap for exhaustive enumeration.
inline constexpr std::size_t kBruteForceCap = 20;

inline void check_crack(const Lattice& lat, const CrackState& crack) {
  for (BondId b : crack.broken)
    if (b >= lat.bond_count() || lat.bonds()[b].kind != BondKind::Breakable)
      throw CrackOutsideInclusions("bond " + std::to_string(b) + " is not breakable");
}

inline EnergyBreakdown ms_energy(const MSProblem& p, const CorrectorField& w, const CrackState& crack) {
  check_crack(p.lattice, crack);
  EnergyBreakdown e;
  e.bulk = bulk_energy(p.lattice, make_conductance(p.lattice, crack), w);
  e.surface = p.surface_weight * crack.measure;
  e.total = e.bulk + e.surface;
  return e;
}

namespace ms_detail {

using Mask = std::vector<char>;

inline CrackState crack_from_mask(const Lattice& lat, const Mask& mask) {
  const auto br = lat.breakable();
  CrackState c;
  for (std::size_t k = 0; k < br.size(); ++k)
    if (mask[k]) c.broken.push_back(br[k]);
  c.measure = double(c.broken.size()) * lat.bond_measure();
  return c;
}

/// Deterministic preference: lower total, then the lexicographically smaller crack set.
inline bool better(const MSSolution& a, const MSSolution& b) {
  if (a.breakdown.total != b.breakdown.total) return a.breakdown.total < b.breakdown.total;
  return std::lexicographical_compare(a.crack.broken.begin(), a.crack.broken.end(), b.crack.broken.begin(),
                                      b.crack.broken.end());
}

/// Re-chooses the free constants of the corrector without changing the energy, so that the
/// per-bond re-decision sees meaningful stretches across broken bonds:
///  - connected groups of isolated nodes become rigid (constant total field), i.e. the state
///    they would reach if their internal bonds healed;
///  - floating components (and isolated groups) are shifted to best match their settled
///    neighbours across broken bonds.
inline void regauge(const Lattice& lat, const ConductanceField& cond, CorrectorField& w) {
  const auto comps = solver_detail::analyze(lat, cond);
  const auto nodes = lat.nodes();
  const auto bonds = lat.bonds();
  const std::size_t nn = nodes.size();

  // Settled nodes: fixed nodes and anchored components; under Periodic bc the largest
  // component plays the anchor.
  std::vector<char> settled(nn, 0);
  int anchor = -1;
  if (lat.bc() == BoundaryCondition::Periodic) {
    std::size_t best = 0;
    for (std::size_t k = 0; k < comps.members.size(); ++k)
      if (comps.members[k].size() > best) best = comps.members[k].size(), anchor = int(k);
  }
  for (NodeId v = 0; v < nn; ++v) {
    const int k = comps.comp[v];
    if (nodes[v].fixed || (k >= 0 && (comps.anchored[k] || k == anchor))) settled[v] = 1;
  }

  // Loose groups: each remaining component, plus clusters of isolated nodes.
  std::vector<int> group(nn, -1);
  std::vector<std::vector<NodeId>> groups;
  std::vector<char> rigid;
  std::vector<int> comp_group(comps.members.size(), -1);
  for (NodeId v = 0; v < nn; ++v) {
    if (settled[v] || group[v] >= 0) continue;
    const int k = comps.comp[v];
    if (k >= 0) {
      comp_group[k] = int(groups.size());
      for (NodeId u : comps.members[k]) group[u] = int(groups.size());
      groups.push_back(comps.members[k]);
      rigid.push_back(0);
      continue;
    }
    // Flood the isolated cluster through any bond.
    std::vector<NodeId> members{v};
    group[v] = int(groups.size());
    for (std::size_t q = 0; q < members.size(); ++q)
      for (BondId b : lat.incident(members[q])) {
        const NodeId o = bonds[b].i == members[q] ? bonds[b].j : bonds[b].i;
        if (!nodes[o].fixed && comps.comp[o] < 0 && group[o] < 0) {
          group[o] = int(groups.size());
          members.push_back(o);
        }
      }
    groups.push_back(std::move(members));
    rigid.push_back(1);
  }
  if (groups.empty()) return;

  // Rigid clusters: total field constant, expressed through unwrapped positions.
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!rigid[g]) continue;
    const auto& mem = groups[g];
    std::vector<Vec2> pos(nn);
    std::vector<char> seen(nn, 0);
    std::vector<NodeId> queue{mem.front()};
    pos[mem.front()] = nodes[mem.front()].pos;
    seen[mem.front()] = 1;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const NodeId u = queue[q];
      for (BondId b : lat.incident(u)) {
        const Bond& bd = bonds[b];
        const NodeId o = bd.i == u ? bd.j : bd.i;
        if (group[o] != int(g) || seen[o]) continue;
        pos[o] = bd.i == u ? pos[u] + bd.d : pos[u] - bd.d;
        seen[o] = 1;
        queue.push_back(o);
      }
    }
    for (NodeId u : mem) w.w[u] = -dot(w.xi, pos[u]);
  }

  // Shift each group against settled neighbours; repeat while progress is made.
  std::vector<char> done(groups.size(), 0);
  for (bool progress = true; progress;) {
    progress = false;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (done[g]) continue;
      double num = 0.0, den = 0.0;
      for (NodeId u : groups[g])
        for (BondId b : lat.incident(u)) {
          const Bond& bd = bonds[b];
          const NodeId o = bd.i == u ? bd.j : bd.i;
          if (!settled[o]) continue;
          const double sd = dot(w.xi, bd.d);
          const double target = bd.i == u ? sd + w.w[o] - w.w[u] : w.w[o] - sd - w.w[u];
          num += bd.kappa * target;
          den += bd.kappa;
        }
      if (den == 0.0) continue;
      const double shift = num / den;
      for (NodeId u : groups[g]) {
        w.w[u] += shift;
        settled[u] = 1;
      }
      done[g] = 1;
      progress = true;
    }
  }
}

inline MSSolution run_start(const MSProblem& p, Mask mask, std::string label, const MinimizeOptions& opts) {
  const Lattice& lat = p.lattice;
  const auto br = lat.breakable();
  const double cost = p.surface_weight * lat.bond_measure();
  SolveOptions so;
  so.tol = opts.tol;

  MSSolution best;
  best.breakdown.total = std::numeric_limits<double>::infinity();
  best.start = std::move(label);
  CorrectorField w = zero_corrector(lat, p.xi);
  for (int it = 1; it <= opts.max_outer; ++it) {
    const CrackState crack = crack_from_mask(lat, mask);
    const ConductanceField cond = make_conductance(lat, crack);
    so.warm_start = &w;
    w = solve_corrector(lat, cond, p.xi, so);
    EnergyBreakdown e;
    e.bulk = bulk_energy(lat, cond, w);
    e.surface = p.surface_weight * crack.measure;
    e.total = e.bulk + e.surface;
    best.trace.push_back(e.total);
    best.iterations = it;
    if (e.total <= best.breakdown.total) {
      best.breakdown = e;
      best.crack = crack;
      best.corrector = w;
    }
    regauge(lat, cond, w);
    Mask next(br.size(), 0);
    for (std::size_t k = 0; k < br.size(); ++k) {
      const Bond& bd = lat.bonds()[br[k]];
      const double s = bond_stretch(bd, w);
      next[k] = bd.kappa * s * s > cost ? 1 : 0;
    }
    if (next == mask) {
      best.converged = true;
      break;
    }
    mask = std::move(next);
  }
  return best;
}

}  // namespace ms_detail

/// Alternating minimization from a fixed roster of starting cracks: all-intact, all-broken,
/// then (starts - 2) pseudo-random subsets drawn from opts.seed. Returns the best result.
inline MSSolution minimize(const MSProblem& p, const MinimizeOptions& opts = {}) {
  if (opts.starts < 1) throw ValidationError("starts must be >= 1");
  if (opts.max_outer < 1) throw ValidationError("max_outer must be >= 1");
  if (!(p.surface_weight >= 0.0) || !std::isfinite(p.surface_weight))
    throw ValidationError("surface_weight must be finite and >= 0");
  const std::size_t nb = p.lattice.breakable().size();
  if (nb == 0) return ms_detail::run_start(p, {}, "intact", opts);

  std::vector<std::pair<std::string, ms_detail::Mask>> roster;
  roster.emplace_back("intact", ms_detail::Mask(nb, 0));
  if (opts.starts >= 2) roster.emplace_back("broken", ms_detail::Mask(nb, 1));
  std::mt19937_64 eng(opts.seed);
  for (int k = 0; k + 2 < opts.starts; ++k) {
    ms_detail::Mask m(nb);
    for (auto& bit : m) bit = char(eng() >> 63);
    roster.emplace_back("random" + std::to_string(k), std::move(m));
  }
  auto sols = parallel_map<MSSolution>(roster.size(), [&](std::size_t k) {
    return ms_detail::run_start(p, roster[k].second, roster[k].first, opts);
  });
  std::size_t best = 0;
  for (std::size_t k = 1; k < sols.size(); ++k)
    if (ms_detail::better(sols[k], sols[best])) best = k;
  return std::move(sols[best]);
}

/// Solves every crack subset with the sparse direct solver and returns the global minimum.
/// Ties within 1e-12 go to the lexicographically smallest crack set.
inline MSSolution brute_force_min(const MSProblem& p) {
  const Lattice& lat = p.lattice;
  const std::size_t nb = lat.breakable().size();
  if (nb > kBruteForceCap)
    throw TooManyBreakableBonds(std::to_string(nb) + " breakable bonds exceed the cap of " +
                                std::to_string(kBruteForceCap));
  const std::size_t count = std::size_t(1) << nb;
  auto totals = parallel_map<double>(count, [&](std::size_t mask) {
    ms_detail::Mask m(nb);
    for (std::size_t k = 0; k < nb; ++k) m[k] = char((mask >> k) & 1U);
    const CrackState crack = ms_detail::crack_from_mask(lat, m);
    const ConductanceField cond = make_conductance(lat, crack);
    const CorrectorField w = solve_corrector_direct(lat, cond, p.xi);
    return bulk_energy(lat, cond, w) + p.surface_weight * crack.measure;
  });
  const double lowest = *std::min_element(totals.begin(), totals.end());
  std::vector<BondId> best_set;
  bool have = false;
  for (std::size_t mask = 0; mask < count; ++mask) {
    if (totals[mask] > lowest + 1e-12) continue;
    ms_detail::Mask m(nb);
    for (std::size_t k = 0; k < nb; ++k) m[k] = char((mask >> k) & 1U);
    auto set = ms_detail::crack_from_mask(lat, m).broken;
    if (!have || std::lexicographical_compare(set.begin(), set.end(), best_set.begin(), best_set.end())) {
      best_set = std::move(set);
      have = true;
    }
  }
  MSSolution sol;
  sol.crack = make_crack(lat, best_set);
  const ConductanceField cond = make_conductance(lat, sol.crack);
  sol.corrector = solve_corrector_direct(lat, cond, p.xi);
  sol.breakdown.bulk = bulk_energy(lat, cond, sol.corrector);
  sol.breakdown.surface = p.surface_weight * sol.crack.measure;
  sol.breakdown.total = sol.breakdown.bulk + sol.breakdown.surface;
  sol.iterations = int(count);
  sol.converged = true;
  sol.start = "exhaustive";
  sol.trace = {sol.breakdown.total};
  return sol;
}

/// Clamps the total field xi.x + w into [lo, hi] on free nodes and re-expresses it as a
/// corrector. Fixed nodes keep their boundary value, so energy can only decrease when
/// [lo, hi] contains the boundary data. Under Periodic bc the total field is only single
/// valued for xi = 0.
inline CorrectorField truncate(const Lattice& lat, const CorrectorField& w, double lo, double hi) {
  if (!(lo <= hi)) throw ValidationError("truncate needs lo <= hi");
  if (lat.bc() == BoundaryCondition::Periodic && !(w.xi == Vec2{}))
    throw ValidationError("truncation of a periodic field needs xi = 0");
  CorrectorField out = w;
  const auto nodes = lat.nodes();
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    if (nodes[v].fixed) continue;
    const double affine = dot(w.xi, nodes[v].pos);
    const double u = affine + w.w[v];
    if (u < lo) out.w[v] = lo - affine;
    else if (u > hi) out.w[v] = hi - affine;
  }
  return out;
}

}  // namespace homog
