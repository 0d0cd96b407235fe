#pragma once

// Quadratic bulk energy of a lattice with fixed conductances and its minimizing corrector.
//
//   E(w) = sum_b c_b * kappa_b * (xi . d_b + w_j - w_i)^2
//
// The minimizer solves a graph-Laplacian system per connected component of the active
// bond graph, with Jacobi-preconditioned conjugate gradients.

#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "homog/error.hpp"
#include "homog/lattice.hpp"

namespace homog {

/// Per-bond conductance in {0, 1}.
struct ConductanceField {
  std::vector<double> c;
};

/// Corrector values on every lattice node (fixed nodes hold 0) plus the affine slope.
struct CorrectorField {
  Vec2 xi;
  std::vector<double> w;
};

/// Conductance 0 on Void bonds and on broken bonds, 1 elsewhere.
inline ConductanceField make_conductance(const Lattice& lat, const CrackState& crack = {}) {
  ConductanceField f;
  f.c.resize(lat.bond_count());
  for (std::size_t b = 0; b < f.c.size(); ++b) f.c[b] = lat.bonds()[b].kind == BondKind::Void ? 0.0 : 1.0;
  for (BondId b : crack.broken) f.c[b] = 0.0;
  return f;
}

inline CorrectorField zero_corrector(const Lattice& lat, Vec2 xi) {
  return {xi, std::vector<double>(lat.node_count(), 0.0)};
}

inline double bond_stretch(const Bond& b, const CorrectorField& w) {
  return dot(w.xi, b.d) + w.w[b.j] - w.w[b.i];
}

/// Raw (not density-normalized) bulk energy, summed in bond order.
inline double bulk_energy(const Lattice& lat, const ConductanceField& cond, const CorrectorField& w) {
  double e = 0.0;
  const auto bonds = lat.bonds();
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    if (cond.c[b] == 0.0) continue;
    const double s = bond_stretch(bonds[b], w);
    e += cond.c[b] * bonds[b].kappa * s * s;
  }
  return e;
}

struct SolveOptions {
  double tol = 1e-10;
  /// Defaults to 20*sqrt(unknowns) + 1000.
  std::optional<int> max_iter;
  bool record_residuals = false;
  /// Optional initial guess (same node layout).
  const CorrectorField* warm_start = nullptr;
};

struct SolveStats {
  int iterations = 0;
  int components = 0;
  int floating_components = 0;
  std::size_t unknowns = 0;
  /// Relative residual per CG iteration, concatenated over components.
  std::vector<double> residuals;
};

namespace solver_detail {

/// Connected components of the active bond graph restricted to free nodes.
struct Components {
  /// Component id per node; -1 for fixed nodes and for isolated free nodes.
  std::vector<int> comp;
  /// Members of each component in ascending node order.
  std::vector<std::vector<NodeId>> members;
  std::vector<bool> anchored;
  std::size_t unknowns = 0;
};

inline Components analyze(const Lattice& lat, const ConductanceField& cond) {
  const std::size_t nn = lat.node_count();
  std::vector<NodeId> parent(nn);
  std::iota(parent.begin(), parent.end(), NodeId(0));
  auto find = [&parent](NodeId v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  const auto nodes = lat.nodes();
  const auto bonds = lat.bonds();
  std::vector<bool> active(nn, false), touches_fixed(nn, false);
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    if (cond.c[b] == 0.0) continue;
    const Bond& bd = bonds[b];
    const bool fi = nodes[bd.i].fixed, fj = nodes[bd.j].fixed;
    if (fi && fj) continue;
    if (!fi) active[bd.i] = true;
    if (!fj) active[bd.j] = true;
    if (fi) touches_fixed[bd.j] = true;
    else if (fj) touches_fixed[bd.i] = true;
    else {
      NodeId a = find(bd.i), c = find(bd.j);
      if (a != c) parent[std::max(a, c)] = std::min(a, c);
    }
  }
  Components out;
  out.comp.assign(nn, -1);
  std::vector<int> root_comp(nn, -1);
  for (NodeId v = 0; v < nn; ++v) {
    if (nodes[v].fixed || !active[v]) continue;
    const NodeId r = find(v);
    if (root_comp[r] < 0) {
      root_comp[r] = int(out.members.size());
      out.members.emplace_back();
      out.anchored.push_back(false);
    }
    const int k = root_comp[r];
    out.comp[v] = k;
    out.members[k].push_back(v);
    if (touches_fixed[v]) out.anchored[k] = true;
    ++out.unknowns;
  }
  return out;
}

/// CSR Laplacian of one component with its right-hand side.
struct LocalSystem {
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> col;
  std::vector<double> val;
  std::vector<double> diag;
  std::vector<double> rhs;
};

inline LocalSystem assemble(const Lattice& lat, const ConductanceField& cond, Vec2 xi,
                            const std::vector<NodeId>& members, const std::vector<std::size_t>& local) {
  const auto nodes = lat.nodes();
  const auto bonds = lat.bonds();
  const std::size_t n = members.size();
  LocalSystem S;
  S.diag.assign(n, 0.0);
  S.rhs.assign(n, 0.0);
  S.row_ptr.assign(n + 1, 0);
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
  for (std::size_t r = 0; r < n; ++r) {
    const NodeId v = members[r];
    for (BondId b : lat.incident(v)) {
      const double c = cond.c[b];
      if (c == 0.0) continue;
      const Bond& bd = bonds[b];
      const double k = c * bd.kappa;
      const double q = k * dot(xi, bd.d);
      const NodeId other = bd.i == v ? bd.j : bd.i;
      S.rhs[r] += bd.i == v ? q : -q;
      S.diag[r] += k;
      if (!nodes[other].fixed) rows[r].push_back({local[other], -k});
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    S.row_ptr[r + 1] = S.row_ptr[r] + rows[r].size() + 1;
    S.col.push_back(r);
    S.val.push_back(S.diag[r]);
    for (auto [c, v] : rows[r]) {
      S.col.push_back(c);
      S.val.push_back(v);
    }
  }
  return S;
}

inline void matvec(const LocalSystem& S, const std::vector<double>& x, std::vector<double>& y) {
  const std::size_t n = S.diag.size();
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t k = S.row_ptr[r]; k < S.row_ptr[r + 1]; ++k) s += S.val[k] * x[S.col[k]];
    y[r] = s;
  }
}

inline void remove_mean(std::vector<double>& v) {
  if (v.empty()) return;
  double s = 0.0;
  for (double x : v) s += x;
  s /= double(v.size());
  for (double& x : v) x -= s;
}

inline double vdot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Jacobi-preconditioned CG. For floating components the system is singular with constant
/// kernel; residuals are projected onto mean-zero vectors.
inline int pcg(const LocalSystem& S, std::vector<double>& x, bool floating, double tol, int max_iter,
               std::vector<double>* history) {
  const std::size_t n = S.diag.size();
  std::vector<double> b = S.rhs;
  if (floating) remove_mean(b);
  const double bnorm = std::sqrt(vdot(b, b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return 0;
  }
  std::vector<double> r(n), z(n), p(n), Ap(n);
  matvec(S, x, Ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
  if (floating) remove_mean(r);
  double rnorm = std::sqrt(vdot(r, r));
  if (rnorm <= tol * bnorm) return 0;
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / S.diag[i];
  p = z;
  double rz = vdot(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    matvec(S, p, Ap);
    const double pAp = vdot(p, Ap);
    if (!(pAp > 0.0)) throw SolverError("conjugate gradients broke down (p'Ap <= 0)");
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    if (floating) remove_mean(r);
    rnorm = std::sqrt(vdot(r, r));
    if (history) history->push_back(rnorm / bnorm);
    if (rnorm <= tol * bnorm) return it;
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / S.diag[i];
    const double rz_new = vdot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw NoConvergence("CG did not reach tol " + std::to_string(tol) + " in " + std::to_string(max_iter) +
                      " iterations (relative residual " + std::to_string(rnorm / bnorm) + ")");
}

}  // namespace solver_detail

/// Minimizes bulk_energy over the corrector for fixed conductances.
///
/// Free nodes with no active bond are held at 0. Components with no path to a fixed node
/// (every component under Periodic bc) are solved up to a constant and returned with zero
/// mean.
inline CorrectorField solve_corrector(const Lattice& lat, const ConductanceField& cond, Vec2 xi,
                                      const SolveOptions& opts = {}, SolveStats* stats = nullptr) {
  if (!(opts.tol > 0.0)) throw ValidationError("solver tol must be positive");
  if (cond.c.size() != lat.bond_count()) throw ValidationError("conductance field does not match lattice");
  const auto comps = solver_detail::analyze(lat, cond);
  const int max_iter = opts.max_iter.value_or(int(20.0 * std::sqrt(double(comps.unknowns))) + 1000);

  CorrectorField out = zero_corrector(lat, xi);
  std::vector<std::size_t> local(lat.node_count(), 0);
  SolveStats st;
  st.unknowns = comps.unknowns;
  st.components = int(comps.members.size());
  for (std::size_t k = 0; k < comps.members.size(); ++k) {
    const auto& mem = comps.members[k];
    for (std::size_t r = 0; r < mem.size(); ++r) local[mem[r]] = r;
    const auto S = solver_detail::assemble(lat, cond, xi, mem, local);
    std::vector<double> x(mem.size(), 0.0);
    if (opts.warm_start)
      for (std::size_t r = 0; r < mem.size(); ++r) x[r] = opts.warm_start->w[mem[r]];
    const bool floating = !comps.anchored[k];
    if (floating) ++st.floating_components;
    st.iterations += solver_detail::pcg(S, x, floating, opts.tol, max_iter,
                                        opts.record_residuals ? &st.residuals : nullptr);
    if (floating) solver_detail::remove_mean(x);
    for (std::size_t r = 0; r < mem.size(); ++r) out.w[mem[r]] = x[r];
  }
  if (stats) *stats = std::move(st);
  return out;
}

/// Minimized bulk energy for the given conductances.
inline double min_bulk_energy(const Lattice& lat, const ConductanceField& cond, Vec2 xi, const SolveOptions& opts = {}) {
  return bulk_energy(lat, cond, solve_corrector(lat, cond, xi, opts));
}

}  // namespace homog
