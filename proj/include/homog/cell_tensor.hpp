#pragma once

// Subcritical limit density f0 and its matrix A0 from the periodic cell problem on the
// perforated cell: every Breakable bond (E voided, F cut) carries no conductance.

#include <array>
#include <cmath>
#include <cstdint>

#include "homog/geometry.hpp"
#include "homog/lattice.hpp"
#include "homog/parallel.hpp"
#include "homog/solver.hpp"

namespace homog {

/// Periodic t = 1 lattice with all Breakable bonds turned Void.
inline Lattice perforated_cell(const Geometry& geom, int m) {
  return build_lattice(geom, 1, m, BoundaryCondition::Periodic).perforated();
}

inline double f0(const Lattice& perforated, Vec2 xi, const SolveOptions& opts = {}) {
  return min_bulk_energy(perforated, make_conductance(perforated), xi, opts);
}

inline double f0(const Geometry& geom, Vec2 xi, int m, const SolveOptions& opts = {}) {
  return f0(perforated_cell(geom, m), xi, opts);
}

struct EffectiveTensor {
  std::array<std::array<double, 2>, 2> A0{};
  int m = 0;
  std::uint64_t fingerprint = 0;

  double quadratic(Vec2 xi) const {
    return A0[0][0] * xi.x * xi.x + 2.0 * A0[0][1] * xi.x * xi.y + A0[1][1] * xi.y * xi.y;
  }

  /// Eigenvalues in ascending order.
  std::array<double, 2> eigenvalues() const {
    const double a = A0[0][0], b = A0[0][1], d = A0[1][1];
    const double mean = 0.5 * (a + d);
    const double rad = std::hypot(0.5 * (a - d), b);
    return {mean - rad, mean + rad};
  }
};

/// A0 by polarization: A0[i][j] = (f0(e_i + e_j) - f0(e_i) - f0(e_j)) / 2.
inline EffectiveTensor effective_tensor(const Geometry& geom, int m, const SolveOptions& opts = {}) {
  const Lattice lat = perforated_cell(geom, m);
  const std::array<Vec2, 3> probes{kE1, kE2, kE1 + kE2};
  const auto vals = parallel_map<double>(probes.size(), [&](std::size_t k) { return f0(lat, probes[k], opts); });
  EffectiveTensor T;
  T.m = m;
  T.fingerprint = geom.fingerprint();
  T.A0[0][0] = vals[0];
  T.A0[1][1] = vals[1];
  T.A0[0][1] = T.A0[1][0] = 0.5 * (vals[2] - vals[0] - vals[1]);
  return T;
}

}  // namespace homog
