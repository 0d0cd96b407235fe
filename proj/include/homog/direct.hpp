#pragma once

// Sparse direct (LDL^T) corrector solve. Used by the exhaustive oracle so that its minima do
// not share the iterative solver's stopping rule.

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "homog/solver.hpp"

namespace homog {

inline CorrectorField solve_corrector_direct(const Lattice& lat, const ConductanceField& cond, Vec2 xi) {
  if (cond.c.size() != lat.bond_count()) throw ValidationError("conductance field does not match lattice");
  const auto comps = solver_detail::analyze(lat, cond);
  CorrectorField out = zero_corrector(lat, xi);
  std::vector<std::size_t> local(lat.node_count(), 0);
  for (std::size_t k = 0; k < comps.members.size(); ++k) {
    const auto& mem = comps.members[k];
    const bool floating = !comps.anchored[k];
    for (std::size_t r = 0; r < mem.size(); ++r) local[mem[r]] = r;
    const auto S = solver_detail::assemble(lat, cond, xi, mem, local);
    // Floating components are grounded at their first node; the constant is fixed afterwards.
    const std::size_t skip = floating ? 1 : 0;
    const std::size_t n = mem.size() - skip;
    std::vector<double> x(mem.size(), 0.0);
    if (n > 0) {
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(S.val.size());
      for (std::size_t r = skip; r < mem.size(); ++r)
        for (std::size_t q = S.row_ptr[r]; q < S.row_ptr[r + 1]; ++q)
          if (S.col[q] >= skip) trip.emplace_back(int(r - skip), int(S.col[q] - skip), S.val[q]);
      const int dim = static_cast<int>(n);
      Eigen::SparseMatrix<double> A(dim, dim);
      A.setFromTriplets(trip.begin(), trip.end());
      Eigen::VectorXd b(dim);
      for (std::size_t r = skip; r < mem.size(); ++r) b[int(r - skip)] = S.rhs[r];
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
      if (ldlt.info() != Eigen::Success) throw SolverError("sparse LDL^T factorization failed");
      const Eigen::VectorXd sol = ldlt.solve(b);
      for (std::size_t r = skip; r < mem.size(); ++r) x[r] = sol[int(r - skip)];
    }
    if (floating) solver_detail::remove_mean(x);
    for (std::size_t r = 0; r < mem.size(); ++r) out.w[mem[r]] = x[r];
  }
  return out;
}

}  // namespace homog
