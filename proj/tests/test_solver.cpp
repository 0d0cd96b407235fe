#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "homog/cell_tensor.hpp"
#include "homog/solver.hpp"
#include "support.hpp"

using namespace homog;
using testing_support::disk25;

namespace {

Lattice empty_periodic(int m) { return build_lattice(testing_support::empty_geometry(), 1, m, BoundaryCondition::Periodic); }

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(BulkEnergy, Examples) {
  const Lattice L = empty_periodic(12);
  const auto c = make_conductance(L);
  EXPECT_EQ(bulk_energy(L, c, zero_corrector(L, {0.0, 0.0})), 0.0);
  EXPECT_NEAR(bulk_energy(L, c, zero_corrector(L, kE1)), 1.0, 1e-14);
  EXPECT_NEAR(bulk_energy(L, c, zero_corrector(L, {1.0, 1.0})), 2.0, 1e-14);
}

TEST(BulkEnergy, IntactDirichletIsAffine) {
  const Lattice L = build_lattice(disk25(), 3, 16, BoundaryCondition::DirichletZero);
  EXPECT_NEAR(bulk_energy(L, make_conductance(L), zero_corrector(L, {0.6, -0.8})), 9.0, 1e-12);
}

TEST(SolveCorrector, EmptyPeriodicKeepsAffineField) {
  const Lattice L = empty_periodic(16);
  const Vec2 xi{3.0, 4.0};
  const auto w = solve_corrector(L, make_conductance(L), xi);
  for (double v : w.w) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_NEAR(bulk_energy(L, make_conductance(L), w), 25.0, 1e-10);
}

TEST(SolveCorrector, PeriodicGaugeHasZeroMean) {
  const Lattice L = perforated_cell(disk25(), 32);
  const auto cond = make_conductance(L);
  const auto w = solve_corrector(L, cond, {1.0, 0.3});
  const auto comps = solver_detail::analyze(L, cond);
  double s = 0.0;
  for (NodeId v : comps.members.at(0)) s += w.w[v];
  EXPECT_NEAR(s, 0.0, 1e-10);
}

TEST(SolveCorrector, VoidedDiskBelowVolumeBound) {
  const Lattice L = perforated_cell(disk25(), 64);
  const double e = min_bulk_energy(L, make_conductance(L), kE1);
  EXPECT_LT(e, 1.0 - std::numbers::pi / 16.0);
}

// Dense oracle: assemble the normal equations of the 25 free nodes directly from the bond list
// and solve with a dense LDL^T.
TEST(SolveCorrector, MatchesDenseSolveWithOneBrokenBond) {
  const Lattice L = build_lattice(testing_support::empty_geometry(0.45), 1, 5, BoundaryCondition::DirichletZero);
  ASSERT_EQ(L.free_count(), 25u);
  auto cond = make_conductance(L);
  BondId cut = 0;
  for (BondId b = 0; b < L.bond_count(); ++b)
    if (norm(L.bonds()[b].mid - Vec2{0.5, 0.4}) < 1e-12) cut = b;
  ASSERT_NEAR(L.bonds()[cut].d.y, 0.2, 1e-15);
  cond.c[cut] = 0.0;
  const Vec2 xi = kE1;

  std::vector<int> idx(L.node_count(), -1);
  int n = 0;
  for (NodeId v = 0; v < L.node_count(); ++v)
    if (!L.nodes()[v].fixed) idx[v] = n++;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (BondId b = 0; b < L.bond_count(); ++b) {
    if (cond.c[b] == 0.0) continue;
    const Bond& bd = L.bonds()[b];
    const double k = bd.kappa, s = xi.x * bd.d.x + xi.y * bd.d.y;
    const int i = idx[bd.i], j = idx[bd.j];
    if (i >= 0) A(i, i) += k, rhs[i] += k * s;
    if (j >= 0) A(j, j) += k, rhs[j] -= k * s;
    if (i >= 0 && j >= 0) A(i, j) -= k, A(j, i) -= k;
  }
  const Eigen::VectorXd ref = A.ldlt().solve(rhs);
  const auto w = solve_corrector(L, cond, xi, {.tol = 1e-13});
  for (NodeId v = 0; v < L.node_count(); ++v)
    if (idx[v] >= 0) EXPECT_NEAR(w.w[v], ref[idx[v]], 1e-11);
}

TEST(SolveCorrector, OptimalAgainstRandomPerturbations) {
  const Lattice L = build_lattice(disk25(), 2, 16, BoundaryCondition::DirichletZero);
  auto cond = make_conductance(L);
  std::mt19937_64 eng(5);
  for (BondId b : L.breakable())
    if (eng() % 3 == 0) cond.c[b] = 0.0;
  const Vec2 xi{0.8, -0.4};
  const auto w = solve_corrector(L, cond, xi);
  const double e = bulk_energy(L, cond, w);
  std::normal_distribution<double> N(0.0, 1.0);
  for (double scale : {1e-1, 1e-3, 1e-5}) {
    for (int trial = 0; trial < 20; ++trial) {
      auto v = w;
      for (NodeId k = 0; k < L.node_count(); ++k)
        if (!L.nodes()[k].fixed) v.w[k] += scale * N(eng);
      EXPECT_LE(e, bulk_energy(L, cond, v) * (1.0 + 1e-9));
    }
  }
}

TEST(SolveCorrector, LinearInXi) {
  const Lattice L = perforated_cell(testing_support::slit(), 32);
  const auto cond = make_conductance(L);
  const Vec2 a{0.3, 1.1}, b{-0.7, 0.2};
  const double lhs = min_bulk_energy(L, cond, a + b) + min_bulk_energy(L, cond, a - b);
  const double rhs = 2.0 * min_bulk_energy(L, cond, a) + 2.0 * min_bulk_energy(L, cond, b);
  EXPECT_LT(rel(lhs, rhs), 1e-6);
  const auto wa = solve_corrector(L, cond, a);
  const auto w2a = solve_corrector(L, cond, 2.0 * a);
  for (NodeId v = 0; v < L.node_count(); ++v) EXPECT_NEAR(w2a.w[v], 2.0 * wa.w[v], 1e-7);
}

TEST(SolveCorrector, RemovingBondsNeverRaisesEnergy) {
  const Lattice L = build_lattice(disk25(), 1, 16, BoundaryCondition::DirichletZero);
  auto cond = make_conductance(L);
  const Vec2 xi{1.0, 0.5};
  double prev = min_bulk_energy(L, cond, xi);
  std::mt19937_64 eng(9);
  auto br = std::vector<BondId>(L.breakable().begin(), L.breakable().end());
  std::shuffle(br.begin(), br.end(), eng);
  for (std::size_t k = 0; k < br.size(); k += 3) {
    cond.c[br[k]] = 0.0;
    const double e = min_bulk_energy(L, cond, xi);
    EXPECT_LE(e, prev + 1e-10);
    prev = e;
  }
}

TEST(SolveCorrector, IsolatedNodesHeldAtZeroAndFloatingGauge) {
  // Cutting every breakable disk bond under Dirichlet bc leaves interior nodes isolated.
  const Lattice L = build_lattice(disk25(), 1, 16, BoundaryCondition::DirichletZero);
  auto cond = make_conductance(L);
  for (BondId b : L.breakable()) cond.c[b] = 0.0;
  SolveStats st;
  const auto w = solve_corrector(L, cond, kE1, {}, &st);
  const auto comps = solver_detail::analyze(L, cond);
  int isolated = 0;
  for (NodeId v = 0; v < L.node_count(); ++v)
    if (!L.nodes()[v].fixed && comps.comp[v] < 0) {
      ++isolated;
      EXPECT_EQ(w.w[v], 0.0);
    }
  EXPECT_GT(isolated, 0);
  EXPECT_EQ(st.floating_components, 0);
}

TEST(SolveCorrector, ResidualHistoryAndNoConvergence) {
  const Lattice L = perforated_cell(disk25(), 32);
  const auto cond = make_conductance(L);
  SolveOptions o;
  o.record_residuals = true;
  SolveStats st;
  solve_corrector(L, cond, kE1, o, &st);
  ASSERT_FALSE(st.residuals.empty());
  EXPECT_LE(st.residuals.back(), 1e-10);
  EXPECT_EQ(int(st.residuals.size()), st.iterations);
  o.max_iter = 2;
  EXPECT_THROW(solve_corrector(L, cond, kE1, o), NoConvergence);
  o.max_iter.reset();
  o.tol = 0.0;
  EXPECT_THROW(solve_corrector(L, cond, kE1, o), ValidationError);
}

TEST(SolveCorrector, WarmStartGivesSameAnswer) {
  const Lattice L = perforated_cell(disk25(), 32);
  const auto cond = make_conductance(L);
  const auto w = solve_corrector(L, cond, kE1);
  SolveOptions o;
  o.warm_start = &w;
  SolveStats st;
  const auto w2 = solve_corrector(L, cond, kE1, o, &st);
  EXPECT_LE(st.iterations, 2);
  for (NodeId v = 0; v < L.node_count(); ++v) EXPECT_NEAR(w.w[v], w2.w[v], 1e-9);
}
