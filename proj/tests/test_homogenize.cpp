#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "homog/homogenize.hpp"
#include "homog/io.hpp"
#include "support.hpp"

using namespace homog;
using testing_support::disk25;
using testing_support::slit;

namespace {

Fixture fixture(const std::string& name) { return load_fixture(testing_support::fixture_dir() / "oracle" / (name + ".json")); }

// Regression value: lambda^2 E(e1) - E(20 e1) on disk25, t = 2, m = 16, starts = 4.
constexpr double kDiskDeficit20 = 130.825017;

}  // namespace

TEST(GOfT, ZeroLoad) {
  const auto r = g_of_t(disk25(), {0.0, 0.0}, 2, 16);
  EXPECT_EQ(r.g_hat, 0.0);
  EXPECT_EQ(r.broken, 0u);
}

TEST(GOfT, NeverAboveElasticBound) {
  for (const Vec2 xi : {Vec2{1.0, 0.0}, Vec2{4.0, 1.0}, Vec2{10.0, 0.0}}) {
    for (int t : {1, 2}) {
      const auto r = g_of_t(disk25(), xi, t, 16);
      EXPECT_LE(r.g_hat, norm2(xi) + 1e-9);
      EXPECT_LE(r.g_hat, g_elastic(disk25(), xi, t, 16) + 1e-9);
      EXPECT_EQ(r.g_hat, r.breakdown.total);
      EXPECT_EQ(r.surface_weight, 1.0);
    }
  }
}

TEST(GOfT, MatchesOracleOnSlitFamily) {
  for (const char* name : {"slit6", "slit6_t2"}) {
    const Fixture f = fixture(name);
    const Geometry g = validate(f.geometry);
    const auto heur = g_of_t(g, f.xi, f.t, f.m);
    const auto exact = g_of_t(g, f.xi, f.t, f.m, {.ms = {}, .exact = true});
    EXPECT_NEAR(heur.g_hat, exact.g_hat, 1e-9) << name;
    for (const auto& e : f.expected)
      if (e.surface_weight == 1.0) {
        EXPECT_NEAR(exact.g_hat * f.t * f.t, e.total, 1e-9) << name;
      }
  }
}

TEST(EstimateFhom, EmptyGeometryIsElastic) {
  const Vec2 xi{1.0, 2.0};
  const auto R = estimate_fhom(testing_support::empty_geometry(), xi, {1, 2, 4}, 16);
  EXPECT_NEAR(R.fhom_estimate, 5.0, 1e-9);
  EXPECT_LE(R.cauchy_gap, 1e-9);
  EXPECT_TRUE(R.sandwich_ok);
  EXPECT_EQ(R.records.size(), 3u);
}

TEST(EstimateFhom, BoundsAndReportShape) {
  const Vec2 xi{3.0, 0.0};
  const auto R = estimate_fhom(disk25(), xi, {1, 2}, 18);
  EXPECT_EQ(R.upper, std::min(norm2(xi), R.f0_value + disk25().perim_E()));
  EXPECT_EQ(R.fhom_estimate, R.records.back().g_hat);
  EXPECT_EQ(R.cauchy_gap, std::abs(R.records[1].g_hat - R.records[0].g_hat));
  EXPECT_EQ(R.signed_gap, R.fhom_estimate - R.f0_value);
  EXPECT_FALSE(R.mesh_indicator.has_value());   // m/2 = 9 violates m delta >= 2
  EXPECT_DOUBLE_EQ(R.slack, 0.05 * 9.0);
}

TEST(EstimateFhom, SmallLoadDoesNotCrack) {
  const auto R = estimate_fhom(disk25(), {0.1, 0.0}, {1, 2, 4}, 16);
  for (const auto& r : R.records) EXPECT_EQ(r.crack_measure, 0.0) << r.t;
}

TEST(EstimateFhom, RejectsBadTList) {
  EXPECT_THROW(estimate_fhom(disk25(), kE1, {2}, 16), ValidationError);
  EXPECT_THROW(estimate_fhom(disk25(), kE1, {2, 2}, 16), ValidationError);
  EXPECT_THROW(estimate_fhom(disk25(), kE1, {1, 2}, 8), ResolutionTooCoarse);
}

TEST(HomogeneityProbe, UnitLambdaAndSides) {
  const auto P = homogeneity_probe(disk25(), kE1, {0.5, 1.0, 2.0}, 1, 16);
  ASSERT_EQ(P.rows.size(), 3u);
  EXPECT_EQ(P.rows[1].e_lambda, P.rows[1].lambda2_e);
  EXPECT_EQ(P.rows[1].side, "=");
  EXPECT_FALSE(P.non2homog_detected);
  EXPECT_THROW(homogeneity_probe(disk25(), kE1, {0.0}, 1, 16), ValidationError);
}

TEST(HomogeneityProbe, DiskLargeLoadDetected) {
  const auto P = homogeneity_probe(disk25(), kE1, {20.0}, 2, 16);
  EXPECT_TRUE(P.non2homog_detected);
  EXPECT_NEAR(P.max_deficit, kDiskDeficit20, 1e-6);
  EXPECT_GT(P.max_deficit, 0.01 * P.rows[0].lambda2_e);
}

TEST(HomogeneityProbe, ExactOnOracleFixtures) {
  for (const char* name : {"slit6", "rect6", "bend6"}) {
    const Fixture f = fixture(name);
    const auto P = homogeneity_probe(validate(f.geometry), f.xi, {0.5, 2.0, 4.0}, f.t, f.m, {.ms = {}, .exact = true});
    EXPECT_GE(P.rows[0].e_lambda, P.rows[0].lambda2_e - 1e-12) << name;
    EXPECT_LE(P.rows[1].e_lambda, P.rows[1].lambda2_e + 1e-12) << name;
    EXPECT_LE(P.rows[2].e_lambda, P.rows[2].lambda2_e + 1e-12) << name;
  }
}

TEST(RegimeSchedule, LabelsAndWeights) {
  EXPECT_EQ((RegimeSchedule{1.0, 2.0}.label()), "subcritical");
  EXPECT_EQ((RegimeSchedule{1.0, 1.0}.label()), "critical");
  EXPECT_EQ((RegimeSchedule{1.0, 0.5}.label()), "supercritical");
  EXPECT_EQ((RegimeSchedule{1.0, 1.0}.weight(8)), 1.0);
  EXPECT_DOUBLE_EQ((RegimeSchedule{3.0, 2.0}.weight(4)), 3.0 / 4.0);
  EXPECT_DOUBLE_EQ((RegimeSchedule{3.0, 2.0}.alpha(0.25)) / 0.25 * 4.0, 3.0 / 4.0 * 4.0);
}

TEST(RegimeSweep, EpsMustBeReciprocalInteger) {
  EXPECT_THROW(regime_sweep(disk25(), kE1, {1.0, 1.0}, {0.3}, 16), ValidationError);
  EXPECT_EQ(eps_to_t(0.125), 8);
}

TEST(RegimeSweep, CriticalReproducesGOfT) {
  const auto S = regime_sweep(disk25(), {4.0, 0.0}, {1.0, 1.0}, {0.5, 0.25}, 16);
  for (const auto& p : S.points) {
    const auto r = g_of_t(disk25(), {4.0, 0.0}, p.record.t, 16);
    EXPECT_EQ(p.record.g_hat, r.g_hat);
    EXPECT_EQ(p.record.breakdown, r.breakdown);
    EXPECT_EQ(p.record.crack_measure, r.crack_measure);
  }
}

TEST(RegimeSweep, SupercriticalHealsSubcriticalDamages) {
  const auto sup = regime_sweep(disk25(), kE1, {1.0, 0.5}, {0.5, 0.25}, 16);
  EXPECT_EQ(sup.trend, "elastic-limit");
  EXPECT_EQ(sup.points.back().record.crack_measure, 0.0);
  const auto sub = regime_sweep(disk25(), {3.0, 0.0}, {1.0, 2.0}, {0.5, 0.25, 0.125}, 16);
  EXPECT_EQ(sub.trend, "damaged-limit");
  for (const auto& p : sub.points) {
    EXPECT_GT(p.record.crack_measure, 0.0);
    EXPECT_LE(p.n_bad, std::size_t(p.record.t * p.record.t));
  }
}

TEST(Appendix, SlitRatiosAndFit) {
  const Geometry g = slit();
  std::vector<double> betas;
  for (double f : {0.5, 0.25, 0.125, 0.0625}) betas.push_back(f * g.length_F());
  const auto R = appendix_verify(g, {0.0, 4.0}, betas, 24);
  EXPECT_EQ(R.candidates, "exhaustive");
  ASSERT_EQ(R.rows.size(), 4u);
  for (std::size_t k = 0; k < R.rows.size(); ++k) {
    const auto& r = R.rows[k];
    EXPECT_LE(r.ratio, 1.0);
    EXPECT_LE(r.crack_measure, r.beta + 1e-12);
    EXPECT_GE(r.ratio, 1.0 - r.omega - 1e-6);
    if (k > 0) {
      EXPECT_GE(r.ratio, R.rows[k - 1].ratio - 1e-9);
    }
  }
  EXPECT_EQ(R.rows.back().ratio, 1.0);   // beta < h forces the empty crack
  EXPECT_LT(R.rows.front().ratio, 1.0);
  EXPECT_LE(R.residual, 1e-2);
  EXPECT_GE(R.c, R.c_least_squares);
}

TEST(Appendix, IntactWhenNothingPays) {
  const auto R = appendix_verify(slit(), {0.0, 1.0}, {0.2, 0.1}, 24);
  for (const auto& r : R.rows) EXPECT_EQ(r.ratio, 1.0);
  EXPECT_EQ(R.c, 0.0);
  EXPECT_EQ(R.residual, 0.0);
}

TEST(Appendix, RosterPathOnLargeBreakableSet) {
  const auto R = appendix_verify(disk25(), {6.0, 0.0}, {1.0, 0.5, 0.01}, 16);
  EXPECT_EQ(R.candidates, "roster");
  for (const auto& r : R.rows) EXPECT_LE(r.ratio, 1.0);
  EXPECT_EQ(R.rows.back().ratio, 1.0);
}

TEST(Appendix, Validation) {
  EXPECT_THROW(appendix_verify(slit(), kE2, {0.1, 0.2}, 24), ValidationError);
  EXPECT_THROW(appendix_verify(slit(), kE2, {}, 24), ValidationError);
}
