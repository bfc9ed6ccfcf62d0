#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ebind/asymptotics.hpp"
#include "ebind/presets.hpp"

using namespace ebind;

namespace {

const std::vector<double> kDecade = {1.0, 1.5, 2.0, 3.0, 4.5, 6.5, 10.0};

GridSpec line(double extent, double h) { return GridSpec{{GridSpec::axis_for(extent, h)}}; }

}  // namespace

TEST(FitSlope, RecoversExactCoefficients) {
    std::vector<double> a = {1.0, 2.0, 4.0, 8.0}, e;
    for (double x : a) e.push_back(x * x * (-3.0 + 0.5 / x - 0.25 / (x * x)));
    auto c = fit_slope(a, e, SlopeBasis::inverse_alpha);
    EXPECT_NEAR(c[0], -3.0, 1e-12);
    EXPECT_NEAR(c[1], 0.5, 1e-11);
    EXPECT_NEAR(c[2], -0.25, 1e-11);
    e.clear();
    for (double x : a) e.push_back(x * x * (1.0 + 2.0 / (x * x)));
    c = fit_slope(a, e, SlopeBasis::inverse_alpha_squared);
    EXPECT_NEAR(c[0], 1.0, 1e-12);
    EXPECT_NEAR(c[1], 2.0, 1e-11);
    EXPECT_THROW(fit_slope({1.0, 2.0}, {1.0, 2.0}, SlopeBasis::inverse_alpha), domain_error);
}

TEST(SplitSlopes, ThreeBodyPrediction) {
    EXPECT_EQ(predicted_split_slope(3, 0, -1.0), -6.0);
    EXPECT_EQ(predicted_split_slope(3, 1, -1.0), -2.0);
    EXPECT_EQ(predicted_split_slope(3, 2, -1.0), -2.0);
    EXPECT_EQ(predicted_minimizer_size(3, -1.0), 0u);
    // repulsive kernels favour an even split
    EXPECT_EQ(predicted_minimizer_size(4, 1.0), 2u);
    EXPECT_EQ(slope_target(3, -1.0, true), -4.0);
}

TEST(ClusterSlope, SingleParticleHasZeroTarget) {
    auto s = presets::enhanced_binding_chain(2);
    auto r = cluster_energy_slope(s, {0}, {1.0, 2.0, 4.0});
    EXPECT_EQ(r.target, 0.0);
    EXPECT_NEAR(r.slope_fit, 0.0, 1e-14);
}

TEST(ClusterSlope, PairLimitAndHarmonicCorrection) {
    auto s = presets::enhanced_binding_chain(2);
    auto r = cluster_energy_slope(s, {0, 1}, kDecade);
    EXPECT_DOUBLE_EQ(r.target, -2.0);
    EXPECT_LT(r.rel_error, 0.01);
    // 2 alpha^2 W near contact is -2 alpha^2 + alpha^2 y^2: zero point alpha
    EXPECT_NEAR(r.coefficients[1], 1.0, 0.02);
    EXPECT_TRUE(r.converged);
}

TEST(ClusterSlope, ThreeBodyFullAndPairRemoved) {
    auto s = presets::enhanced_binding_chain(3);
    SlopeGrid g;
    g.spacing = 0.15;
    auto full = cluster_energy_slope(s, {0, 1, 2}, kDecade, g);
    EXPECT_DOUBLE_EQ(full.target, -6.0);
    EXPECT_LT(full.rel_error, 0.01);
    SlopeOptions o;
    o.removed_pair = std::make_pair<std::size_t, std::size_t>(0, 1);
    auto removed = cluster_energy_slope(s, {0, 1, 2}, kDecade, g, o);
    EXPECT_DOUBLE_EQ(removed.target, -4.0);
    EXPECT_LT(removed.rel_error, 0.01);
}

TEST(ClusterSlope, CoarseLatticeIsAResolutionError) {
    auto s = presets::enhanced_binding_chain(2);
    SlopeGrid g;
    g.spacing = 0.5;
    EXPECT_THROW(cluster_energy_slope(s, {0, 1}, kDecade, g), resolution_error);
    SlopeGrid small;
    small.relative_extent = 1.0;
    small.spacing = 0.02;
    EXPECT_THROW(cluster_energy_slope(s, {0, 1}, kDecade, small), resolution_error);
}

TEST(ClusterSlope, RejectsBadCouplingLists) {
    auto s = presets::enhanced_binding_chain(2);
    EXPECT_THROW(cluster_energy_slope(s, {0, 1}, {1.0, 2.0}), domain_error);
    EXPECT_THROW(cluster_energy_slope(s, {0, 1}, {1.0, 3.0, 2.0}), domain_error);
}

TEST(Concentration, PointBump) {
    GridSpec g = line(2.0, 0.1);
    std::vector<double> u(g.size(), 0.0);
    u[g.size() / 2] = 1.0;
    auto p = concentration_profile(u, g, {0.1, 0.5, 1.0});
    for (double m : p.outside_mass) EXPECT_EQ(m, 0.0);
    EXPECT_EQ(p.second_moment, 0.0);
}

TEST(Concentration, UniformVectorMatchesVolumeRatio) {
    GridSpec g1 = line(5.0, 0.01);
    std::vector<double> u1(g1.size(), 1.0);
    auto p1 = concentration_profile(u1, g1, {1.0, 2.5});
    // each node carries a cell of width h, so the box is 2L + h wide
    EXPECT_NEAR(p1.outside_mass[0], 1.0 - 2.0 / 10.01, 1e-3);
    EXPECT_NEAR(p1.outside_mass[1], 1.0 - 5.0 / 10.01, 1e-3);

    GridSpec g2 = GridSpec{{GridSpec::axis_for(2.0, 0.01), GridSpec::axis_for(2.0, 0.01)}};
    std::vector<double> u2(g2.size(), 0.3);
    auto p2 = concentration_profile(u2, g2, {1.0, 2.0});
    EXPECT_NEAR(p2.outside_mass[0], 1.0 - std::numbers::pi / (4.01 * 4.01), 1e-3);
    EXPECT_NEAR(p2.outside_mass[1], 1.0 - 4.0 * std::numbers::pi / (4.01 * 4.01), 1e-3);
    EXPECT_THROW(concentration_profile(u2, g2, {2.5}), domain_error);
}

TEST(Concentration, ScanConcentratesAndSmearingConverges) {
    auto s = presets::enhanced_binding_chain(2);
    auto scan = concentration_scan(s, {1.0, 2.0, 4.0, 8.0, 16.0}, {0.5}, {-3.0, -1.5, 0.0, 1.5, 3.0});
    for (std::size_t i = 1; i < scan.size(); ++i) {
        EXPECT_LE(scan[i].profile.outside_mass[0], scan[i - 1].profile.outside_mass[0] + 1e-3);
        EXPECT_LT(scan[i].smeared.sup_deviation, scan[i - 1].smeared.sup_deviation);
        EXPECT_LT(scan[i].profile.second_moment, scan[i - 1].profile.second_moment);
    }
    EXPECT_LT(scan.back().profile.outside_mass[0], 0.05);
}

TEST(Smeared, PointMassAndZeroPotential) {
    auto s = presets::enhanced_binding_chain(3);
    GridSpec rel = GridSpec{{GridSpec::axis_for(1.0, 0.1), GridSpec::axis_for(1.0, 0.1)}};
    std::vector<double> u(rel.size(), 0.0);
    u[rel.size() / 2] = 2.0;
    const std::vector<double> xs = {-2.0, -0.3, 0.0, 1.1};
    auto sm = smeared_potential(s.external, u, rel, 1, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < 3; ++j)
            EXPECT_NEAR(sm.per_particle[j][i], evaluate(s.external[j], xs[i]), 1e-15);
        EXPECT_NEAR(sm.sum[i], 3.0 * evaluate(s.external[0], xs[i]), 1e-14);
    }
    EXPECT_NEAR(sm.sup_deviation, 0.0, 1e-14);

    std::vector<double> spread(rel.size(), 1.0);
    auto zero = smeared_potential(std::vector<RadialPotential>(3, ZeroPotential{}), spread, rel, 1, xs);
    for (double v : zero.sum) EXPECT_EQ(v, 0.0);
}

TEST(Variational, DecompositionMatchesAssembledForm) {
    auto s = presets::enhanced_binding_chain(2);
    GridSpec com = line(10.0, 0.1);
    auto v = com_trial(s, com);
    for (double a : {2.0, 6.0}) {
        auto rg = relative_ground(s, a);
        auto b = variational_upper_bound(s, a, com, v.vector, rg.grid, rg.u);
        EXPECT_LT(b.decomposition_error, 1e-8);
        EXPECT_NEAR(b.E0, rg.energy, 1e-8);
        EXPECT_TRUE(b.trial_negative);
        EXPECT_LT(b.bound, b.E0);
    }
}

TEST(Variational, ZeroPotentialBoundsAboveRelativeEnergy) {
    auto s = presets::enhanced_binding_chain(2);
    for (auto& v : s.external) v = ZeroPotential{};
    GridSpec com = line(5.0, 0.1);
    std::vector<double> v(com.size());
    GridCursor c(com);
    for (std::size_t i = 0; i < v.size(); ++i, c.next()) v[i] = std::exp(-c.coords()[0] * c.coords()[0]);
    auto rg = relative_ground(s, 3.0);
    auto b = variational_upper_bound(s, 3.0, com, v, rg.grid, rg.u);
    EXPECT_EQ(b.potential, 0.0);
    EXPECT_GE(b.bound, b.E0);
    EXPECT_NEAR(b.bound, b.kinetic_com + b.E0, 1e-12);
    EXPECT_FALSE(b.trial_negative);
}

TEST(Variational, BoundsTheAssembledGroundEnergy) {
    auto s = presets::enhanced_binding_chain(2);
    const double a = 3.0;
    GridSpec com = line(8.0, 0.1);
    auto v = com_trial(s, com);
    auto rg = relative_ground(s, a);
    auto b = variational_upper_bound(s, a, com, v.vector, rg.grid, rg.u);
    GridSpec full = com;
    for (const auto& ax : rg.grid.axes) full.axes.push_back(ax);
    BuildOptions bo;
    bo.alpha = a;
    auto h = build_jacobi_hamiltonian(s, {0, 1}, full, true, true, bo);
    SolverOptions so;
    so.tol = 1e-9;
    const auto g = ground_state(h, so);
    EXPECT_GE(b.bound, g.energy - 1e-8);
}
