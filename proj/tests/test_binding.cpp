#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ebind/binding.hpp"
#include "ebind/presets.hpp"

using namespace ebind;

namespace {

GridRecipe coarse(double extent = 10.0, double rel = 10.0, double h = 0.2) {
    GridRecipe g;
    g.extent = extent;
    g.relative_extent = rel;
    g.spacing = h;
    g.solver.tol = 1e-9;
    return g;
}

ParticleSystem free_chain(std::size_t n, double alpha = 1.0) {
    auto s = presets::enhanced_binding_chain(n, alpha);
    for (auto& v : s.external) v = ZeroPotential{};
    return s;
}

}  // namespace

TEST(ClusterEnergy, TrivialClusters) {
    auto s = presets::enhanced_binding_chain(3);
    EXPECT_EQ(cluster_energy(s, {}, 2.0, coarse(), true).energy, 0.0);
    EXPECT_EQ(cluster_energy(s, {1}, 2.0, coarse(), false).energy, 0.0);
    EXPECT_THROW(cluster_energy(s, {2, 1}, 2.0, coarse(), false), domain_error);
}

TEST(ClusterEnergy, NonbindingSingleParticleIsABoxEffect) {
    auto s = presets::enhanced_binding_chain(1);
    const double e10 = cluster_energy(s, {0}, std::nullopt, coarse(10.0), true).energy;
    const double e20 = cluster_energy(s, {0}, std::nullopt, coarse(20.0), true).energy;
    EXPECT_GT(e20, 0.0);
    EXPECT_LT(e20, e10);
    EXPECT_LT(e20, 0.03);
}

TEST(ClusterEnergy, LargeCouplingPairSlope) {
    auto s = free_chain(2);
    for (double alpha : {4.0, 8.0}) {
        GridRecipe g = coarse(5.0, 4.0, 0.04);
        const double e = cluster_energy(s, {0, 1}, alpha, g, false).energy;
        // harmonic zero point of 2 alpha^2 W near the bottom adds about alpha
        EXPECT_NEAR(e / (alpha * alpha), -2.0 + 1.0 / alpha, 0.3 / alpha);
    }
}

TEST(ClusterEnergy, RichardsonCombinesTwoBoxes) {
    auto s = presets::enhanced_binding_chain(1);
    GridRecipe g = coarse(6.0);
    g.protocol = BoxProtocol::richardson;
    auto e = cluster_energy(s, {0}, std::nullopt, g, true);
    ASSERT_EQ(e.box_energies.size(), 2u);
    EXPECT_DOUBLE_EQ(e.energy, (4.0 * e.box_energies[1] - e.box_energies[0]) / 3.0);
    EXPECT_EQ(e.grids[1].axes[0].extent, 12.0);
}

TEST(Threshold, ZeroCouplingNonbinding) {
    auto s = presets::enhanced_binding_chain(2);
    auto th = two_cluster_threshold(s, 0.0, coarse(20.0, 20.0));
    EXPECT_NEAR(th.Xi, 0.0, 0.01);
    EXPECT_GE(th.Xi, 0.0);
}

TEST(Threshold, SymmetricPairEvaluatesTwoSplits) {
    auto s = presets::enhanced_binding_chain(2);
    auto th = two_cluster_threshold(s, 0.5, coarse());
    EXPECT_TRUE(th.pruned);
    ASSERT_EQ(th.rows.size(), 2u);
    EXPECT_TRUE(th.rows[0].beta.empty());
    EXPECT_EQ(th.rows[1].beta, std::vector<std::size_t>{0});
    EXPECT_EQ(th.rows[1].complement, std::vector<std::size_t>{1});

    ThresholdOptions full;
    full.use_symmetry = false;
    auto all = two_cluster_threshold(s, 0.5, coarse(), full);
    EXPECT_EQ(all.rows.size(), 3u);
    EXPECT_NEAR(all.Xi, th.Xi, 1e-8);
    EXPECT_EQ(all.minimizer, th.minimizer);
}

TEST(Threshold, MinimumPropertyAndLexicographicRows) {
    auto s = presets::enhanced_binding_chain(3, 0.7);
    s.couplings = {0.7, 0.9, 0.7};
    auto th = two_cluster_threshold(s, std::nullopt, coarse(6.0, 6.0, 0.3));
    EXPECT_FALSE(th.pruned);
    ASSERT_EQ(th.rows.size(), 7u);
    for (std::size_t i = 1; i < th.rows.size(); ++i) EXPECT_LT(th.rows[i - 1].beta, th.rows[i].beta);
    for (const auto& r : th.rows) {
        EXPECT_LE(th.Xi, r.total);
        EXPECT_DOUBLE_EQ(r.total, r.E_V_beta + r.E_0_complement);
    }
}

TEST(Threshold, ThreeBodyPrunedMatchesFull) {
    auto s = presets::enhanced_binding_chain(3);
    ThresholdOptions full;
    full.use_symmetry = false;
    full.threads = 2;
    auto g = coarse(5.0, 5.0, 0.3);
    auto a = two_cluster_threshold(s, 1.5, g);
    auto b = two_cluster_threshold(s, 1.5, g, full);
    EXPECT_EQ(a.rows.size(), 3u);
    EXPECT_NEAR(a.Xi, b.Xi, 1e-7);
    EXPECT_EQ(a.minimizer, b.minimizer);
}

TEST(Threshold, AttractiveClustersStayBelowZero) {
    // every split is nonpositive when all wells attract
    ParticleSystem s = presets::enhanced_binding_chain(2);
    for (auto& v : s.external) v = gaussian_well(0.5, 1.0);
    auto th = two_cluster_threshold(s, 0.6, coarse(12.0, 12.0));
    for (const auto& r : th.rows) EXPECT_LE(r.total, 1e-3);
}

TEST(BindingGap, ZeroCouplingHasNoBinding) {
    auto s = presets::enhanced_binding_chain(2);
    auto rep = binding_gap(s, 0.0, coarse(20.0, 20.0));
    EXPECT_LE(rep.gap, 1e-4);
    EXPECT_DOUBLE_EQ(rep.gap, rep.Xi_V - rep.E_V);
    EXPECT_FALSE(rep.isolated);
}

TEST(BindingGap, PositiveAtLargeCouplingWithSpectrum) {
    auto s = presets::enhanced_binding_chain(2);
    auto rep = binding_gap(s, 1.0, coarse());
    EXPECT_GT(rep.gap, 0.1);
    EXPECT_TRUE(rep.isolated);
    EXPECT_TRUE(rep.converged);
    ASSERT_EQ(rep.low_spectrum.size(), 3u);
    EXPECT_DOUBLE_EQ(rep.low_spectrum[0], rep.E_V);
    for (std::size_t i = 1; i < 3; ++i) EXPECT_LE(rep.low_spectrum[i - 1], rep.low_spectrum[i]);
    double min_row = 1e300;
    for (const auto& r : rep.per_cluster) min_row = std::min(min_row, r.total);
    EXPECT_DOUBLE_EQ(min_row, rep.Xi_V);
}

TEST(BindingGap, RescalingMultipliesEnergiesByInverseKappaSquared) {
    auto s = presets::enhanced_binding_chain(2);
    auto g = coarse(8.0, 8.0, 0.25);
    auto base = binding_gap(s, 0.8, g);
    for (double kappa : {2.0, 5.0}) {
        auto r = binding_gap(rescale(s, kappa), 0.8, g);
        EXPECT_NEAR(r.gap * kappa * kappa, base.gap, 1e-7);
        EXPECT_NEAR(r.E_V * kappa * kappa, base.E_V, 1e-7);
    }
    auto scaled = rescale(s, 3.0);
    EXPECT_DOUBLE_EQ(scaled.masses[0], 9.0);
    EXPECT_NEAR(evaluate(scaled.external[0], 0.4), evaluate(s.external[0], 0.4) / 9.0, 1e-15);
    EXPECT_NEAR(scaled.profiles[0].lambda_hat(1.0), s.profiles[0].lambda_hat(1.0) / 3.0, 1e-15);
}

TEST(AlphaC, DegenerateAndInvalidBrackets) {
    auto gap = [](double a) { return a - 0.3; };
    auto deg = bisect_alpha_c(gap, 0.5, 1.0, 1e-4);
    EXPECT_TRUE(deg.degenerate);
    EXPECT_EQ(deg.alpha_c, 0.5);
    EXPECT_THROW(bisect_alpha_c(gap, 0.0, 0.2, 1e-4), bracket_error);
    auto ok = bisect_alpha_c(gap, 0.0, 1.0, 1e-4);
    EXPECT_LT(ok.hi - ok.lo, 1e-3);
    EXPECT_NEAR(ok.alpha_c, 0.3001, 1e-3);
    EXPECT_EQ(ok.monotonicity_violations, 0u);
    auto wiggly = bisect_alpha_c([](double a) { return a < 0.5 ? 0.0 : (a < 0.7 ? 1.0 : 0.5); }, 0.0, 1.0, 1e-4);
    EXPECT_EQ(wiggly.monotonicity_violations, 1u);
}

TEST(AlphaC, MatchesFineScanOracle) {
    auto s = presets::enhanced_binding_chain(2);
    const auto g = coarse(10.0, 10.0, 0.25);
    auto res = find_alpha_c(s, 0.1, 0.8, g);
    // first point of a fine uniform scan with a positive gap
    double first = -1;
    BindingOptions quiet;
    quiet.spectrum_count = 1;
    for (double a = 0.25; a <= 0.45; a += 0.0025)
        if (binding_gap(s, a, g, quiet).gap > 1e-4) {
            first = a;
            break;
        }
    ASSERT_GT(first, 0.0);
    EXPECT_NEAR(res.alpha_c, first, (res.hi - res.lo) + 0.0025);

    // alpha^2 W is all that matters: W -> c^2 W moves alpha_c to alpha_c / c
    auto t = s;
    t.pair_kernel = scaled(*s.pair_kernel, 4.0);
    auto res2 = find_alpha_c(t, 0.05, 0.4, g);
    EXPECT_NEAR(res2.alpha_c, res.alpha_c / 2.0, (res.hi - res.lo) + (res2.hi - res2.lo));
}

TEST(FieldMargin, AlgebraAndShellNorm) {
    auto s = presets::enhanced_binding_chain(2, 0.8);
    BindingReport rep;
    rep.alphas = {0.8, 0.8};
    rep.gap = 0.05;
    // d = 1 shell with lambda-hat = 1/sqrt(2 pi) on 0.5 < |k| < 2
    const double norm = 2.0 * (2.0 - 0.5) / (2.0 * std::numbers::pi);
    const double coeff = 2.0 * 0.64 * norm / 4.0;
    auto f = field_margin(rep, 3.0, s);
    EXPECT_NEAR(f.coefficient, coeff, 1e-12);
    EXPECT_NEAR(f.margin, 0.05 - coeff / 9.0, 1e-12);
    EXPECT_NEAR(f.kappa_min, std::sqrt(coeff / 0.05), 1e-12);
    EXPECT_GT(field_margin(rep, 1.01 * f.kappa_min, s).margin, 0.0);
    EXPECT_LT(field_margin(rep, 0.99 * f.kappa_min, s).margin, 0.0);
    EXPECT_NEAR(field_margin(rep, 1e6, s).margin, rep.gap, 1e-12);

    rep.alphas = {0.0, 0.0};
    EXPECT_EQ(field_margin(rep, 0.1, s).margin, rep.gap);
    rep.gap = -0.01;
    EXPECT_TRUE(field_margin(rep, 2.0, s).nonpositive_for_all_kappa);
    EXPECT_THROW(field_margin(rep, 0.0, s), domain_error);
}

TEST(ThresholdConvergence, CompactSmoothPotentialsGiveConstantTable) {
    auto s = presets::enhanced_binding_chain(2);
    s.external = {gaussian_well(0.3, 0.5), gaussian_well(0.3, 0.5)};
    s.pair_kernel = gaussian_well(1.0, 0.6);
    std::vector<MollifyStep> steps = {{12.0, 1e3, 0.05}, {16.0, 1e3, 0.05}, {20.0, 1e3, 0.05}};
    auto t = threshold_convergence(s, 0.8, steps, {coarse(8.0, 8.0, 0.25)});
    ASSERT_EQ(t.rows.size(), 3u);
    for (const auto& r : t.rows) {
        EXPECT_NEAR(r.Xi, t.rows.back().Xi, 1e-6);
        ASSERT_TRUE(r.E_V.has_value());
    }
    EXPECT_TRUE(t.within_bound);
}

TEST(ThresholdConvergence, CapScheduleIsConstantAboveTheMaximum) {
    auto s = presets::enhanced_binding_chain(2);
    std::vector<MollifyStep> steps = {{12.0, 0.5, 0.05}, {12.0, 10.0, 0.05}, {12.0, 100.0, 0.05}, {12.0, 1000.0, 0.05}};
    auto t = threshold_convergence(s, 0.8, steps, {coarse(8.0, 8.0, 0.25)}, false);
    EXPECT_GT(std::abs(t.rows[0].Xi - t.rows[3].Xi), 1e-3);  // cap below max |W|: the well is cut off
    EXPECT_NEAR(t.rows[1].Xi, t.rows[3].Xi, 1e-9);
    EXPECT_NEAR(t.rows[2].Xi, t.rows[3].Xi, 1e-9);
}
