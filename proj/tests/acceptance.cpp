// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ebind/asymptotics.hpp"
#include "ebind/binding.hpp"
#include "ebind/fock.hpp"
#include "ebind/jacobi.hpp"
#include "ebind/lattice.hpp"
#include "ebind/presets.hpp"
#include "ebind/veff.hpp"

using namespace ebind;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
        }
    }
    void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string sci(double x, int digits = 3) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

int failures = 0;

void criterion(int id, const char* title, double time_limit, const std::function<void(Verdict&)>& body) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(v);
    } catch (const std::exception& e) {
        v.pass = false;
        v.note(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (time_limit > 0.0) v.require(secs < time_limit, "runtime " + sci(secs) + " s over " + sci(time_limit) + " s");
    if (!v.pass) ++failures;
    std::printf("%s  %2d  %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.c_str(), secs);
    std::fflush(stdout);
}

std::vector<double> log_radii(double lo, double hi, std::size_t n) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
    return r;
}

GridRecipe box(double L, double h) {
    GridRecipe g;
    g.extent = L;
    g.relative_extent = L;
    g.spacing = h;
    return g;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

const std::vector<double> kDecade = {1.0, 1.5, 2.0, 3.0, 4.5, 6.5, 10.0};

}  // namespace

int main() {
    criterion(1, "effective potential closed form vs Bessel quadrature", 5.0, [](Verdict& v) {
        const auto p = CutoffProfile::shell(3, 0.5, 10.0);
        double worst = 0.0;
        for (double r : log_radii(1e-2, 1e2, 50)) {
            const double q = veff_pair_quadrature(p, p, r, 1.0, 1.0);
            const double c = veff_pair_closed_form(r, 1.0, 1.0, 0.5, 10.0);
            worst = std::max(worst, std::abs(q - c) / std::abs(c));
        }
        v.note("max rel diff " + sci(worst) + " on 50 radii in [1e-2, 1e2]");
        v.require(worst < 1e-6, "rel diff below 1e-6");
    });

    criterion(2, "W2 condition for the shell kernel", 0.0, [](Verdict& v) {
        const auto p = CutoffProfile::shell(3, 0.5, 10.0);
        auto rep = check_w_conditions(tabulate_pair_kernel(p, p, 30.0), {0.1, 0.5, 1.0});
        for (const auto& r : rep.rows) {
            v.note("eps " + sci(r.epsilon) + ": inner " + sci(r.inner_min, 5) + " < outer " + sci(r.outer_min, 5));
            v.require(r.pass, "eps " + sci(r.epsilon));
        }
    });

    criterion(3, "Jacobi transforms", 0.0, [](Verdict& v) {
        double worst_inv = 0.0;
        for (std::size_t n = 2; n <= 10; ++n) {
            auto J = jacobi_matrix(n);
            Matrix P = J.T * J.T_inv;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) worst_inv = std::max(worst_inv, std::abs(P(i, j) - (i == j ? 1.0 : 0.0)));
        }
        double split = 0.0;
        for (std::size_t n = 2; n <= 10; ++n) split = std::max(split, kinetic_split_check(n, 1.3, 100, 17 + n));
        auto J3 = jacobi_matrix(3);
        double identity = 0.0;
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-8.0, 8.0);
        for (int t = 0; t < 100; ++t) {
            std::vector<double> Y = {u(rng), u(rng), u(rng)};
            auto x = positions_from_jacobi(Y, J3, 1);
            const double scale = std::max({1.0, std::abs(Y[0]), std::abs(Y[1]), std::abs(Y[2])});
            identity = std::max(identity, std::abs((x[2] - x[1]) - (Y[2] - 0.5 * Y[1])) / scale);
        }
        v.note("max |T T^-1 - I| " + sci(worst_inv) + ", kinetic split residual " + sci(split) +
               ", x3 - x2 vs y2 - y1/2 " + sci(identity));
        v.require(worst_inv <= 1e-12, "T T^-1 = I to 1e-12");
        v.require(split < 1e-10, "kinetic split below 1e-10");
        v.require(identity <= 8 * std::numeric_limits<double>::epsilon(), "x3 - x2 = y2 - y1/2 to round-off");
    });

    criterion(4, "solver oracles", 0.0, [](Verdict& v) {
        auto t0 = std::chrono::steady_clock::now();
        LatticeOperator op;
        op.grid = GridSpec{{GridSpec::axis_for(12.0, 0.05)}};
        op.kinetic_coeffs = {0.5};
        GridCursor c(op.grid);
        for (std::size_t i = 0; i < op.grid.size(); ++i, c.next()) op.potential_diag.push_back(0.5 * c.coords()[0] * c.coords()[0]);
        const double osc = ground_state(op).energy;
        const double t_osc = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        t0 = std::chrono::steady_clock::now();
        const double hyd = ground_state(radial_reduce(CoulombTail{1.0, 1e-12}, 0, RadialGrid::graded(60.0, 4000, 2.0), 1.0)).energy;
        const double t_hyd = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        v.note("oscillator " + sci(osc, 7) + " in " + sci(t_osc, 2) + " s, hydrogen " + sci(hyd, 7) + " in " + sci(t_hyd, 2) + " s");
        v.require(std::abs(osc - 0.5) <= 1e-3 && t_osc < 10.0, "oscillator 0.5 +- 1e-3 under 10 s");
        v.require(std::abs(hyd + 0.5) <= 1e-3 && t_hyd < 10.0, "hydrogen -0.5 +- 1e-3 under 10 s");
    });

    criterion(5, "slope asymptotics", 0.0, [](Verdict& v) {
        auto s2 = presets::enhanced_binding_chain(2);
        auto pair = cluster_energy_slope(s2, {0, 1}, kDecade);
        v.note("N=2 slope " + sci(pair.slope_fit, 6) + " vs 2W(0) = " + sci(pair.target) + " (rel " + sci(pair.rel_error) + ")");
        v.require(pair.rel_error < 0.05, "N=2 slope within 5%");

        // N = 3: slope of E^V(beta) + E^0(complement) for each split size
        auto s3 = presets::enhanced_binding_chain(3);
        SlopeGrid g;
        g.spacing = 0.15;
        SlopeOptions with_v;
        with_v.include_external = true;
        const double w0 = contact_value(s3);
        std::vector<double> numeric(3);
        numeric[0] = cluster_energy_slope(s3, {0, 1, 2}, kDecade, g).slope_fit;
        numeric[1] = cluster_energy_slope(s3, {0}, kDecade, g, with_v).slope_fit +
                     cluster_energy_slope(s3, {1, 2}, kDecade, g).slope_fit;
        numeric[2] = cluster_energy_slope(s3, {0, 1}, kDecade, g, with_v).slope_fit +
                     cluster_energy_slope(s3, {2}, kDecade, g).slope_fit;
        std::size_t best = 0;
        for (std::size_t k = 0; k < 3; ++k) {
            const double pred = predicted_split_slope(3, k, w0);
            v.note("|beta|=" + std::to_string(k) + " slope " + sci(numeric[k], 5) + " (predicted " + sci(pred) + ")");
            v.require(std::abs(numeric[k] - pred) <= 0.05 * std::abs(pred), "split " + std::to_string(k) + " within 5%");
            if (numeric[k] < numeric[best]) best = k;
        }
        const std::size_t predicted = predicted_minimizer_size(3, w0);
        v.note("minimizing split size " + std::to_string(best) + ", predicted " + std::to_string(predicted));
        v.require(best == predicted, "N=3 minimizer matches prediction");
    });

    criterion(6, "enhanced binding onset", 0.0, [](Verdict& v) {
        auto s = presets::enhanced_binding_chain(2);
        const double tol = 1e-4;
        BindingOptions quiet;
        quiet.spectrum_count = 1;
        const auto coarse = box(15.0, 0.1), fine = box(15.0, 0.05);
        const double small = binding_gap(s, 0.1, coarse, quiet).gap;
        const double large = binding_gap(s, 0.8, coarse, quiet).gap;
        v.note("gap(0.1) " + sci(small) + ", gap(0.8) " + sci(large));
        v.require(small <= tol, "gap at small alpha within gap_tol");
        v.require(large > tol, "gap at large alpha above gap_tol");
        auto a = find_alpha_c(s, 0.1, 0.8, coarse, tol, quiet);
        auto b = bisect_alpha_c([&](double x) { return binding_gap(s, x, fine, quiet).gap; }, 0.8 * a.alpha_c,
                                1.2 * a.alpha_c, tol);
        const double rel = std::abs(a.alpha_c - b.alpha_c) / b.alpha_c;
        v.note("alpha_c " + sci(a.alpha_c, 5) + " (h=0.1) vs " + sci(b.alpha_c, 5) + " (h=0.05), rel " + sci(rel));
        v.require(rel < 0.05, "alpha_c stable under refinement within 5%");

        GridSpec com{{GridSpec::axis_for(10.0, 0.1)}};
        auto trial = com_trial(s, com);
        for (double alpha : {1.0, 3.0}) {
            auto rg = relative_ground(s, alpha);
            auto vb = variational_upper_bound(s, alpha, com, trial.vector, rg.grid, rg.u);
            v.note("alpha " + sci(alpha) + ": (Psi, h^V Psi) " + sci(vb.bound, 6) + " < E0 " + sci(vb.E0, 6));
            v.require(vb.bound < vb.E0, "variational certificate at alpha " + sci(alpha));
        }
    });

    criterion(7, "ground-state concentration", 0.0, [](Verdict& v) {
        auto s = presets::enhanced_binding_chain(2);
        auto scan = concentration_scan(s, {1.0, 2.0, 4.0, 8.0, 16.0}, {0.5}, {-3.0, -1.5, 0.0, 1.5, 3.0});
        std::string masses, devs;
        for (std::size_t i = 0; i < scan.size(); ++i) {
            masses += (i ? " " : "") + sci(scan[i].profile.outside_mass[0]);
            devs += (i ? " " : "") + sci(scan[i].smeared.sup_deviation);
            if (i > 0) {
                v.require(scan[i].profile.outside_mass[0] <= scan[i - 1].profile.outside_mass[0] + 1e-3,
                          "outside mass monotone at step " + std::to_string(i));
                v.require(scan[i].smeared.sup_deviation < scan[i - 1].smeared.sup_deviation,
                          "smeared deviation decreasing at step " + std::to_string(i));
            }
        }
        v.note("outside mass " + masses + "; smeared deviation " + devs);
        v.require(scan.back().profile.outside_mass[0] < 0.05, "outside mass below 0.05 at largest alpha");
    });

    criterion(8, "field margin", 0.0, [](Verdict& v) {
        auto s = presets::enhanced_binding_chain(2);
        auto rep = binding_gap(s, 0.8, box(15.0, 0.1));
        double worst = 0.0;
        for (double k : {1.0, 10.0, 100.0, 1e4, 1e8}) {
            auto m = field_margin(rep, k, with_uniform_coupling(s, 0.8));
            worst = std::max(worst, std::abs((rep.gap - m.margin) - m.coefficient / (k * k)));
        }
        auto m = field_margin(rep, 1.0, with_uniform_coupling(s, 0.8));
        const double far = field_margin(rep, 1e8, with_uniform_coupling(s, 0.8)).margin;
        const double above = field_margin(rep, 1.01 * m.kappa_min, with_uniform_coupling(s, 0.8)).margin;
        const double below = field_margin(rep, 0.99 * m.kappa_min, with_uniform_coupling(s, 0.8)).margin;
        v.note("gap " + sci(rep.gap, 6) + ", margin(1e8) " + sci(far, 6) + ", algebra residual " + sci(worst) +
               ", kappa_min " + sci(m.kappa_min, 5) + ", margins " + sci(above) + " / " + sci(below));
        v.require(rep.gap > 0.0, "positive gap");
        v.require(worst <= 1e-15 * std::max(1.0, m.coefficient) && std::abs(far - rep.gap) <= 1e-15, "margin -> gap algebraically");
        v.require(above > 0.0 && below < 0.0, "sign change across kappa_min");
    });

    criterion(9, "truncated Fock checks", 120.0, [](Verdict& v) {
        auto s = presets::enhanced_binding_chain(2, 1.0);
        FockConfig fc;
        fc.modes = profile_modes_1d(s.profiles[0], 4);
        fc.n_max = 4;
        fc.particle_grid = GridSpec::uniform(2, 6.0, 32);
        SolverOptions so;
        so.tol = 1e-8;
        so.max_matvecs = 200000;
        auto scan = kappa_scan(s, fc, {2.0, 8.0}, so);
        v.note("dim " + std::to_string(scan.dimension) + ", deviation " + sci(scan.rows[0].deviation) + " (kappa 2) > " +
               sci(scan.rows[1].deviation) + " (kappa 8)");
        v.require(scan.converged, "kappa scan converged");
        v.require(scan.rows[1].deviation < scan.rows[0].deviation, "deviation shrinks from kappa 2 to 8");
        for (double kappa : {2.0, 8.0}) {
            auto c = variational_bound_check(s, fc, kappa, so);
            v.note("field bound at kappa " + sci(kappa) + ": margin " + sci(c.margin) + " (tol " + sci(c.tolerance) + ")");
            v.require(c.satisfied, "field bound at kappa " + sci(kappa));
        }

        auto one = presets::enhanced_binding_chain(1, 0.8);
        FockConfig frozen;
        frozen.modes = {FockMode{{1.2}, 0.7, ModeParity::cosine}};
        frozen.frozen_positions = {0.0};
        const double lam = one.profiles[0].lambda_hat(1.2);
        const double exact = -0.8 * 0.8 * 0.7 * lam * lam / (2.0 * 1.2);
        std::vector<double> errs;
        for (std::size_t n : {1u, 2u, 4u, 8u, 12u}) {
            frozen.n_max = n;
            errs.push_back(std::abs(nelson_ground(one, frozen, 1.5).energy - exact - evaluate(one.external[0], 0.0)));
        }
        std::string e;
        for (std::size_t i = 0; i < errs.size(); ++i) e += (i ? " " : "") + sci(errs[i]);
        v.note("frozen mode error vs n_max 1,2,4,8,12: " + e);
        for (std::size_t i = 1; i < errs.size(); ++i) v.require(errs[i] <= errs[i - 1] + 1e-15, "frozen error nonincreasing");
        v.require(errs.back() < 1e-10, "frozen mode reaches the displaced oscillator");
    });

    criterion(10, "mollified Coulomb tail threshold convergence", 0.0, [](Verdict& v) {
        auto s = presets::enhanced_binding_chain(2);
        s.pair_kernel = CoulombTail{0.5, 1.0};
        GridRecipe g = box(12.0, 0.2);
        g.relative_extent = 48.0;
        std::vector<MollifyStep> steps;
        for (double R : {5.0, 10.0, 20.0, 40.0}) steps.push_back({R, 1e3, 0.5});
        auto t = threshold_convergence(s, 1.0, steps, {g}, false);
        std::string rows;
        for (const auto& r : t.rows)
            rows += (rows.empty() ? "" : ", ") + std::string("R ") + sci(r.step.R) + ": " + sci(r.diff_to_last) + " <= " +
                    sci(r.perturbation);
        v.note("|Xi(R) - Xi(40)| vs tail bound: " + rows);
        v.require(t.monotone, "differences decrease with R");
        v.require(t.within_bound, "differences within the tail bound");
        v.require(t.rows.front().diff_to_last > 0.0, "nontrivial change at the smallest R");
    });

    criterion(11, "CLI determinism", 0.0, [](Verdict& v) {
        const fs::path root = fs::temp_directory_path() / "ebind_acceptance";
        fs::remove_all(root);
        fs::create_directories(root);
        auto scan = nlohmann::json::parse(slurp(fs::path(EBIND_SPECS_DIR) / "alpha_scan_chain.json"));
        scan["grid"] = {{"extent", 10.0}, {"relative_extent", 10.0}, {"spacing", 0.25}};
        scan["alphas"] = {0.1, 0.3, 0.6};
        scan["scan"] = {{"bisect", true}, {"rel_width", 0.01}};
        std::ofstream(root / "scan.json") << scan.dump(2);
        const std::vector<fs::path> specs = {fs::path(EBIND_SPECS_DIR) / "veff_shell_3d.json", root / "scan.json"};
        std::size_t compared = 0;
        for (std::size_t i = 0; i < specs.size(); ++i) {
            std::vector<fs::path> outs;
            for (int run = 0; run < 2; ++run) {
                fs::path out = root / ("run" + std::to_string(i) + "_" + std::to_string(run));
                const std::string cmd = std::string("\"") + EBIND_CLI + "\" --spec \"" + specs[i].string() + "\" --out \"" +
                                        out.string() + "\" --seed 42 --threads " + (run == 0 ? "1" : "2") + " 2>/dev/null";
                const int rc = std::system(cmd.c_str());
                v.require(rc == 0, "exit status 0 for " + specs[i].filename().string());
                outs.push_back(out);
            }
            for (const auto& e : fs::directory_iterator(outs[0])) {
                if (e.path().extension() != ".csv") continue;
                const auto other = outs[1] / e.path().filename();
                v.require(fs::exists(other) && slurp(e.path()) == slurp(other), e.path().filename().string() + " identical");
                ++compared;
            }
        }
        v.note(std::to_string(compared) + " CSV files byte-identical across reruns");
        v.require(compared >= 5, "expected CSV outputs present");
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
