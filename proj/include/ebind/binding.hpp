#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ebind/eigensolve.hpp"
#include "ebind/errors.hpp"
#include "ebind/lattice.hpp"
#include "ebind/mollify.hpp"
#include "ebind/parallel.hpp"
#include "ebind/system.hpp"

namespace ebind {

enum class BoxProtocol {
    single,      // one run at the configured extents
    richardson,  // (4 E(2L) - E(L)) / 3 from runs at L and 2L with the same spacing
};

inline const char* protocol_name(BoxProtocol p) { return p == BoxProtocol::single ? "single" : "richardson"; }

// How cluster operators are discretized. Particle and centre-of-mass axes use
// `extent`, Jacobi relative axes use `relative_extent`.
struct GridRecipe {
    double extent = 10.0;
    double relative_extent = 10.0;
    double spacing = 0.1;
    BoxProtocol protocol = BoxProtocol::single;
    std::size_t max_points = 16'000'000;
    bool exact_pair = false;
    SolverOptions solver;
};

struct ClusterEnergy {
    std::vector<std::size_t> beta;
    bool external = false;
    double energy = 0.0;
    double residual = 0.0;
    bool converged = true;
    std::string label;
    std::vector<GridSpec> grids;  // one per box run
    std::vector<double> box_energies;
    BoxProtocol protocol = BoxProtocol::single;
    std::vector<double> spectrum;  // low-lying levels of the largest-box run, when requested
};

namespace detail {

inline GridSpec cluster_grid(const ParticleSystem& sys, std::size_t n, bool jacobi, bool com,
                             const GridRecipe& g, double scale) {
    const std::size_t d = static_cast<std::size_t>(sys.d);
    GridSpec spec;
    if (!jacobi) {
        for (std::size_t k = 0; k < n * d; ++k) spec.axes.push_back(GridSpec::axis_for(scale * g.extent, g.spacing));
        return spec;
    }
    if (com)
        for (std::size_t k = 0; k < d; ++k) spec.axes.push_back(GridSpec::axis_for(scale * g.extent, g.spacing));
    for (std::size_t k = 0; k + 1 < n; ++k)
        for (std::size_t a = 0; a < d; ++a)
            spec.axes.push_back(GridSpec::axis_for(scale * g.relative_extent, g.spacing));
    return spec;
}

inline bool equal_masses_in(const ParticleSystem& sys, const std::vector<std::size_t>& beta) {
    for (std::size_t b : beta)
        if (sys.masses[b] != sys.masses[beta.front()]) return false;
    return true;
}

}  // namespace detail

// Ground energy of h^V(beta) (include_external) or h^0(beta). Free clusters of
// two or more particles are solved in relative Jacobi coordinates, so the
// centre-of-mass continuum does not enter; a single free particle has energy 0.
inline ClusterEnergy cluster_energy(const ParticleSystem& sys_in, const std::vector<std::size_t>& beta,
                                    std::optional<double> alpha, const GridRecipe& recipe,
                                    bool include_external, BuildOptions opt = {},
                                    std::size_t spectrum_count = 0) {
    const ParticleSystem sys = alpha ? with_uniform_coupling(sys_in, *alpha) : sys_in;
    sys.validate();
    detail::check_beta(sys, beta);
    ClusterEnergy out;
    out.beta = beta;
    out.external = include_external;
    out.protocol = recipe.protocol;
    out.label = cluster_label(include_external ? "h^V" : "h^0", beta);
    if (beta.empty() || (beta.size() == 1 && !include_external)) {
        out.energy = 0.0;
        if (spectrum_count > 0) out.spectrum = {0.0};
        return out;
    }
    opt.max_points = recipe.max_points;
    opt.exact_pair = recipe.exact_pair;
    opt.alpha.reset();
    const bool jacobi = beta.size() >= 2 && detail::equal_masses_in(sys, beta);
    if (beta.size() >= 2 && !include_external && !jacobi)
        throw unsupported("free clusters with unequal masses are not supported");

    std::vector<double> scales = {1.0};
    if (recipe.protocol == BoxProtocol::richardson) scales.push_back(2.0);
    for (std::size_t s = 0; s < scales.size(); ++s) {
        GridSpec grid = detail::cluster_grid(sys, beta.size(), jacobi, include_external, recipe, scales[s]);
        LatticeOperator op = jacobi ? build_jacobi_hamiltonian(sys, beta, grid, include_external, include_external, opt)
                                    : build_cluster_hamiltonian(sys, beta, grid, include_external, opt);
        const bool last = s + 1 == scales.size();
        const std::size_t k = last ? std::max<std::size_t>(1, spectrum_count) : 1;
        auto res = lowest_eigenpairs(op, k, recipe.solver);
        out.box_energies.push_back(res.front().energy);
        out.grids.push_back(grid);
        out.residual = std::max(out.residual, res.front().residual);
        for (const auto& r : res) out.converged = out.converged && r.converged;
        if (last && spectrum_count > 0)
            for (const auto& r : res) out.spectrum.push_back(r.energy);
    }
    out.energy = out.box_energies.size() == 2 ? (4.0 * out.box_energies[1] - out.box_energies[0]) / 3.0
                                              : out.box_energies.front();
    return out;
}

struct ThresholdRow {
    std::vector<std::size_t> beta;
    std::vector<std::size_t> complement;
    double E_V_beta = 0.0;
    double E_0_complement = 0.0;
    double total = 0.0;
};

struct ThresholdResult {
    double Xi = 0.0;
    std::vector<std::size_t> minimizer;
    std::vector<ThresholdRow> rows;
    bool pruned = false;
    bool converged = true;
    double residual = 0.0;  // largest residual among the cluster solves
    std::vector<ClusterEnergy> clusters;
};

struct ThresholdOptions {
    std::size_t threads = 1;
    bool use_symmetry = true;  // only honoured for fully symmetric systems
};

inline std::vector<std::size_t> complement_of(const std::vector<std::size_t>& beta, std::size_t n) {
    std::vector<std::size_t> c;
    for (std::size_t i = 0, j = 0; i < n; ++i) {
        if (j < beta.size() && beta[j] == i)
            ++j;
        else
            c.push_back(i);
    }
    return c;
}

// Xi = min over proper subsets beta (empty included) of E^V(beta) + E^0(beta^c).
inline ThresholdResult two_cluster_threshold(const ParticleSystem& sys_in, std::optional<double> alpha,
                                             const GridRecipe& recipe, const ThresholdOptions& topt = {}) {
    const ParticleSystem sys = alpha ? with_uniform_coupling(sys_in, *alpha) : sys_in;
    sys.validate();
    const std::size_t n = sys.size();
    if (n < 2) throw domain_error("two_cluster_threshold: need at least two particles");
    if (n > 20) throw too_large("two_cluster_threshold: too many particles", n, 20);

    ThresholdResult out;
    std::vector<std::vector<std::size_t>> betas;
    if (topt.use_symmetry && sys.fully_symmetric()) {
        out.pruned = true;
        for (std::size_t k = 0; k < n; ++k) {
            std::vector<std::size_t> b(k);
            for (std::size_t i = 0; i < k; ++i) b[i] = i;
            betas.push_back(std::move(b));
        }
    } else {
        for (std::size_t mask = 0; mask + 1 < (std::size_t{1} << n); ++mask) {
            std::vector<std::size_t> b;
            for (std::size_t i = 0; i < n; ++i)
                if (mask >> i & 1u) b.push_back(i);
            betas.push_back(std::move(b));
        }
        std::sort(betas.begin(), betas.end());
    }

    // distinct cluster solves, memoized by (cluster, external)
    std::map<std::pair<std::vector<std::size_t>, bool>, std::size_t> index;
    std::vector<std::pair<std::vector<std::size_t>, bool>> tasks;
    auto want = [&](std::vector<std::size_t> c, bool ext) {
        auto key = std::make_pair(std::move(c), ext);
        if (index.emplace(key, tasks.size()).second) tasks.push_back(key);
    };
    for (const auto& b : betas) {
        want(b, true);
        want(complement_of(b, n), false);
    }
    std::vector<ClusterEnergy> solved(tasks.size());
    parallel_for(tasks.size(), topt.threads, [&](std::size_t t) {
        solved[t] = cluster_energy(sys, tasks[t].first, std::nullopt, recipe, tasks[t].second);
    });

    out.Xi = std::numeric_limits<double>::infinity();
    for (const auto& b : betas) {
        ThresholdRow row;
        row.beta = b;
        row.complement = complement_of(b, n);
        row.E_V_beta = solved[index.at({b, true})].energy;
        row.E_0_complement = solved[index.at({row.complement, false})].energy;
        row.total = row.E_V_beta + row.E_0_complement;
        // rows are in lexicographic order, so strict < keeps the smallest minimizer
        if (row.total < out.Xi) {
            out.Xi = row.total;
            out.minimizer = b;
        }
        out.rows.push_back(std::move(row));
    }
    for (const auto& c : solved) {
        out.converged = out.converged && c.converged;
        out.residual = std::max(out.residual, c.residual);
    }
    out.clusters = std::move(solved);
    return out;
}

struct BindingReport {
    std::vector<double> alphas;
    double E_V = 0.0;
    double Xi_V = 0.0;
    double gap = 0.0;
    std::vector<ThresholdRow> per_cluster;
    std::vector<std::size_t> minimizer;
    std::vector<double> low_spectrum;  // of h^V(C_N)
    double tolerance = 0.0;            // residual-based error bar on the gap
    bool isolated = false;             // E_V below Xi_V by more than the tolerance
    bool converged = true;
    bool pruned = false;
    std::optional<double> kappa;
    std::optional<double> field_margin;
    std::optional<double> alpha_c;
    GridRecipe recipe;
    std::vector<ClusterEnergy> provenance;  // every solve behind E_V and Xi_V
};

struct BindingOptions {
    ThresholdOptions threshold;
    std::size_t spectrum_count = 3;
};

inline BindingReport binding_gap(const ParticleSystem& sys_in, std::optional<double> alpha,
                                 const GridRecipe& recipe, const BindingOptions& bopt = {}) {
    const ParticleSystem sys = alpha ? with_uniform_coupling(sys_in, *alpha) : sys_in;
    std::vector<std::size_t> all(sys.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    BindingReport rep;
    rep.alphas = sys.couplings;
    rep.recipe = recipe;
    auto ground = cluster_energy(sys, all, std::nullopt, recipe, true, {}, bopt.spectrum_count);
    auto th = two_cluster_threshold(sys, std::nullopt, recipe, bopt.threshold);
    rep.E_V = ground.energy;
    rep.Xi_V = th.Xi;
    rep.gap = rep.Xi_V - rep.E_V;
    rep.per_cluster = th.rows;
    rep.minimizer = th.minimizer;
    rep.low_spectrum = ground.spectrum;
    rep.tolerance = ground.residual + 2.0 * th.residual;
    rep.isolated = rep.gap > rep.tolerance;
    rep.converged = ground.converged && th.converged;
    rep.pruned = th.pruned;
    rep.provenance.push_back(std::move(ground));
    for (auto& c : th.clusters) rep.provenance.push_back(std::move(c));
    return rep;
}

struct AlphaCResult {
    double alpha_c = 0.0;
    double lo = 0.0, hi = 0.0;
    std::vector<std::pair<double, double>> evaluations;  // (alpha, gap), in evaluation order
    std::size_t monotonicity_violations = 0;
    bool degenerate = false;
    std::string note;
};

// Counts adjacent (in alpha) evaluations where the gap falls as alpha grows by
// more than `slack`.
inline std::size_t count_monotonicity_violations(std::vector<std::pair<double, double>> ev, double slack) {
    std::sort(ev.begin(), ev.end());
    std::size_t v = 0;
    for (std::size_t i = 1; i < ev.size(); ++i)
        if (ev[i].second < ev[i - 1].second - slack) ++v;
    return v;
}

// Bisection for the onset of gap(alpha) > gap_tol with a uniform coupling.
template <class GapFn>
AlphaCResult bisect_alpha_c(GapFn&& gap, double alpha_lo, double alpha_hi, double gap_tol,
                            double rel_width = 1e-3) {
    if (!(alpha_hi > alpha_lo) || alpha_lo < 0.0) throw bracket_error("find_alpha_c: need 0 <= alpha_lo < alpha_hi");
    AlphaCResult out;
    auto eval = [&](double a) {
        double g = gap(a);
        out.evaluations.emplace_back(a, g);
        return g;
    };
    const double g_lo = eval(alpha_lo);
    if (g_lo > gap_tol) {
        out.alpha_c = out.lo = out.hi = alpha_lo;
        out.degenerate = true;
        out.note = "gap already above tolerance at alpha_lo";
        return out;
    }
    const double g_hi = eval(alpha_hi);
    if (!(g_hi > gap_tol)) throw bracket_error("find_alpha_c: gap at alpha_hi does not exceed gap_tol");
    double lo = alpha_lo, hi = alpha_hi;
    while (hi - lo >= rel_width * alpha_hi) {
        const double mid = 0.5 * (lo + hi);
        (eval(mid) > gap_tol ? hi : lo) = mid;
    }
    out.lo = lo;
    out.hi = hi;
    out.alpha_c = 0.5 * (lo + hi);
    out.monotonicity_violations = count_monotonicity_violations(out.evaluations, gap_tol);
    if (out.monotonicity_violations > 0) out.note = "gap not monotone in alpha on the evaluated points";
    return out;
}

inline AlphaCResult find_alpha_c(const ParticleSystem& sys, double alpha_lo, double alpha_hi,
                                 const GridRecipe& recipe, double gap_tol = 1e-4,
                                 const BindingOptions& bopt = {}) {
    BindingOptions quiet = bopt;
    quiet.spectrum_count = 1;
    return bisect_alpha_c([&](double a) { return binding_gap(sys, a, recipe, quiet).gap; }, alpha_lo, alpha_hi,
                          gap_tol);
}

struct FieldMargin {
    double margin = 0.0;
    double coefficient = 0.0;  // sum_j alpha_j^2 ||lambda_j||^2 / (4 m_j)
    double kappa_min = std::numeric_limits<double>::infinity();
    bool nonpositive_for_all_kappa = false;
};

inline double field_correction_coefficient(const ParticleSystem& sys, const std::vector<double>& alphas) {
    if (sys.profiles.empty()) throw unsupported("field_margin: system has no cutoff profiles");
    double c = 0.0;
    for (std::size_t j = 0; j < sys.size(); ++j)
        c += alphas[j] * alphas[j] * profile_moment(sys.profiles[j], sys.profiles[j], 0) / (4.0 * sys.masses[j]);
    return c;
}

// gap - sum_j alpha_j^2 ||lambda_j||^2 / (4 m_j kappa^2) and the smallest kappa making it positive.
inline FieldMargin field_margin(const BindingReport& rep, double kappa, const ParticleSystem& sys) {
    if (!(kappa > 0.0)) throw domain_error("field_margin: kappa must be positive");
    FieldMargin f;
    f.coefficient = field_correction_coefficient(sys, rep.alphas);
    f.margin = rep.gap - f.coefficient / (kappa * kappa);
    if (rep.gap <= 0.0) {
        f.nonpositive_for_all_kappa = true;
    } else {
        f.kappa_min = std::sqrt(f.coefficient / rep.gap);
    }
    return f;
}

// masses -> m kappa^2, potentials -> V / kappa^2, profiles -> lambda / kappa.
inline ParticleSystem rescale(ParticleSystem sys, double kappa) {
    if (!(kappa > 0.0)) throw domain_error("rescale: kappa must be positive");
    const double k2 = kappa * kappa;
    for (auto& m : sys.masses) m *= k2;
    for (auto& v : sys.external) v = scaled(v, 1.0 / k2);
    for (auto& p : sys.profiles) {
        p.amplitude /= kappa;
        p.validate();
    }
    if (sys.pair_kernel) sys.pair_kernel = scaled(*sys.pair_kernel, 1.0 / k2);
    return sys;
}

struct MollifyStep {
    double R = 10.0;      // support radius
    double cap = 1e3;     // height cap
    double sigma = 0.5;   // smoothing width
};

struct ConvergenceRow {
    MollifyStep step;
    GridRecipe recipe;
    double Xi = 0.0;
    std::optional<double> E_V;
    double diff_to_last = 0.0;     // |Xi - Xi(last row)|
    double perturbation = 0.0;     // operator-norm bound on the change to the last row's potentials
    bool converged = true;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    bool monotone = true;       // diff_to_last nonincreasing along the schedule
    bool within_bound = true;   // diff_to_last <= perturbation for every row
    std::optional<double> rate; // fitted exponent p in diff ~ R^-p
};

namespace detail {

inline RadialPotential mollified(const RadialPotential& v, const MollifyStep& s) {
    if (is_zero(v)) return v;
    return mollify_potential(v, s.R, s.cap, s.sigma);
}

inline double sup_difference(const RadialPotential& a, const RadialPotential& b, double r_max,
                             std::size_t samples = 20000) {
    double sup = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double r = r_max * static_cast<double>(i) / static_cast<double>(samples - 1);
        sup = std::max(sup, std::abs(evaluate(a, r) - evaluate(b, r)));
    }
    return sup;
}

}  // namespace detail

// Mollifies the pair kernel and the external potentials step by step and tracks
// Xi (and optionally E^V) against the last step of the schedule.
inline ConvergenceTable threshold_convergence(const ParticleSystem& sys, std::optional<double> alpha,
                                              const std::vector<MollifyStep>& steps,
                                              const std::vector<GridRecipe>& recipes, bool include_ground = true,
                                              const BindingOptions& bopt = {}) {
    if (steps.empty()) throw domain_error("threshold_convergence: empty schedule");
    if (recipes.size() != 1 && recipes.size() != steps.size())
        throw domain_error("threshold_convergence: need one grid recipe or one per step");
    const ParticleSystem base = alpha ? with_uniform_coupling(sys, *alpha) : sys;
    base.validate();

    RadialPotential kernel = ZeroPotential{};
    if (base.pair_kernel) {
        kernel = *base.pair_kernel;
    } else {
        for (const auto& p : base.profiles)
            if (!(p == base.profiles.front()))
                throw unsupported("threshold_convergence: profiles must be identical without a pair kernel");
        double r_max = 0.0;
        for (const auto& s : steps) r_max = std::max(r_max, s.R);
        kernel = tabulate_pair_kernel(base.profiles.front(), base.profiles.front(), r_max);
    }

    std::vector<ParticleSystem> systems;
    for (const auto& s : steps) {
        ParticleSystem m = base;
        m.pair_kernel = detail::mollified(kernel, s);
        for (auto& v : m.external) v = detail::mollified(v, s);
        systems.push_back(std::move(m));
    }

    ConvergenceTable table;
    table.rows.resize(steps.size());
    parallel_for(steps.size(), bopt.threshold.threads, [&](std::size_t i) {
        auto& row = table.rows[i];
        row.step = steps[i];
        row.recipe = recipes.size() == 1 ? recipes.front() : recipes[i];
        ThresholdOptions single = bopt.threshold;
        single.threads = 1;
        auto th = two_cluster_threshold(systems[i], std::nullopt, row.recipe, single);
        row.Xi = th.Xi;
        row.converged = th.converged;
        if (include_ground) {
            std::vector<std::size_t> all(base.size());
            for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
            auto g = cluster_energy(systems[i], all, std::nullopt, row.recipe, true);
            row.E_V = g.energy;
            row.converged = row.converged && g.converged;
        }
    });

    const auto& last = systems.back();
    double r_reach = 0.0;
    for (const auto& s : steps) r_reach = std::max(r_reach, s.R);
    for (std::size_t i = 0; i < steps.size(); ++i) {
        auto& row = table.rows[i];
        row.diff_to_last = std::abs(row.Xi - table.rows.back().Xi);
        double bound = 0.0;
        const double dw = detail::sup_difference(*systems[i].pair_kernel, *last.pair_kernel, r_reach + 1.0);
        for (std::size_t a = 0; a < base.size(); ++a) {
            bound += detail::sup_difference(systems[i].external[a], last.external[a], r_reach + 1.0);
            for (std::size_t b = 0; b < base.size(); ++b)
                if (a != b) bound += std::abs(base.couplings[a] * base.couplings[b]) * dw;
        }
        row.perturbation = bound;
        if (row.diff_to_last > bound + 2.0 * row.recipe.solver.tol) table.within_bound = false;
        if (i > 0 && i + 1 < steps.size() && row.diff_to_last > table.rows[i - 1].diff_to_last + 2.0 * row.recipe.solver.tol)
            table.monotone = false;
    }
    // least-squares slope of log diff against log R over rows with a nonzero difference
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i + 1 < steps.size(); ++i)
        if (table.rows[i].diff_to_last > 0.0)
            pts.emplace_back(std::log(steps[i].R), std::log(table.rows[i].diff_to_last));
    if (pts.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (auto [x, y] : pts) {
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double n = static_cast<double>(pts.size());
        const double den = n * sxx - sx * sx;
        if (den != 0.0) table.rate = -(n * sxy - sx * sy) / den;
    }
    return table;
}

}  // namespace ebind
