#include "run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>

#include "ebind/asymptotics.hpp"
#include "ebind/binding.hpp"
#include "ebind/fock.hpp"
#include "ebind/parallel.hpp"
#include "ebind/veff.hpp"
#include "schema.hpp"
#include "serialize.hpp"

namespace ebind::cli {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 0x5eed;

std::string num(double x) { return format_number(x); }
std::string flag(bool b) { return b ? "true" : "false"; }
std::string count(std::size_t n) { return std::to_string(n); }

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

// Everything a command produces before anything is written.
struct Output {
    std::deque<CsvTable> tables;  // references stay valid as tables are added
    json records = json::array();
    json results = json::object();
    json flags = json::array();
    bool converged = true;

    std::string record(json r) {
        std::string id = "R" + std::to_string(records.size() + 1);
        r["id"] = id;
        records.push_back(std::move(r));
        return id;
    }

    void not_converged(const std::string& what) {
        converged = false;
        flags.push_back(what);
    }

    CsvTable& table(std::string name, std::vector<std::string> columns) {
        tables.push_back(CsvTable{std::move(name), std::move(columns), {}});
        return tables.back();
    }
};

struct Job {
    json spec;  // fully resolved
    std::string command;
    ParticleSystem sys;
    GridRecipe recipe;
    std::size_t threads = 1;
    std::uint64_t seed = kDefaultSeed;
    std::optional<double> alpha;
    std::optional<std::size_t> max_dim;
};

json& block(json& spec, const char* key) {
    if (!spec.contains(key)) spec[key] = json::object();
    return spec[key];
}

std::vector<double> require_list(json& spec, const char* key, const std::string& command) {
    if (!spec.contains(key)) throw spec_error(std::string("/") + key, "required by command " + command);
    return spec[key].get<std::vector<double>>();
}

std::vector<std::size_t> indices(const json& arr, std::size_t n, const std::string& path) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto k = arr[i].get<std::size_t>();
        if (k < 1 || k > n) throw spec_error(path + "/" + std::to_string(i), "particle index out of range 1.." + std::to_string(n));
        if (!out.empty() && k - 1 <= out.back()) throw spec_error(path, "indices must be strictly increasing");
        out.push_back(k - 1);
    }
    return out;
}

json one_based(const std::vector<std::size_t>& beta) {
    json a = json::array();
    for (auto b : beta) a.push_back(b + 1);
    return a;
}

std::string uniform_alpha_cell(const Job& job) { return job.alpha ? num(*job.alpha) : ""; }

json recipe_json(const GridRecipe& r) {
    return {{"extent", r.extent},
            {"relative_extent", r.relative_extent},
            {"spacing", r.spacing},
            {"protocol", protocol_name(r.protocol)},
            {"tol", r.solver.tol}};
}

json cluster_record(const ClusterEnergy& c, std::optional<double> alpha) {
    json r = to_json(c);
    r["cluster"] = one_based(c.beta);
    r["external"] = c.external;
    if (alpha) r["alpha"] = *alpha;
    if (c.grids.empty()) r["exact"] = "empty or single free cluster, no lattice";
    return r;
}

// Records every solve of a binding report; returns label -> record id.
std::map<std::string, std::string> record_binding(Output& out, const BindingReport& rep, std::optional<double> alpha) {
    std::map<std::string, std::string> ids;
    for (const auto& c : rep.provenance) ids.emplace(c.label, out.record(cluster_record(c, alpha)));
    return ids;
}

std::string lookup(const std::map<std::string, std::string>& ids, const std::string& label) {
    auto it = ids.find(label);
    return it == ids.end() ? "" : it->second;
}

std::string threshold_records(const std::map<std::string, std::string>& ids, const std::vector<std::size_t>& beta,
                              const std::vector<std::size_t>& complement) {
    std::string a = lookup(ids, cluster_label("h^V", beta)), b = lookup(ids, cluster_label("h^0", complement));
    if (a.empty()) return b;
    if (b.empty()) return a;
    return a + " " + b;
}

void add_threshold_rows(CsvTable& t, const BindingReport& rep, const std::map<std::string, std::string>& ids,
                        const std::string& alpha_cell) {
    for (const auto& row : rep.per_cluster)
        t.add({alpha_cell, format_cluster(row.beta), format_cluster(row.complement), num(row.E_V_beta),
               num(row.E_0_complement), num(row.total), threshold_records(ids, row.beta, row.complement)});
}

const std::vector<std::string> kThresholdColumns = {"alpha", "beta", "complement", "E_V_beta",
                                                    "E_0_complement", "total", "records"};

// ---------------------------------------------------------------- commands

void run_veff(Job& job, Output& out) {
    json& b = block(job.spec, "veff");
    const double r_min = take_number(b, "r_min", 1e-2);
    const double r_max = take_number(b, "r_max", 1e2);
    const auto n = static_cast<std::size_t>(take_integer(b, "count", 50));
    const bool log_spacing = take_string(b, "spacing", "log") == "log";
    const auto eps = take_numbers(b, "w_epsilons", {0.1, 0.5, 1.0});
    if (!(r_max > r_min)) throw spec_error("/veff/r_max", "must exceed r_min");
    const auto& sys = job.sys;
    if (sys.profiles.empty()) throw spec_error("/system/particles", "command veff needs particle profiles");

    std::vector<double> radii(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        radii[i] = log_spacing ? r_min * std::pow(r_max / r_min, t) : r_min + (r_max - r_min) * t;
    }

    // distinct (profile, profile, coupling product) pairs
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < sys.size(); ++i)
        for (std::size_t j = i; j < sys.size(); ++j) {
            if (i == j && sys.size() > 1) continue;
            bool seen = false;
            for (auto [p, q] : pairs)
                seen = seen || (sys.profiles[p] == sys.profiles[i] && sys.profiles[q] == sys.profiles[j] &&
                                sys.couplings[p] * sys.couplings[q] == sys.couplings[i] * sys.couplings[j]);
            if (!seen) pairs.emplace_back(i, j);
        }

    auto& t = out.table("veff.csv", {"i", "j", "r", "V", "V_closed_form", "rel_diff"});
    double worst = 0.0;
    bool any_closed = false;
    for (auto [i, j] : pairs) {
        const auto& pi = sys.profiles[i];
        const auto& pj = sys.profiles[j];
        const double ai = sys.couplings[i], aj = sys.couplings[j];
        const bool closed = sys.d == 3 && pi.kind == ProfileKind::shell && pj.kind == ProfileKind::shell &&
                            pi.form == ProfileForm::rho_over_sqrt_omega && pj.form == pi.form &&
                            pi.ir_cut == pj.ir_cut && pi.uv_cut == pj.uv_cut;
        std::vector<double> v(n), c(n, 0.0);
        parallel_for(n, job.threads, [&](std::size_t k) {
            v[k] = veff_pair_quadrature(pi, pj, radii[k], ai, aj);
            if (closed) c[k] = pi.amplitude * pj.amplitude * veff_pair_closed_form(radii[k], ai, aj, pi.ir_cut, pi.uv_cut);
        });
        for (std::size_t k = 0; k < n; ++k) {
            std::string cf, rd;
            if (closed) {
                const double diff = c[k] != 0.0 ? std::abs(v[k] - c[k]) / std::abs(c[k]) : std::abs(v[k] - c[k]);
                worst = std::max(worst, diff);
                cf = num(c[k]);
                rd = num(diff);
                any_closed = true;
            }
            t.add({count(i + 1), count(j + 1), num(radii[k]), num(v[k]), cf, rd});
        }
    }
    if (any_closed) out.results["max_rel_diff"] = worst;

    if (sys.size() >= 2) {
        const double reach = std::max(20.0, 4.0 * *std::max_element(eps.begin(), eps.end()));
        PairPotential w = sys.pair_kernel ? tabulate(*sys.pair_kernel, reach, 8193)
                                          : tabulate_pair_kernel(sys.profiles[0], sys.profiles[1], reach);
        auto rep = check_w_conditions(w, eps);
        auto& wt = out.table("w_conditions.csv", {"epsilon", "W0", "inner_min", "outer_min", "pass"});
        for (const auto& r : rep.rows)
            wt.add({num(r.epsilon), num(rep.value_at_zero), num(r.inner_min), num(r.outer_min), flag(r.pass)});
        out.results["w_conditions_pass"] = rep.all_pass();
        out.results["coupling_product_positive"] = sys.couplings[0] * sys.couplings[1] > 0.0;
        json decay = json::array();
        for (const auto& d : rep.decay) decay.push_back({{"radius", d.radius}, {"sup_abs", d.sup_abs}});
        out.results["w_decay"] = decay;
    }
}

void run_spectrum(Job& job, Output& out) {
    json& b = block(job.spec, "spectrum");
    if (!b.contains("beta")) b["beta"] = one_based(all_indices(job.sys.size()));
    const auto beta = indices(b["beta"], job.sys.size(), "/spectrum/beta");
    const bool external = take_bool(b, "external", true);
    const auto k = static_cast<std::size_t>(take_integer(b, "count", 3));

    auto ce = cluster_energy(job.sys, beta, std::nullopt, job.recipe, external, {}, k);
    const std::string id = out.record(cluster_record(ce, job.alpha));
    auto& t = out.table("spectrum.csv", {"level", "energy", "residual", "converged", "record"});
    for (std::size_t i = 0; i < ce.spectrum.size(); ++i)
        t.add({count(i), num(ce.spectrum[i]), num(ce.residual), flag(ce.converged), id});
    if (!ce.converged) out.not_converged(ce.label);
}

void run_binding(Job& job, Output& out) {
    BindingOptions bo;
    bo.threshold.threads = job.threads;
    auto rep = binding_gap(job.sys, std::nullopt, job.recipe, bo);
    auto ids = record_binding(out, rep, job.alpha);
    const std::string ground = lookup(ids, cluster_label("h^V", all_indices(job.sys.size())));

    auto& s = out.table("summary.csv", {"alpha", "E_V", "Xi_V", "gap", "tolerance", "isolated", "converged",
                                        "minimizer", "records"});
    const auto comp = complement_of(rep.minimizer, job.sys.size());
    s.add({uniform_alpha_cell(job), num(rep.E_V), num(rep.Xi_V), num(rep.gap), num(rep.tolerance),
           flag(rep.isolated), flag(rep.converged), format_cluster(rep.minimizer),
           ground + " " + threshold_records(ids, rep.minimizer, comp)});
    auto& t = out.table("thresholds.csv", kThresholdColumns);
    add_threshold_rows(t, rep, ids, uniform_alpha_cell(job));
    out.results["low_spectrum"] = rep.low_spectrum;
    out.results["pruned_by_symmetry"] = rep.pruned;
    if (!rep.converged) out.not_converged("binding gap");

    if (job.spec.contains("kappas")) {
        if (job.sys.profiles.empty()) throw spec_error("/kappas", "field margins need particle profiles");
        auto& f = out.table("field_margin.csv", {"kappa", "gap", "coefficient", "margin", "kappa_min"});
        for (double k : job.spec["kappas"].get<std::vector<double>>()) {
            auto m = field_margin(rep, k, job.sys);
            f.add({num(k), num(rep.gap), num(m.coefficient), num(m.margin),
                   m.nonpositive_for_all_kappa ? "" : num(m.kappa_min)});
        }
    }
}

void run_alpha_scan(Job& job, Output& out) {
    const auto alphas = require_list(job.spec, "alphas", job.command);
    json& b = block(job.spec, "scan");
    const double gap_tol = take_number(b, "gap_tol", 1e-4);
    const bool bisect = take_bool(b, "bisect", false);
    const double rel_width = take_number(b, "rel_width", 1e-3);

    BindingOptions bo;
    bo.spectrum_count = 1;
    std::vector<BindingReport> reps(alphas.size());
    parallel_for(alphas.size(), job.threads, [&](std::size_t i) { reps[i] = binding_gap(job.sys, alphas[i], job.recipe, bo); });

    auto& s = out.table("alpha_scan.csv",
                        {"alpha", "E_V", "Xi_V", "gap", "tolerance", "isolated", "converged", "records"});
    auto& t = out.table("thresholds.csv", kThresholdColumns);
    const auto all = all_indices(job.sys.size());
    std::optional<double> lo_scan, hi_scan;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const auto& rep = reps[i];
        auto ids = record_binding(out, rep, alphas[i]);
        const auto comp = complement_of(rep.minimizer, all.size());
        s.add({num(alphas[i]), num(rep.E_V), num(rep.Xi_V), num(rep.gap), num(rep.tolerance),
                           flag(rep.isolated), flag(rep.converged),
                           lookup(ids, cluster_label("h^V", all)) + " " + threshold_records(ids, rep.minimizer, comp)});
        add_threshold_rows(t, rep, ids, num(alphas[i]));
        if (!rep.converged) out.not_converged("binding gap at alpha " + num(alphas[i]));
        if (!hi_scan) {
            if (rep.gap > gap_tol)
                hi_scan = alphas[i];
            else
                lo_scan = alphas[i];
        }
    }
    bool sign_change = false;
    for (std::size_t i = 0; i < reps.size(); ++i)
        for (std::size_t j = i + 1; j < reps.size(); ++j)
            sign_change = sign_change || (alphas[j] > alphas[i] && reps[i].gap <= gap_tol && reps[j].gap > gap_tol);
    out.results["gap_crosses_tolerance"] = sign_change;

    if (!bisect) return;
    if (!b.contains("lo")) b["lo"] = lo_scan.value_or(*std::min_element(alphas.begin(), alphas.end()));
    if (!b.contains("hi")) b["hi"] = hi_scan.value_or(*std::max_element(alphas.begin(), alphas.end()));
    const double lo = b["lo"].get<double>(), hi = b["hi"].get<double>();
    std::vector<BindingReport> evals;
    auto res = bisect_alpha_c(
        [&](double a) {
            evals.push_back(binding_gap(job.sys, a, job.recipe, bo));
            return evals.back().gap;
        },
        lo, hi, gap_tol, rel_width);
    auto& bt = out.table("bisection.csv", {"step", "alpha", "gap", "converged", "record"});
    for (std::size_t i = 0; i < evals.size(); ++i) {
        auto ids = record_binding(out, evals[i], res.evaluations[i].first);
        bt.add({count(i), num(res.evaluations[i].first), num(evals[i].gap), flag(evals[i].converged),
                lookup(ids, cluster_label("h^V", all))});
        if (!evals[i].converged) out.not_converged("bisection step " + count(i));
    }
    auto& c = out.table("alpha_c.csv",
                        {"alpha_c", "lo", "hi", "gap_tol", "evaluations", "monotonicity_violations", "degenerate"});
    c.add({num(res.alpha_c), num(res.lo), num(res.hi), num(gap_tol), count(res.evaluations.size()),
           count(res.monotonicity_violations), flag(res.degenerate)});
    if (!res.note.empty()) out.results["alpha_c_note"] = res.note;
}

SlopeGrid slope_grid_from(json& b, const Job& job) {
    SlopeGrid g;
    g.relative_extent = take_number(b, "relative_extent", g.relative_extent);
    g.spacing = take_number(b, "spacing", g.spacing);
    g.com_extent = take_number(b, "com_extent", job.recipe.extent);
    g.com_spacing = take_number(b, "com_spacing", job.recipe.spacing);
    g.solver = job.recipe.solver;
    return g;
}

void run_slope(Job& job, Output& out) {
    const auto alphas = require_list(job.spec, "alphas", job.command);
    json& b = block(job.spec, "slope");
    const std::size_t n = job.sys.size();
    if (!b.contains("beta")) b["beta"] = one_based(all_indices(n));
    const auto beta = indices(b["beta"], n, "/slope/beta");
    SlopeOptions o;
    o.basis = take_string(b, "basis", "inverse_alpha") == "inverse_alpha" ? SlopeBasis::inverse_alpha
                                                                          : SlopeBasis::inverse_alpha_squared;
    o.include_external = take_bool(b, "include_external", false);
    o.threads = job.threads;
    if (b.contains("removed_pair")) {
        auto p = indices(b["removed_pair"], n, "/slope/removed_pair");
        o.removed_pair = std::make_pair(p[0], p[1]);
    }
    SlopeGrid g;
    g.relative_extent = take_number(b, "relative_extent", g.relative_extent);
    g.spacing = take_number(b, "spacing", g.spacing);
    g.min_width_cells = take_number(b, "min_width_cells", g.min_width_cells);
    g.com_extent = job.recipe.extent;
    g.com_spacing = job.recipe.spacing;
    g.solver = job.recipe.solver;

    auto est = cluster_energy_slope(job.sys, beta, alphas, g, o);
    const std::string label = cluster_label(o.include_external ? "h^V" : "h^0", beta);
    auto& t = out.table("slope.csv", {"alpha", "E", "E_over_alpha2", "residual", "target", "record"});
    for (std::size_t i = 0; i < est.alphas.size(); ++i) {
        const double a = est.alphas[i];
        std::string id;
        if (!est.grids[i].axes.empty())
            id = out.record({{"label", label},
                             {"alpha", a},
                             {"energy", est.energies[i]},
                             {"residual", est.residuals[i]},
                             {"grids", json::array({to_json(est.grids[i])})}});
        t.add({num(a), num(est.energies[i]), num(est.energies[i] / (a * a)), num(est.residuals[i]), num(est.target), id});
    }
    auto& f = out.table("slope_fit.csv", {"beta", "basis", "c0", "c1", "c2", "target", "rel_error", "converged"});
    f.add({format_cluster(beta), basis_name(est.basis), num(est.coefficients[0]), num(est.coefficients[1]),
           num(est.coefficients[2]), num(est.target), num(est.rel_error), flag(est.converged)});
    if (n >= 2) {
        const double w0 = contact_value(job.sys);
        out.results["contact_value"] = w0;
        out.results["predicted_minimizer_size"] = predicted_minimizer_size(n, w0);
    }
    if (!est.converged) out.not_converged("slope fit solves");
}

void run_concentration(Job& job, Output& out) {
    const auto alphas = require_list(job.spec, "alphas", job.command);
    if (!job.spec.contains("epsilons")) job.spec["epsilons"] = std::vector<double>{0.5};
    const auto eps = job.spec["epsilons"].get<std::vector<double>>();
    json& b = block(job.spec, "concentration");
    const auto centers = take_numbers(b, "centers", {-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0});
    SlopeGrid g = slope_grid_from(b, job);

    auto scan = concentration_scan(job.sys, alphas, eps, centers, g, job.threads);
    const auto d = static_cast<std::size_t>(job.sys.d);
    GridSpec com{std::vector<Axis>(d, GridSpec::axis_for(g.com_extent, g.com_spacing))};
    auto trial = com_trial(job.sys, com, job.recipe.solver);
    std::vector<VariationalBound> bounds(scan.size());
    parallel_for(scan.size(), job.threads, [&](std::size_t i) {
        const auto& gr = scan[i].ground;
        bounds[i] = variational_upper_bound(job.sys, gr.alpha, com, trial.vector, gr.grid, gr.u);
    });
    const std::string trial_id = out.record({{"label", "com trial"},
                                             {"energy", trial.energy},
                                             {"residual", trial.residual},
                                             {"converged", trial.converged},
                                             {"grids", json::array({to_json(com)})}});
    if (!trial.converged) out.not_converged("centre-of-mass trial");

    auto& c = out.table("concentration.csv", {"alpha", "epsilon", "outside_mass", "second_moment", "energy", "record"});
    auto& s = out.table("smeared.csv", {"alpha", "x_c", "V_smeared_sum", "NV", "record"});
    auto& v = out.table("variational.csv", {"alpha", "E0", "kinetic_com", "potential", "trial_energy", "bound",
                                            "certified", "records"});
    bool monotone = true, smearing_falls = true;
    for (std::size_t i = 0; i < scan.size(); ++i) {
        const auto& p = scan[i];
        const double a = p.ground.alpha;
        const std::string id = out.record({{"label", "k(alpha)"},
                                           {"alpha", a},
                                           {"energy", p.ground.energy},
                                           {"residual", p.ground.residual},
                                           {"converged", p.ground.converged},
                                           {"grids", json::array({to_json(p.ground.grid)})}});
        if (!p.ground.converged) out.not_converged("relative ground at alpha " + num(a));
        for (std::size_t e = 0; e < eps.size(); ++e)
            c.add({num(a), num(eps[e]), num(p.profile.outside_mass[e]), num(p.profile.second_moment),
                               num(p.ground.energy), id});
        for (std::size_t x = 0; x < p.smeared.x.size(); ++x)
            s.add({num(a), num(p.smeared.x[x]), num(p.smeared.sum[x]), num(p.smeared.reference[x]), id});
        const auto& vb = bounds[i];
        v.add({num(a), num(vb.E0), num(vb.kinetic_com), num(vb.potential), num(vb.trial_energy),
                           num(vb.bound), flag(vb.bound < vb.E0), id + " " + trial_id});
        if (i > 0) {
            for (std::size_t e = 0; e < eps.size(); ++e)
                monotone = monotone && p.profile.outside_mass[e] <= scan[i - 1].profile.outside_mass[e] + 1e-3;
            smearing_falls = smearing_falls && p.smeared.sup_deviation < scan[i - 1].smeared.sup_deviation;
        }
    }
    json dev = json::array();
    for (const auto& p : scan) dev.push_back(p.smeared.sup_deviation);
    out.results["smeared_sup_deviation"] = dev;
    out.results["outside_mass_monotone"] = monotone;
    out.results["smeared_deviation_decreasing"] = smearing_falls;
}

void run_fock(Job& job, Output& out) {
    const auto kappas = require_list(job.spec, "kappas", job.command);
    if (job.sys.d != 1) throw spec_error("/system/d", "command fock-scan supports d = 1 only");
    if (job.sys.profiles.empty()) throw spec_error("/system/particles", "command fock-scan needs particle profiles");
    json& b = block(job.spec, "fock");
    const auto modes = static_cast<std::size_t>(take_integer(b, "modes", 4));
    if (modes % 2 != 0) throw spec_error("/fock/modes", "needs an even count (cosine and sine per node)");
    FockConfig fc;
    fc.n_max = static_cast<std::size_t>(take_integer(b, "n_max", 4));
    const auto points = static_cast<std::size_t>(take_integer(b, "points", 32));
    const double extent = take_number(b, "extent", 6.0);
    if (job.max_dim) b["max_dim"] = *job.max_dim;
    fc.max_dim = static_cast<std::size_t>(take_integer(b, "max_dim", static_cast<std::int64_t>(fc.max_dim)));
    const bool bound_check = take_bool(b, "bound_check", true);
    fc.modes = profile_modes_1d(job.sys.profiles[0], modes);
    fc.particle_grid = GridSpec::uniform(job.sys.size(), extent, points);

    auto scan = kappa_scan(job.sys, fc, kappas, job.recipe.solver, job.threads);
    json mode_list = json::array();
    for (const auto& m : fc.modes)
        mode_list.push_back({{"k", m.k[0]}, {"weight", m.weight}, {"parity", m.parity == ModeParity::cosine ? "cos" : "sin"}});
    json base = {{"modes", mode_list}, {"n_max", fc.n_max}, {"dimension", scan.dimension},
                 {"grids", json::array({to_json(fc.particle_grid)})}};
    json eff = base;
    eff["label"] = "H_eff + G";
    eff["energy"] = scan.E_eff;
    eff["residual"] = scan.E_eff_residual;
    eff["G"] = scan.G;
    const std::string eff_id = out.record(eff);

    auto& t = out.table("fock_scan.csv", {"kappa", "E", "target", "deviation", "residual", "vacuum_weight", "converged",
                                          "records"});
    for (const auto& r : scan.rows) {
        json rec = base;
        rec["label"] = "H(kappa)";
        rec["kappa"] = r.kappa;
        rec["energy"] = r.E;
        rec["residual"] = r.residual;
        const std::string id = out.record(rec);
        t.add({num(r.kappa), num(r.E), num(r.target), num(r.deviation), num(r.residual), num(r.vacuum_weight),
               flag(r.converged), id + " " + eff_id});
        if (!r.converged) out.not_converged("fock ground at kappa " + num(r.kappa));
    }
    out.results["E_eff"] = scan.E_eff;
    out.results["G"] = scan.G;
    out.results["dimension"] = scan.dimension;

    if (!bound_check) return;
    std::vector<BoundCheck> checks(kappas.size());
    parallel_for(kappas.size(), job.threads,
                 [&](std::size_t i) { checks[i] = variational_bound_check(job.sys, fc, kappas[i], job.recipe.solver); });
    auto& l = out.table("lemma_bound.csv", {"kappa", "E", "E_V", "correction", "bound", "tolerance", "margin",
                                            "satisfied", "dressed_margin", "dressed_satisfied", "records"});
    bool all = true;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const auto& c = checks[i];
        json rec = base;
        rec["label"] = "H(kappa) bound check";
        rec["kappa"] = c.kappa;
        rec["energy"] = c.ground;
        rec["tolerance"] = c.tolerance;
        const std::string id = out.record(rec);
        l.add({num(c.kappa), num(c.E), num(c.E_V), num(c.correction), num(c.bound), num(c.tolerance), num(c.margin),
               flag(c.satisfied), num(c.dressed_margin), flag(c.dressed_satisfied), id + " " + eff_id});
        all = all && c.satisfied;
    }
    out.results["lemma_bound_satisfied"] = all;
}

void run_mollify(Job& job, Output& out) {
    if (!job.spec.contains("mollify")) throw spec_error("/mollify", "required by command mollify-check");
    json& b = job.spec["mollify"];
    const auto radii = b["R"].get<std::vector<double>>();
    const double cap = take_number(b, "cap", MollifyStep{}.cap);
    const double sigma = take_number(b, "sigma", MollifyStep{}.sigma);
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1])) throw spec_error("/mollify/R", "radii must increase");
    std::vector<MollifyStep> steps;
    for (double r : radii) steps.push_back({r, cap, sigma});
    BindingOptions bo;
    bo.threshold.threads = job.threads;
    auto table = threshold_convergence(job.sys, std::nullopt, steps, {job.recipe}, true, bo);

    auto& t = out.table("mollify.csv", {"R", "Xi", "E_V", "diff_to_last", "perturbation", "converged", "record"});
    for (const auto& r : table.rows) {
        json rec = {{"label", "Xi_V and E_V at R"}, {"R", r.step.R}, {"cap", r.step.cap}, {"sigma", r.step.sigma},
                    {"energy", r.Xi}, {"recipe", recipe_json(r.recipe)}};
        if (r.E_V) rec["E_V"] = *r.E_V;
        const std::string id = out.record(rec);
        t.add({num(r.step.R), num(r.Xi), r.E_V ? num(*r.E_V) : "", num(r.diff_to_last), num(r.perturbation),
               flag(r.converged), id});
        if (!r.converged) out.not_converged("threshold at R " + num(r.step.R));
    }
    out.results["monotone"] = table.monotone;
    out.results["within_bound"] = table.within_bound;
    out.results["rate"] = table.rate ? json(*table.rate) : json(nullptr);
}

// ---------------------------------------------------------------- plumbing

Job resolve(json spec, const RunOptions& opt) {
    Job job;
    if (opt.threads) spec["threads"] = *opt.threads;
    if (opt.seed) spec["seed"] = *opt.seed;
    if (!spec.contains("seed")) spec["seed"] = kDefaultSeed;
    job.command = spec["command"].get<std::string>();
    job.threads = static_cast<std::size_t>(take_integer(spec, "threads", 1));
    job.seed = spec["seed"].get<std::uint64_t>();
    job.max_dim = opt.max_dim;

    json& grid = block(spec, "grid");
    if (opt.max_dim) grid["max_points"] = *opt.max_dim;
    job.recipe = parse_recipe(grid, block(spec, "solver"));
    job.recipe.solver.seed = job.seed;

    job.sys = parse_system(spec["system"], "/system");
    try {
        job.sys.validate();
    } catch (const ebind::error& e) {
        throw spec_error("/system", e.what());
    }
    if (spec.contains("alpha")) {
        job.alpha = spec["alpha"].get<double>();
        job.sys = with_uniform_coupling(job.sys, *job.alpha);
    }
    job.spec = std::move(spec);
    return job;
}

void dispatch(Job& job, Output& out) {
    const auto& c = job.command;
    if (c == "veff") return run_veff(job, out);
    if (c == "spectrum") return run_spectrum(job, out);
    if (c == "binding") return run_binding(job, out);
    if (c == "alpha-scan") return run_alpha_scan(job, out);
    if (c == "slope") return run_slope(job, out);
    if (c == "concentration") return run_concentration(job, out);
    if (c == "fock-scan") return run_fock(job, out);
    if (c == "mollify-check") return run_mollify(job, out);
    throw spec_error("/command", "unknown command " + c);
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const std::filesystem::path& p, const std::string& body) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw error("cannot write " + p.string());
    f << body;
    if (!f) throw error("write failed for " + p.string());
}

int finish(const Job& job, Output& out, const json& input, const RunOptions& opt, int code, const std::string& status,
           const std::string& message, std::ostream& log) {
    if (code == exit_ok && !out.converged) code = exit_not_converged;
    std::filesystem::create_directories(opt.out_dir);
    json files = json::array();
    for (const auto& t : out.tables) {
        const std::string body = t.render();
        write_file(opt.out_dir / t.name, body);
        files.push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows.size()}, {"fnv1a64", fnv1a64_hex(body)}});
    }
    json m;
    m["software"] = {{"name", "ebind"}, {"version", EBIND_VERSION}};
    m["command"] = job.command;
    m["spec"] = job.spec;
    m["spec_hash"] = fnv1a64_hex(job.spec.dump());
    m["input_hash"] = fnv1a64_hex(input.dump());
    m["seed"] = job.seed;
    m["threads"] = job.threads;
    if (opt.write_timestamp) m["created"] = utc_now();
    m["status"] = code == exit_ok ? "ok" : (status.empty() ? "not_converged" : status);
    m["exit_code"] = code;
    if (!message.empty()) m["message"] = message;
    m["flags"] = out.flags;
    m["files"] = files;
    m["records"] = out.records;
    m["results"] = out.results;
    write_file(opt.out_dir / "manifest.json", m.dump(2) + "\n");
    for (const auto& f : out.flags) log << "warning: not converged: " << f.get<std::string>() << "\n";
    return code;
}

}  // namespace

int run(const json& spec, const RunOptions& opt, std::ostream& log) {
    auto issues = validate_runspec(spec);
    if (!issues.empty()) {
        for (const auto& i : issues) log << "error: " << (i.path.empty() ? "/" : i.path) << ": " << i.message << "\n";
        return exit_validation;
    }
    Job job;
    try {
        job = resolve(spec, opt);
    } catch (const spec_error& e) {
        log << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const ebind::error& e) {
        log << "error: /system: " << e.what() << "\n";
        return exit_validation;
    }

    Output out;
    int code = exit_ok;
    std::string status, message;
    try {
        dispatch(job, out);
    } catch (const spec_error& e) {
        log << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const domain_error& e) {
        log << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const invalid_profile& e) {
        log << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const infrared_divergence& e) {
        log << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const unsupported& e) {
        log << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const too_large& e) {
        code = exit_resource;
        status = "too_large";
        message = e.what();
        out.results["required_size"] = e.required();
        out.results["cap"] = e.cap();
    } catch (const resolution_error& e) {
        code = exit_not_converged;
        status = "resolution_error";
        message = e.what();
    } catch (const not_converged& e) {
        code = exit_not_converged;
        status = "not_converged";
        message = e.what();
    } catch (const std::exception& e) {
        code = exit_failure;
        status = "error";
        message = e.what();
    }
    if (!message.empty()) log << "error: " << message << "\n";
    try {
        return finish(job, out, spec, opt, code, status, message, log);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return exit_failure;
    }
}

int run_file(const std::filesystem::path& spec_path, const RunOptions& opt, std::ostream& log) {
    std::ifstream f(spec_path);
    if (!f) {
        log << "error: cannot read " << spec_path.string() << "\n";
        return exit_validation;
    }
    json spec;
    try {
        spec = json::parse(f);
    } catch (const json::parse_error& e) {
        log << "error: " << spec_path.string() << ": " << e.what() << "\n";
        return exit_validation;
    }
    return run(spec, opt, log);
}

}  // namespace ebind::cli
