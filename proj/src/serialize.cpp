#include "serialize.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>

namespace ebind::cli {

using nlohmann::json;

double take_number(json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) obj[key] = fallback;
    return obj[key].get<double>();
}

std::int64_t take_integer(json& obj, const char* key, std::int64_t fallback) {
    if (!obj.contains(key)) obj[key] = fallback;
    return obj[key].get<std::int64_t>();
}

bool take_bool(json& obj, const char* key, bool fallback) {
    if (!obj.contains(key)) obj[key] = fallback;
    return obj[key].get<bool>();
}

std::string take_string(json& obj, const char* key, const std::string& fallback) {
    if (!obj.contains(key)) obj[key] = fallback;
    return obj[key].get<std::string>();
}

std::vector<double> take_numbers(json& obj, const char* key, const std::vector<double>& fallback) {
    if (!obj.contains(key)) obj[key] = fallback;
    return obj[key].get<std::vector<double>>();
}

RadialPotential parse_potential(const json& j, const std::string& path) {
    const std::string kind = j.at("kind").get<std::string>();
    auto need = [&](const char* key) -> const json& {
        if (!j.contains(key)) throw spec_error(path + "/" + key, "required for kind " + kind);
        return j.at(key);
    };
    if (kind == "zero") return ZeroPotential{};
    if (kind == "square_well") return SquareWell{need("depth").get<double>(), need("width").get<double>()};
    if (kind == "gaussian_sum") {
        GaussianSum g{need("amplitudes").get<std::vector<double>>(), need("widths").get<std::vector<double>>()};
        if (g.amplitudes.size() != g.widths.size())
            throw spec_error(path + "/widths", "needs one width per amplitude");
        return g;
    }
    if (kind == "coulomb_tail") return CoulombTail{need("strength").get<double>(), need("core").get<double>()};
    auto r = need("radii").get<std::vector<double>>();
    auto v = need("values").get<std::vector<double>>();
    try {
        return PairPotential(std::move(r), std::move(v));
    } catch (const ebind::error& e) {
        throw spec_error(path, e.what());
    }
}

CutoffProfile parse_profile(const json& j, int d, const std::string& path) {
    const std::string kind = j.at("kind").get<std::string>();
    auto need = [&](const char* key) -> double {
        if (!j.contains(key)) throw spec_error(path + "/" + key, "required for kind " + kind);
        return j.at(key).get<double>();
    };
    const double amp = j.value("amplitude", 1.0);
    try {
        if (kind == "shell") {
            auto form = j.value("form", std::string("rho_over_sqrt_omega")) == "lambda_hat"
                            ? ProfileForm::lambda_hat
                            : ProfileForm::rho_over_sqrt_omega;
            return CutoffProfile::shell(d, j.value("ir", 0.0), need("uv"), amp, form);
        }
        auto form = j.value("form", std::string("lambda_hat")) == "lambda_hat" ? ProfileForm::lambda_hat
                                                                              : ProfileForm::rho_over_sqrt_omega;
        if (kind == "gaussian") return CutoffProfile::gaussian(d, j.value("ir", 0.0), need("width"), amp, form);
        if (!j.contains("samples")) throw spec_error(path + "/samples", "required for kind table");
        std::vector<std::pair<double, double>> s;
        for (const auto& p : j.at("samples")) s.emplace_back(p[0].get<double>(), p[1].get<double>());
        return CutoffProfile::tabulated(d, std::move(s), amp, form);
    } catch (const spec_error&) {
        throw;
    } catch (const ebind::error& e) {
        throw spec_error(path, e.what());
    }
}

ParticleSystem parse_system(json& system, const std::string& path) {
    ParticleSystem sys;
    sys.d = system.at("d").get<int>();
    json expanded = json::array();
    bool any_profile = false, all_profile = true;
    const auto& parts = system.at("particles");
    for (std::size_t i = 0; i < parts.size(); ++i) {
        json p = parts[i];
        const std::string pp = path + "/particles/" + std::to_string(i);
        const auto count = p.value("count", std::int64_t{1});
        p.erase("count");
        if (!p.contains("coupling")) p["coupling"] = 1.0;
        if (!p.contains("external")) p["external"] = json{{"kind", "zero"}};
        const bool has_profile = p.contains("profile");
        if (has_profile) {
            json& pr = p["profile"];
            const std::string kind = pr.at("kind").get<std::string>();
            if (!pr.contains("amplitude")) pr["amplitude"] = 1.0;
            if (!pr.contains("form")) pr["form"] = kind == "shell" ? "rho_over_sqrt_omega" : "lambda_hat";
            if (kind != "table" && !pr.contains("ir")) pr["ir"] = 0.0;
        }
        any_profile = any_profile || has_profile;
        all_profile = all_profile && has_profile;
        for (std::int64_t c = 0; c < count; ++c) {
            sys.masses.push_back(p.at("mass").get<double>());
            sys.couplings.push_back(p.at("coupling").get<double>());
            sys.external.push_back(parse_potential(p.at("external"), pp + "/external"));
            if (has_profile) sys.profiles.push_back(parse_profile(p.at("profile"), sys.d, pp + "/profile"));
            expanded.push_back(p);
        }
    }
    if (any_profile && !all_profile)
        throw spec_error(path + "/particles", "either every particle or none has a profile");
    if (system.contains("pair_kernel")) sys.pair_kernel = parse_potential(system.at("pair_kernel"), path + "/pair_kernel");
    if (!any_profile && !sys.pair_kernel)
        throw spec_error(path, "needs particle profiles or a pair_kernel");
    if (sys.size() > 20) throw spec_error(path + "/particles", "at most 20 particles");
    system["particles"] = std::move(expanded);
    return sys;
}

GridRecipe parse_recipe(json& grid, json& solver) {
    GridRecipe g;
    g.extent = take_number(grid, "extent", g.extent);
    g.relative_extent = take_number(grid, "relative_extent", g.relative_extent);
    g.spacing = take_number(grid, "spacing", g.spacing);
    g.protocol = take_string(grid, "protocol", "single") == "richardson" ? BoxProtocol::richardson : BoxProtocol::single;
    g.max_points = static_cast<std::size_t>(take_integer(grid, "max_points", static_cast<std::int64_t>(g.max_points)));
    g.solver.tol = take_number(solver, "tol", g.solver.tol);
    g.solver.max_matvecs =
        static_cast<std::size_t>(take_integer(solver, "max_matvecs", static_cast<std::int64_t>(g.solver.max_matvecs)));
    return g;
}

json to_json(const GridSpec& g) {
    json axes = json::array();
    for (const auto& a : g.axes) axes.push_back({{"extent", a.extent}, {"points", a.points}, {"spacing", a.spacing()}});
    return {{"axes", axes}, {"points", g.size()}};
}

json to_json(const ClusterEnergy& c) {
    json grids = json::array();
    for (const auto& g : c.grids) grids.push_back(to_json(g));
    return {{"label", c.label},
            {"energy", c.energy},
            {"residual", c.residual},
            {"converged", c.converged},
            {"protocol", protocol_name(c.protocol)},
            {"box_energies", c.box_energies},
            {"grids", grids}};
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";  // folds -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string format_cluster(const std::vector<std::size_t>& beta) {
    std::string s;
    for (std::size_t i = 0; i < beta.size(); ++i) s += (i ? " " : "") + std::to_string(beta[i] + 1);
    return s;
}

void CsvTable::add(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw std::logic_error("csv: row width differs from header in " + name);
    rows.push_back(std::move(row));
}

std::string CsvTable::render() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
        out += "\n";
    }
    return out;
}

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

}  // namespace ebind::cli
