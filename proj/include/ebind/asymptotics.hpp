#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ebind/binding.hpp"
#include "ebind/eigensolve.hpp"
#include "ebind/errors.hpp"
#include "ebind/jacobi.hpp"
#include "ebind/lattice.hpp"
#include "ebind/parallel.hpp"
#include "ebind/system.hpp"

namespace ebind {

// Correction terms fitted next to the constant in E(alpha)/alpha^2.
enum class SlopeBasis {
    inverse_alpha,          // 1, 1/alpha, 1/alpha^2
    inverse_alpha_squared,  // 1, 1/alpha^2, 1/alpha^4
};

inline const char* basis_name(SlopeBasis b) {
    return b == SlopeBasis::inverse_alpha ? "inverse_alpha" : "inverse_alpha_squared";
}

// alpha-adaptive lattice: relative axes have half-width relative_extent/sqrt(alpha)
// and spacing spacing/sqrt(alpha). Centre-of-mass axes (external potentials only)
// stay fixed.
struct SlopeGrid {
    double relative_extent = 8.0;
    double spacing = 0.1;
    double com_extent = 10.0;
    double com_spacing = 0.1;
    double min_width_cells = 3.0;  // rms width of |u|^2 per axis, in spacings
    double max_edge_mass = 1e-4;   // weight of |u|^2 in the outer tenth of each axis
    SolverOptions solver = [] {
        SolverOptions s;
        s.tol = 1e-9;
        return s;
    }();
};

struct SlopeOptions {
    SlopeBasis basis = SlopeBasis::inverse_alpha;
    bool include_external = false;
    std::optional<std::pair<std::size_t, std::size_t>> removed_pair;
    std::size_t threads = 1;
};

struct SlopeEstimate {
    std::vector<std::size_t> beta;
    std::vector<double> alphas;
    std::vector<double> energies;
    std::vector<double> residuals;
    std::vector<GridSpec> grids;
    std::array<double, 3> coefficients{};
    SlopeBasis basis = SlopeBasis::inverse_alpha;
    double slope_fit = 0.0;
    double target = 0.0;
    double rel_error = 0.0;
    bool converged = true;
};

// Least squares for E/alpha^2 = c0 + c1 b1(alpha) + c2 b2(alpha).
inline std::array<double, 3> fit_slope(const std::vector<double>& alphas, const std::vector<double>& energies,
                                       SlopeBasis basis) {
    if (alphas.size() != energies.size() || alphas.size() < 3)
        throw domain_error("fit_slope: need at least three (alpha, E) points");
    double a[3][4] = {};
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const double t = basis == SlopeBasis::inverse_alpha ? 1.0 / alphas[i] : 1.0 / (alphas[i] * alphas[i]);
        const double row[3] = {1.0, t, t * t};
        const double y = energies[i] / (alphas[i] * alphas[i]);
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) a[r][c] += row[r] * row[c];
            a[r][3] += row[r] * y;
        }
    }
    for (int c = 0; c < 3; ++c) {
        int p = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        if (a[p][c] == 0.0) throw domain_error("fit_slope: coupling values are not distinct");
        std::swap(a[p], a[c]);
        for (int r = 0; r < 3; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (int k = c; k < 4; ++k) a[r][k] -= f * a[c][k];
        }
    }
    return {a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]};
}

// Pair kernel at contact, without couplings.
inline double contact_value(const ParticleSystem& sys, std::size_t i = 0, std::size_t j = 1) {
    return PairField(sys, 1.0).kernel(i, j, 0.0);
}

// lim E(alpha, beta)/alpha^2 for identical pair kernels: |beta|(|beta|-1) W(0),
// less 2 W(0) when one pair is removed.
inline double slope_target(std::size_t cluster_size, double W0, bool pair_removed = false) {
    const double n = static_cast<double>(cluster_size);
    return (n * (n - 1.0) - (pair_removed ? 2.0 : 0.0)) * W0;
}

// Predicted Xi/alpha^2 for the split with |beta| = k bound to V.
inline double predicted_split_slope(std::size_t N, std::size_t k, double W0) {
    const double n = static_cast<double>(N), b = static_cast<double>(k);
    return (n * (n - 1.0) + 2.0 * b * (b - n)) * W0;
}

// Cluster size minimizing the predicted split slope; ties go to the smaller size.
inline std::size_t predicted_minimizer_size(std::size_t N, double W0) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < N; ++k)
        if (predicted_split_slope(N, k, W0) < predicted_split_slope(N, best, W0)) best = k;
    return best;
}

namespace detail {

inline GridSpec slope_grid(const ParticleSystem& sys, std::size_t n, double alpha, const SlopeGrid& g,
                           bool com) {
    const std::size_t d = static_cast<std::size_t>(sys.d);
    const double s = 1.0 / std::sqrt(alpha);
    GridSpec spec;
    if (com)
        for (std::size_t k = 0; k < d; ++k) spec.axes.push_back(GridSpec::axis_for(g.com_extent, g.com_spacing));
    for (std::size_t k = 0; k + 1 < n; ++k)
        for (std::size_t a = 0; a < d; ++a)
            spec.axes.push_back(GridSpec::axis_for(s * g.relative_extent, s * g.spacing));
    return spec;
}

// Throws when |u|^2 is narrower than the lattice resolves or leaks into the walls.
inline void check_resolved(const GridSpec& grid, std::span<const double> u, std::size_t first_axis,
                           const SlopeGrid& g, double alpha) {
    const std::size_t dims = grid.dims();
    std::vector<double> m2(dims, 0.0), edge(dims, 0.0);
    double total = 0.0;
    GridCursor cur(grid);
    for (std::size_t i = 0; i < grid.size(); ++i, cur.next()) {
        const double w = u[i] * u[i];
        total += w;
        for (std::size_t a = first_axis; a < dims; ++a) {
            const double y = cur.coords()[a];
            m2[a] += w * y * y;
            if (std::abs(y) > 0.9 * grid.axes[a].extent) edge[a] += w;
        }
    }
    for (std::size_t a = first_axis; a < dims; ++a) {
        const double h = grid.axes[a].spacing();
        const double width = std::sqrt(m2[a] / total);
        if (width < g.min_width_cells * h)
            throw resolution_error("cluster_energy_slope: ground state at alpha = " + std::to_string(alpha) +
                                   " spans " + std::to_string(width / h) + " lattice spacings");
        if (edge[a] / total > g.max_edge_mass)
            throw resolution_error("cluster_energy_slope: ground state at alpha = " + std::to_string(alpha) +
                                   " reaches the box walls");
    }
}

}  // namespace detail

// Fits lim E(alpha, beta)/alpha^2 for a uniform coupling alpha. Clusters of two or
// more equal-mass particles are solved in relative coordinates (plus the centre
// of mass with external potentials).
inline SlopeEstimate cluster_energy_slope(const ParticleSystem& sys, const std::vector<std::size_t>& beta,
                                          const std::vector<double>& alphas, const SlopeGrid& g = {},
                                          const SlopeOptions& opt = {}) {
    sys.validate();
    detail::check_beta(sys, beta);
    if (alphas.size() < 3) throw domain_error("cluster_energy_slope: need at least three couplings");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0)) throw domain_error("cluster_energy_slope: couplings must be positive");
        if (i > 0 && !(alphas[i] > alphas[i - 1]))
            throw domain_error("cluster_energy_slope: couplings must be strictly increasing");
    }
    if (opt.removed_pair) {
        auto [p, q] = *opt.removed_pair;
        if (std::find(beta.begin(), beta.end(), p) == beta.end() ||
            std::find(beta.begin(), beta.end(), q) == beta.end() || p == q)
            throw domain_error("cluster_energy_slope: removed pair must lie in the cluster");
    }

    SlopeEstimate out;
    out.beta = beta;
    out.alphas = alphas;
    out.basis = opt.basis;
    out.energies.assign(alphas.size(), 0.0);
    out.residuals.assign(alphas.size(), 0.0);
    out.grids.assign(alphas.size(), GridSpec{});
    double W0 = 0.0;
    if (beta.size() >= 2) W0 = contact_value(sys, beta[0], beta[1]);
    out.target = slope_target(beta.size(), W0, opt.removed_pair.has_value());

    const bool trivial = beta.empty() || (beta.size() == 1 && !opt.include_external);
    if (!trivial && beta.size() >= 2 && !detail::equal_masses_in(sys, beta))
        throw unsupported("cluster_energy_slope: unequal masses");
    std::vector<char> ok(alphas.size(), 1);
    if (!trivial) {
        parallel_for(alphas.size(), opt.threads, [&](std::size_t i) {
            const double a = alphas[i];
            BuildOptions bo;
            bo.alpha = a;
            bo.removed_pair = opt.removed_pair;
            const bool com = opt.include_external;
            GridSpec grid = detail::slope_grid(sys, beta.size(), a, g, com);
            LatticeOperator op = beta.size() == 1
                                     ? build_cluster_hamiltonian(sys, beta, grid, true, bo)
                                     : build_jacobi_hamiltonian(sys, beta, grid, com, com, bo);
            auto r = ground_state(op, g.solver);
            if (beta.size() >= 2) detail::check_resolved(grid, r.vector, com ? sys.d : 0, g, a);
            out.energies[i] = r.energy;
            out.residuals[i] = r.residual;
            out.grids[i] = grid;
            ok[i] = r.converged;
        });
    }
    for (char c : ok) out.converged = out.converged && c;
    out.coefficients = fit_slope(out.alphas, out.energies, opt.basis);
    out.slope_fit = out.coefficients[0];
    out.rel_error = out.target != 0.0 ? std::abs(out.slope_fit - out.target) / std::abs(out.target)
                                      : std::abs(out.slope_fit);
    return out;
}

// Ground state of k(alpha) on an alpha-adaptive relative grid.
struct RelativeGround {
    double alpha = 0.0;
    GridSpec grid;
    std::vector<double> u;  // unit l2 norm
    double energy = 0.0;
    double residual = 0.0;
    bool converged = false;
};

inline RelativeGround relative_ground(const ParticleSystem& sys, double alpha, const SlopeGrid& g = {}) {
    RelativeGround out;
    out.alpha = alpha;
    out.grid = detail::slope_grid(sys, sys.size(), alpha, g, false);
    auto r = ground_state(build_relative_hamiltonian(sys, out.grid, alpha), g.solver);
    out.u = std::move(r.vector);
    out.energy = r.energy;
    out.residual = r.residual;
    out.converged = r.converged;
    return out;
}

struct ConcentrationProfile {
    double alpha = 0.0;
    std::vector<double> epsilon;
    std::vector<double> outside_mass;
    double second_moment = 0.0;  // of |Y0|
};

// Weight of |u|^2 outside the ball |Y0| <= eps, Y0 the stacked relative coordinates.
inline ConcentrationProfile concentration_profile(std::span<const double> u, const GridSpec& grid,
                                                  const std::vector<double>& eps, double alpha = 0.0) {
    if (u.size() != grid.size()) throw domain_error("concentration_profile: vector does not match grid");
    double reach = 0.0;
    for (const auto& a : grid.axes) reach = std::max(reach, a.extent);
    for (double e : eps)
        if (!(e >= 0.0) || e > reach) throw domain_error("concentration_profile: epsilon exceeds the box");
    ConcentrationProfile out;
    out.alpha = alpha;
    out.epsilon = eps;
    out.outside_mass.assign(eps.size(), 0.0);
    double total = 0.0;
    GridCursor cur(grid);
    for (std::size_t i = 0; i < grid.size(); ++i, cur.next()) {
        double r2 = 0.0;
        for (double y : cur.coords()) r2 += y * y;
        const double w = u[i] * u[i];
        total += w;
        out.second_moment += w * r2;
        const double r = std::sqrt(r2);
        for (std::size_t k = 0; k < eps.size(); ++k)
            if (r > eps[k]) out.outside_mass[k] += w;
    }
    if (!(total > 0.0)) throw domain_error("concentration_profile: zero vector");
    for (auto& m : out.outside_mass) m /= total;
    out.second_moment /= total;
    return out;
}

struct SmearedPotential {
    std::vector<double> x;                      // x_c along the first axis
    std::vector<std::vector<double>> per_particle;  // [j][i]
    std::vector<double> sum;
    std::vector<double> reference;              // N V(x_c)
    double sup_deviation = 0.0;
};

// V_j smeared over |u(Y0)|^2 with the centre of mass at x_c = x e_1; u lives on
// the relative grid of N equal-mass particles in d dimensions.
inline SmearedPotential smeared_potential(const std::vector<RadialPotential>& V, std::span<const double> u,
                                          const GridSpec& rel, int d, const std::vector<double>& xs) {
    const std::size_t N = V.size();
    const auto du = static_cast<std::size_t>(d);
    if (N < 2) throw domain_error("smeared_potential: need at least two particles");
    if (rel.dims() != (N - 1) * du || u.size() != rel.size())
        throw domain_error("smeared_potential: relative grid does not match");
    const JacobiTransform J = jacobi_matrix(N);
    SmearedPotential out;
    out.x = xs;
    out.per_particle.assign(N, std::vector<double>(xs.size(), 0.0));
    out.sum.assign(xs.size(), 0.0);
    out.reference.assign(xs.size(), 0.0);
    double total = 0.0;
    for (double v : u) total += v * v;
    if (!(total > 0.0)) throw domain_error("smeared_potential: zero vector");
    // relative offsets x_j - x_c are independent of x_c
    std::vector<double> offsets(rel.size() * N * du);
    std::vector<double> Y(N * du, 0.0);
    GridCursor cur(rel);
    for (std::size_t k = 0; k < rel.size(); ++k, cur.next()) {
        for (std::size_t t = 0; t < rel.dims(); ++t) Y[du + t] = cur.coords()[t];
        auto x = positions_from_jacobi(Y, J, du);
        std::copy(x.begin(), x.end(), offsets.begin() + static_cast<std::ptrdiff_t>(k * N * du));
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < N; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < rel.size(); ++k) {
                const double w = u[k] * u[k];
                if (w == 0.0) continue;
                const double* o = &offsets[(k * N + j) * du];
                double r2 = (xs[i] + o[0]) * (xs[i] + o[0]);
                for (std::size_t a = 1; a < du; ++a) r2 += o[a] * o[a];
                s += w * evaluate(V[j], std::sqrt(r2));
            }
            out.per_particle[j][i] = s / total;
            out.sum[i] += s / total;
            out.reference[i] += evaluate(V[j], xs[i]);
        }
        out.sup_deviation = std::max(out.sup_deviation, std::abs(out.sum[i] - out.reference[i]));
    }
    return out;
}

struct VariationalBound {
    double kinetic_com = 0.0;  // (v, -Delta/(2Nm) v)
    double E0 = 0.0;           // (u, k(alpha) u)
    double potential = 0.0;    // (Psi, sum_j V(x_j) Psi)
    double bound = 0.0;
    double trial_energy = 0.0;  // (v, (-Delta/(2Nm) + N V) v)
    bool trial_negative = false;
    double direct = 0.0;        // (Psi, h^V Psi) from the assembled operator
    double decomposition_error = 0.0;
};

// One-body operator -Delta/(2Nm) + N V on the centre-of-mass grid.
inline LatticeOperator com_trial_operator(const ParticleSystem& sys, const GridSpec& com) {
    const double N = static_cast<double>(sys.size());
    LatticeOperator op;
    op.grid = com;
    op.label = "com_trial";
    op.kinetic_coeffs.assign(com.dims(), 0.5 / (N * sys.masses.front()));
    op.potential_diag.resize(com.size());
    GridCursor cur(com);
    for (std::size_t i = 0; i < com.size(); ++i, cur.next()) {
        double r2 = 0.0;
        for (double c : cur.coords()) r2 += c * c;
        op.potential_diag[i] = N * evaluate(sys.external.front(), std::sqrt(r2));
    }
    return op;
}

// Trial Psi = v(x_c) u(Y0) for h^V(alpha): returns the three terms of the
// centre-of-mass decomposition and their sum. `direct` assembles h^V on the
// product grid and evaluates the same quadratic form, for product grids up to
// `direct_cap` points.
inline VariationalBound variational_upper_bound(const ParticleSystem& sys, double alpha, const GridSpec& com,
                                                std::span<const double> v, const GridSpec& rel,
                                                std::span<const double> u, std::size_t direct_cap = 4'000'000) {
    sys.validate();
    if (!sys.equal_masses()) throw unsupported("variational_upper_bound: unequal masses");
    const std::size_t N = sys.size();
    const auto d = static_cast<std::size_t>(sys.d);
    if (com.dims() != d || v.size() != com.size()) throw domain_error("variational_upper_bound: bad trial v");
    if (rel.dims() != (N - 1) * d || u.size() != rel.size())
        throw domain_error("variational_upper_bound: bad relative vector");
    const double vv = detail::dot(v, v), uu = detail::dot(u, u);

    VariationalBound out;
    LatticeOperator trial = com_trial_operator(sys, com);
    LatticeOperator kin = trial;
    std::fill(kin.potential_diag.begin(), kin.potential_diag.end(), 0.0);
    out.kinetic_com = rayleigh_quotient(kin, v);
    out.trial_energy = rayleigh_quotient(trial, v);
    out.trial_negative = out.trial_energy < 0.0;
    out.E0 = rayleigh_quotient(build_relative_hamiltonian(sys, rel, alpha), u);

    const JacobiTransform J = jacobi_matrix(N);
    std::vector<double> Y(N * d, 0.0);
    GridCursor rc(rel);
    std::vector<double> offsets(rel.size() * N * d);
    for (std::size_t k = 0; k < rel.size(); ++k, rc.next()) {
        for (std::size_t t = 0; t < rel.dims(); ++t) Y[d + t] = rc.coords()[t];
        auto x = positions_from_jacobi(Y, J, d);
        std::copy(x.begin(), x.end(), offsets.begin() + static_cast<std::ptrdiff_t>(k * N * d));
    }
    double pot = 0.0;
    GridCursor cc(com);
    for (std::size_t i = 0; i < com.size(); ++i, cc.next()) {
        const double wi = v[i] * v[i];
        if (wi == 0.0) continue;
        double s = 0.0;
        for (std::size_t k = 0; k < rel.size(); ++k) {
            const double wk = u[k] * u[k];
            if (wk == 0.0) continue;
            double vk = 0.0;
            for (std::size_t j = 0; j < N; ++j) {
                double r2 = 0.0;
                for (std::size_t a = 0; a < d; ++a) {
                    const double x = cc.coords()[a] + offsets[(k * N + j) * d + a];
                    r2 += x * x;
                }
                vk += evaluate(sys.external[j], std::sqrt(r2));
            }
            s += wk * vk;
        }
        pot += wi * s;
    }
    out.potential = pot / (vv * uu);
    out.bound = out.kinetic_com + out.E0 + out.potential;

    if (com.size() * rel.size() <= direct_cap) {
        GridSpec full = com;
        for (const auto& a : rel.axes) full.axes.push_back(a);
        std::vector<std::size_t> all(N);
        for (std::size_t i = 0; i < N; ++i) all[i] = i;
        BuildOptions bo;
        bo.alpha = alpha;
        bo.max_points = direct_cap;
        LatticeOperator h = build_jacobi_hamiltonian(sys, all, full, true, true, bo);
        std::vector<double> psi(full.size());
        for (std::size_t i = 0; i < com.size(); ++i)
            for (std::size_t k = 0; k < rel.size(); ++k) psi[i * rel.size() + k] = v[i] * u[k];
        out.direct = rayleigh_quotient(h, psi);
        out.decomposition_error = std::abs(out.direct - out.bound);
    } else {
        out.direct = std::numeric_limits<double>::quiet_NaN();
        out.decomposition_error = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

// Ground vector of -Delta/(2Nm) + N V on `com`, the trial used for the bound.
inline SpectralResult com_trial(const ParticleSystem& sys, const GridSpec& com, const SolverOptions& s = {}) {
    return ground_state(com_trial_operator(sys, com), s);
}

// One point of a concentration scan: k(alpha) ground state, its outside mass
// and the smearing deviation of the external potentials.
struct ConcentrationPoint {
    RelativeGround ground;
    ConcentrationProfile profile;
    SmearedPotential smeared;
};

inline std::vector<ConcentrationPoint> concentration_scan(const ParticleSystem& sys, const std::vector<double>& alphas,
                                                          const std::vector<double>& eps, const std::vector<double>& xs,
                                                          const SlopeGrid& g = {}, std::size_t threads = 1) {
    sys.validate();
    if (sys.size() < 2) throw domain_error("concentration_scan: need at least two particles");
    if (!sys.equal_masses()) throw unsupported("concentration_scan: unequal masses");
    std::vector<ConcentrationPoint> out(alphas.size());
    parallel_for(alphas.size(), threads, [&](std::size_t i) {
        auto& p = out[i];
        p.ground = relative_ground(sys, alphas[i], g);
        p.profile = concentration_profile(p.ground.u, p.ground.grid, eps, alphas[i]);
        p.smeared = smeared_potential(sys.external, p.ground.u, p.ground.grid, sys.d, xs);
    });
    return out;
}

}  // namespace ebind
