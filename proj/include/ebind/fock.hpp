#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ebind/eigensolve.hpp"
#include "ebind/errors.hpp"
#include "ebind/lattice.hpp"
#include "ebind/parallel.hpp"
#include "ebind/quadrature.hpp"
#include "ebind/system.hpp"

namespace ebind {

enum class ModeParity { cosine, sine };

// One real field oscillator: the cosine or sine part of e^{ik.x}. Weights are
// such that sum_m w_m f(k_m) approximates the integral of an even f over R^d.
struct FockMode {
    std::vector<double> k;
    double weight = 0.0;
    ModeParity parity = ModeParity::cosine;

    double omega() const {
        double s = 0.0;
        for (double c : k) s += c * c;
        return std::sqrt(s);
    }
    double phase(std::span<const double> x) const {
        double s = 0.0;
        for (std::size_t a = 0; a < k.size(); ++a) s += k[a] * x[a];
        return parity == ModeParity::cosine ? std::cos(s) : std::sin(s);
    }
    friend bool operator==(const FockMode&, const FockMode&) = default;
};

struct FockConfig {
    std::vector<FockMode> modes;
    std::size_t n_max = 4;  // bound on the total boson number
    GridSpec particle_grid;  // N d axes in particle coordinates; no axes freezes the particles
    std::vector<double> frozen_positions;  // N d entries, used when the grid has no axes
    std::size_t max_dim = 4'000'000;

    void validate(const ParticleSystem& sys) const {
        for (const auto& m : modes) {
            if (m.k.size() != static_cast<std::size_t>(sys.d))
                throw domain_error("fock: mode wavevector has the wrong dimension");
            if (!(m.weight > 0.0)) throw domain_error("fock: mode weights must be positive");
            if (!(m.omega() > 0.0)) throw domain_error("fock: zero mode is excluded");
        }
        const std::size_t nd = sys.size() * static_cast<std::size_t>(sys.d);
        if (particle_grid.dims() == 0) {
            if (frozen_positions.size() != nd) throw domain_error("fock: frozen positions need N d entries");
        } else {
            if (particle_grid.dims() != nd) throw domain_error("fock: particle grid needs N d axes");
            particle_grid.validate();
        }
    }
};

// d = 1 modes on the support of a profile: `count` real modes from count/2
// Gauss-Legendre wavenumbers, each giving a cosine and a sine oscillator.
inline std::vector<FockMode> gauss_modes_1d(double k_lo, double k_hi, std::size_t count) {
    if (count == 0 || count % 2 != 0) throw domain_error("gauss_modes_1d: mode count must be even and positive");
    if (!(k_lo >= 0.0) || !(k_hi > k_lo)) throw domain_error("gauss_modes_1d: bad wavenumber interval");
    auto rule = gauss_legendre(count / 2, k_lo, k_hi);
    std::vector<FockMode> out;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        // the integral over R is twice the integral over k > 0; cosine and sine share it
        out.push_back({{rule.nodes[i]}, rule.weights[i], ModeParity::cosine});
        out.push_back({{rule.nodes[i]}, rule.weights[i], ModeParity::sine});
    }
    return out;
}

inline std::vector<FockMode> profile_modes_1d(const CutoffProfile& p, std::size_t count) {
    if (p.d != 1) throw unsupported("profile_modes_1d: profile is not one-dimensional");
    auto [lo, hi] = p.support();
    return gauss_modes_1d(lo, hi, count);
}

// C(M + n, n), or nullopt past the size_t range.
inline std::optional<std::size_t> fock_dimension(std::size_t modes, std::size_t n_max) {
    long double c = 1.0L;
    for (std::size_t i = 1; i <= n_max; ++i) c = c * static_cast<long double>(modes + i) / static_cast<long double>(i);
    if (c > static_cast<long double>(std::numeric_limits<std::size_t>::max() / 2)) return std::nullopt;
    return static_cast<std::size_t>(std::llround(c));
}

// ||lambda_j||^2 with the mode quadrature.
inline double discrete_norm_sq(const CutoffProfile& p, const std::vector<FockMode>& modes) {
    double s = 0.0;
    for (const auto& m : modes) s += m.weight * std::pow(p.lambda_hat(m.omega()), 2);
    return s;
}

// -(1/4) sum_j c_j sum_m w_m lambda_j(k_m)^2 / omega_m, with c_j = alpha_j^2 when
// `with_couplings` and 1 otherwise.
inline double discrete_self_energy(const ParticleSystem& sys, const std::vector<FockMode>& modes,
                                   bool with_couplings = true) {
    if (sys.profiles.empty()) throw unsupported("discrete_self_energy: system has no cutoff profiles");
    double g = 0.0;
    for (std::size_t j = 0; j < sys.size(); ++j) {
        const double c = with_couplings ? sys.couplings[j] * sys.couplings[j] : 1.0;
        for (const auto& m : modes) g -= 0.25 * c * m.weight * std::pow(sys.profiles[j].lambda_hat(m.omega()), 2) / m.omega();
    }
    return g;
}

// alpha_i alpha_j W_ij(r) from the same modes: -(1/4) alpha_i alpha_j sum_m w_m
// lambda_i lambda_j / omega_m cos(k_m . r).
inline double discrete_pair(const ParticleSystem& sys, const std::vector<FockMode>& modes, std::size_t i,
                            std::size_t j, std::span<const double> r) {
    double s = 0.0;
    for (const auto& m : modes) {
        const double w = m.omega();
        double kr = 0.0;
        for (std::size_t a = 0; a < r.size(); ++a) kr += m.k[a] * r[a];
        s += m.weight * sys.profiles[i].lambda_hat(w) * sys.profiles[j].lambda_hat(w) / w * std::cos(kr);
    }
    return -0.25 * sys.couplings[i] * sys.couplings[j] * s;
}

namespace detail {

// Particle Hamiltonian sum_j (-Delta_j/2m_j + V_j) on the Fock config's particle space.
inline LatticeOperator particle_operator(const ParticleSystem& sys, const FockConfig& fc) {
    std::vector<std::size_t> all(sys.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    if (fc.particle_grid.dims() == 0) {
        LatticeOperator op;
        op.label = "H_p(frozen)";
        const auto d = static_cast<std::size_t>(sys.d);
        double v = 0.0;
        for (std::size_t j = 0; j < sys.size(); ++j) {
            double r2 = 0.0;
            for (std::size_t a = 0; a < d; ++a) r2 += std::pow(fc.frozen_positions[j * d + a], 2);
            v += evaluate(sys.external[j], std::sqrt(r2));
        }
        op.potential_diag = {v};
        return op;
    }
    BuildOptions bo;
    bo.include_pair = false;
    bo.max_points = fc.max_dim;
    auto op = build_cluster_hamiltonian(sys, all, fc.particle_grid, true, bo);
    op.label = "H_p";
    return op;
}

template <class Fn>
void for_each_node(const FockConfig& fc, Fn&& fn) {
    if (fc.particle_grid.dims() == 0) {
        fn(std::size_t{0}, std::span<const double>(fc.frozen_positions));
        return;
    }
    GridCursor cur(fc.particle_grid);
    for (std::size_t g = 0; g < fc.particle_grid.size(); ++g, cur.next()) fn(g, cur.coords());
}

}  // namespace detail

// H_p + sum_{i != j} alpha_i alpha_j W_ij with W from the discrete modes.
inline LatticeOperator build_effective_discrete(const ParticleSystem& sys, const FockConfig& fc) {
    sys.validate();
    fc.validate(sys);
    if (sys.profiles.empty()) throw unsupported("build_effective_discrete: system has no cutoff profiles");
    LatticeOperator op = detail::particle_operator(sys, fc);
    op.label = "H_eff(discrete)";
    const auto d = static_cast<std::size_t>(sys.d);
    const std::size_t n = sys.size();
    std::vector<double> r(d);
    detail::for_each_node(fc, [&](std::size_t g, std::span<const double> x) {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                for (std::size_t a = 0; a < d; ++a) r[a] = x[i * d + a] - x[j * d + a];
                v += 2.0 * discrete_pair(sys, fc.modes, i, j, r);
            }
        op.potential_diag[g] += v;
    });
    return op;
}

// H(kappa) = H_p + kappa^2 sum_m omega_m n_m + kappa sum_j alpha_j phi_j(x_j) on
// (particle space) x (states with at most n_max bosons). Index = fock * G + node.
class NelsonOperator {
public:
    NelsonOperator(const ParticleSystem& sys, const FockConfig& fc, double kappa) : kappa_(kappa) {
        sys.validate();
        fc.validate(sys);
        if (!(kappa > 0.0)) throw domain_error("build_nelson: kappa must be positive");
        if (sys.profiles.empty()) throw unsupported("build_nelson: system has no cutoff profiles");
        const std::size_t M = fc.modes.size();
        G_ = fc.particle_grid.dims() == 0 ? 1 : fc.particle_grid.size();
        auto F = fock_dimension(M, fc.n_max);
        const std::size_t required =
            F && *F <= std::numeric_limits<std::size_t>::max() / G_ ? *F * G_ : std::numeric_limits<std::size_t>::max();
        if (required > fc.max_dim) throw too_large("build_nelson: truncated Fock space too large", required, fc.max_dim);
        particle_ = detail::particle_operator(sys, fc);
        enumerate(M, fc.n_max);
        omega_.resize(M);
        for (std::size_t m = 0; m < M; ++m) omega_[m] = fc.modes[m].omega();
        field_energy_.resize(states_.size());
        for (std::size_t f = 0; f < states_.size(); ++f) {
            double e = 0.0;
            for (std::size_t m = 0; m < M; ++m) e += states_[f][m] * omega_[m];
            field_energy_[f] = e;
        }
        // sqrt(w_m/2) sum_j alpha_j lambda_j(k_m) {cos, sin}(k_m . x_j)
        coupling_.assign(M * G_, 0.0);
        const auto d = static_cast<std::size_t>(sys.d);
        detail::for_each_node(fc, [&](std::size_t g, std::span<const double> x) {
            for (std::size_t m = 0; m < M; ++m) {
                const auto& mode = fc.modes[m];
                double s = 0.0;
                for (std::size_t j = 0; j < sys.size(); ++j)
                    s += sys.couplings[j] * sys.profiles[j].lambda_hat(omega_[m]) * mode.phase(x.subspan(j * d, d));
                coupling_[m * G_ + g] = std::sqrt(0.5 * mode.weight) * s;
            }
        });
    }

    std::size_t size() const { return states_.size() * G_; }
    std::size_t fock_size() const { return states_.size(); }
    std::size_t grid_size() const { return G_; }
    double kappa() const { return kappa_; }
    const std::vector<std::vector<std::uint8_t>>& occupations() const { return states_; }

    void apply(std::span<const double> x, std::span<double> y) const {
        const std::size_t M = omega_.size();
        const double k2 = kappa_ * kappa_;
        for (std::size_t f = 0; f < states_.size(); ++f) {
            auto xf = x.subspan(f * G_, G_);
            auto yf = y.subspan(f * G_, G_);
            particle_.apply(xf, yf);
            const double e = k2 * field_energy_[f];
            for (std::size_t g = 0; g < G_; ++g) yf[g] += e * xf[g];
        }
        for (std::size_t f = 0; f < states_.size(); ++f)
            for (std::size_t m = 0; m < M; ++m) {
                const std::size_t up = raise_[f * M + m];
                if (up == npos) continue;
                const double s = kappa_ * std::sqrt(static_cast<double>(states_[f][m]) + 1.0);
                const double* c = &coupling_[m * G_];
                const double* xl = &x[f * G_];
                const double* xu = &x[up * G_];
                double* yl = &y[f * G_];
                double* yu = &y[up * G_];
                for (std::size_t g = 0; g < G_; ++g) {
                    const double t = s * c[g];
                    yu[g] += t * xl[g];
                    yl[g] += t * xu[g];
                }
            }
    }

    // particle start guess in the vacuum sector
    std::vector<double> start_guess() const {
        std::vector<double> v(size(), 0.0);
        auto p = particle_.start_guess();
        std::copy(p.begin(), p.end(), v.begin());
        return v;
    }

    // weight of the all-zero occupation sector
    double vacuum_weight(std::span<const double> v) const {
        double s = 0.0, t = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            t += v[i] * v[i];
            if (i < G_) s += v[i] * v[i];
        }
        return s / t;
    }

private:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    void enumerate(std::size_t M, std::size_t n_max) {
        std::vector<std::uint8_t> occ(M, 0);
        if (n_max > 255) throw domain_error("build_nelson: n_max above 255");
        // graded by total number, lexicographic inside a grade
        for (std::size_t total = 0; total <= n_max; ++total) {
            std::vector<std::uint8_t> cur(M, 0);
            auto rec = [&](auto&& self, std::size_t m, std::size_t left) -> void {
                if (m + 1 == M || M == 0) {
                    if (M == 0) {
                        if (left == 0) states_.push_back(cur);
                        return;
                    }
                    cur[m] = static_cast<std::uint8_t>(left);
                    states_.push_back(cur);
                    return;
                }
                for (std::size_t n = left + 1; n-- > 0;) {
                    cur[m] = static_cast<std::uint8_t>(n);
                    self(self, m + 1, left - n);
                }
                cur[m] = 0;
            };
            rec(rec, 0, total);
        }
        std::map<std::vector<std::uint8_t>, std::size_t> index;
        for (std::size_t f = 0; f < states_.size(); ++f) index[states_[f]] = f;
        raise_.assign(states_.size() * M, npos);
        for (std::size_t f = 0; f < states_.size(); ++f)
            for (std::size_t m = 0; m < M; ++m) {
                auto s = states_[f];
                ++s[m];
                auto it = index.find(s);
                if (it != index.end()) raise_[f * M + m] = it->second;
            }
    }

    double kappa_;
    std::size_t G_ = 1;
    LatticeOperator particle_;
    std::vector<std::vector<std::uint8_t>> states_;
    std::vector<std::size_t> raise_;
    std::vector<double> omega_;
    std::vector<double> field_energy_;
    std::vector<double> coupling_;
};

inline NelsonOperator build_nelson(const ParticleSystem& sys, const FockConfig& fc, double kappa) {
    return NelsonOperator(sys, fc, kappa);
}

struct NelsonGround {
    double energy = 0.0;
    double residual = 0.0;
    bool converged = false;
    double vacuum_weight = 0.0;
    std::size_t dimension = 0;
};

inline NelsonGround nelson_ground(const ParticleSystem& sys, const FockConfig& fc, double kappa,
                                  const SolverOptions& s = {}) {
    NelsonOperator h(sys, fc, kappa);
    auto r = ground_state(h, s);
    return {r.energy, r.residual, r.converged, h.vacuum_weight(r.vector), h.size()};
}

// Lowest level of kappa^2 omega b*b + kappa g (b + b*) truncated at n_max quanta.
inline double frozen_mode_energy(double g, double omega, double kappa, std::size_t n_max) {
    std::vector<double> diag(n_max + 1), off(n_max);
    for (std::size_t n = 0; n <= n_max; ++n) diag[n] = kappa * kappa * omega * static_cast<double>(n);
    for (std::size_t n = 0; n < n_max; ++n) off[n] = kappa * g * std::sqrt(static_cast<double>(n) + 1.0);
    return tridiagonal_lowest(diag, off, 1).front().energy;
}

struct KappaRow {
    double kappa = 0.0;
    double E = 0.0;
    double target = 0.0;  // E_eff + G on the same modes and grid
    double deviation = 0.0;
    double residual = 0.0;
    double vacuum_weight = 0.0;
    bool converged = false;
};

struct KappaScan {
    double E_eff = 0.0;
    double G = 0.0;
    double E_eff_residual = 0.0;
    std::size_t dimension = 0;
    std::vector<KappaRow> rows;
    bool converged = true;
};

inline KappaScan kappa_scan(const ParticleSystem& sys, const FockConfig& fc, const std::vector<double>& kappas,
                            const SolverOptions& s = {}, std::size_t threads = 1) {
    for (std::size_t i = 1; i < kappas.size(); ++i)
        if (!(kappas[i] > kappas[i - 1])) throw domain_error("kappa_scan: kappa list must increase");
    KappaScan out;
    auto eff = ground_state(build_effective_discrete(sys, fc), s);
    out.E_eff = eff.energy;
    out.E_eff_residual = eff.residual;
    out.G = discrete_self_energy(sys, fc.modes);
    out.rows.resize(kappas.size());
    parallel_for(kappas.size(), threads, [&](std::size_t i) {
        auto g = nelson_ground(sys, fc, kappas[i], s);
        auto& r = out.rows[i];
        r.kappa = kappas[i];
        r.E = g.energy;
        r.target = out.E_eff + out.G;
        r.deviation = std::abs(r.E - r.target);
        r.residual = g.residual;
        r.vacuum_weight = g.vacuum_weight;
        r.converged = g.converged;
    });
    out.dimension = out.rows.empty() ? 0 : NelsonOperator(sys, fc, kappas.front()).size();
    out.converged = eff.converged;
    for (const auto& r : out.rows) out.converged = out.converged && r.converged;
    return out;
}

struct BoundCheck {
    double kappa = 0.0;
    double ground = 0.0;      // inf spec H(kappa), truncated
    double shift = 0.0;       // sum alpha_j^2 ||lambda_j||^2 / 4
    double E = 0.0;           // ground - shift
    double E_V = 0.0;         // ground of the discrete effective operator
    double correction = 0.0;  // kappa^-2 sum alpha_j^2 ||lambda_j||^2 / (4 m_j)
    double bound = 0.0;       // E_V + correction
    double tolerance = 0.0;   // truncation change from n_max - 1 plus residuals
    double margin = 0.0;      // bound - E
    bool satisfied = false;
    // Same inequality with the field self-energy G removed instead of the shift.
    double dressed_margin = 0.0;
    bool dressed_satisfied = false;
    std::string note;
};

inline BoundCheck variational_bound_check(const ParticleSystem& sys, const FockConfig& fc, double kappa,
                                          const SolverOptions& s = {}) {
    BoundCheck c;
    c.kappa = kappa;
    auto g = nelson_ground(sys, fc, kappa, s);
    c.ground = g.energy;
    for (std::size_t j = 0; j < sys.size(); ++j) {
        const double a2 = sys.couplings[j] * sys.couplings[j];
        const double nrm = discrete_norm_sq(sys.profiles[j], fc.modes);
        c.shift += 0.25 * a2 * nrm;
        c.correction += a2 * nrm / (4.0 * sys.masses[j] * kappa * kappa);
    }
    auto eff = ground_state(build_effective_discrete(sys, fc), s);
    c.E = c.ground - c.shift;
    c.E_V = eff.energy;
    c.bound = c.E_V + c.correction;
    c.tolerance = g.residual + eff.residual;
    if (fc.n_max > 0) {
        FockConfig lower = fc;
        --lower.n_max;
        c.tolerance += std::abs(g.energy - nelson_ground(sys, lower, kappa, s).energy);
    }
    c.margin = c.bound - c.E;
    c.satisfied = c.margin >= -c.tolerance;
    c.dressed_margin = c.bound - (c.ground - discrete_self_energy(sys, fc.modes));
    c.dressed_satisfied = c.dressed_margin >= -c.tolerance;
    if (!c.satisfied) c.note = "violation beyond truncation tolerance: n_max too small";
    return c;
}

}  // namespace ebind
