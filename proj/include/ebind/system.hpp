#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ebind/errors.hpp"
#include "ebind/profile.hpp"
#include "ebind/radial.hpp"
#include "ebind/veff.hpp"

namespace ebind {

struct ParticleSystem {
    int d = 1;
    std::vector<double> masses;
    std::vector<double> couplings;
    std::vector<CutoffProfile> profiles;  // one per particle
    std::vector<RadialPotential> external;
    // When set, the pair term is alpha_i alpha_j W(|x_i - x_j|) instead of the
    // profile-derived kernel. Profiles are still used for the field norms.
    std::optional<RadialPotential> pair_kernel;

    std::size_t size() const { return masses.size(); }

    void validate() const {
        const std::size_t n = masses.size();
        if (n < 1) throw domain_error("system: need at least one particle");
        if (d < 1) throw domain_error("system: dimension must be positive");
        if (couplings.size() != n || external.size() != n)
            throw domain_error("system: masses, couplings and external potentials must have length N");
        if (!profiles.empty() && profiles.size() != n)
            throw domain_error("system: profiles must have length N");
        if (profiles.empty() && !pair_kernel)
            throw domain_error("system: need profiles or a pair kernel");
        for (double m : masses)
            if (!(m > 0.0)) throw domain_error("system: masses must be positive");
        for (const auto& p : profiles)
            if (p.d != d) throw invalid_profile("system: profile dimension differs from d");
    }

    bool equal_masses() const {
        for (double m : masses)
            if (m != masses.front()) return false;
        return true;
    }

    // Identical masses, couplings, potentials and profiles.
    bool fully_symmetric() const {
        for (std::size_t j = 1; j < size(); ++j) {
            if (masses[j] != masses[0] || couplings[j] != couplings[0] ||
                !(external[j] == external[0]))
                return false;
            if (!profiles.empty() && !(profiles[j] == profiles[0])) return false;
        }
        return true;
    }
};

inline ParticleSystem with_uniform_coupling(ParticleSystem sys, double alpha) {
    for (auto& a : sys.couplings) a = alpha;
    return sys;
}

// Evaluates alpha_i alpha_j W_ij(r). Profile kernels are tabulated on [0, r_max]
// unless `exact` is set, in which case each call runs the quadrature.
class PairField {
public:
    PairField(const ParticleSystem& sys, double r_max = 50.0, bool exact = false)
        : sys_(&sys), exact_(exact), r_max_(r_max) {
        sys.validate();
        if (!sys.pair_kernel && !exact) {
            const std::size_t n = sys.size();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) {
                    std::size_t key = find_cached(i, j);
                    index_[{i, j}] = key;
                }
        }
    }

    double kernel(std::size_t i, std::size_t j, double r) const {
        if (sys_->pair_kernel) return evaluate(*sys_->pair_kernel, r);
        if (exact_) return -0.25 * pair_fourier(sys_->profiles[i], sys_->profiles[j], r);
        if (i > j) std::swap(i, j);
        return tables_[index_.at({i, j})](r);
    }

    double pair(std::size_t i, std::size_t j, double r) const {
        double c = sys_->couplings[i] * sys_->couplings[j];
        return c == 0.0 ? 0.0 : c * kernel(i, j, r);
    }

    // Sum over ordered pairs i != j of alpha_i alpha_j W_ij(|x_i - x_j|); x is N*d.
    double total(std::span<const double> x) const {
        const std::size_t n = sys_->size();
        const int d = sys_->d;
        if (x.size() != n * static_cast<std::size_t>(d))
            throw domain_error("veff_total: position vector has wrong length");
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                double r2 = 0.0;
                for (int a = 0; a < d; ++a) {
                    double dx = x[i * d + a] - x[j * d + a];
                    r2 += dx * dx;
                }
                s += 2.0 * pair(i, j, std::sqrt(r2));
            }
        return s;
    }

    const ParticleSystem& system() const { return *sys_; }

private:
    std::size_t find_cached(std::size_t i, std::size_t j) {
        const auto& pi = sys_->profiles[i];
        const auto& pj = sys_->profiles[j];
        for (std::size_t t = 0; t < keys_.size(); ++t) {
            const auto& [a, b] = keys_[t];
            if ((sys_->profiles[a] == pi && sys_->profiles[b] == pj) ||
                (sys_->profiles[a] == pj && sys_->profiles[b] == pi))
                return t;
        }
        keys_.emplace_back(i, j);
        tables_.push_back(tabulate_pair_kernel(pi, pj, r_max_));
        return tables_.size() - 1;
    }

    const ParticleSystem* sys_;
    bool exact_;
    double r_max_;
    std::vector<std::pair<std::size_t, std::size_t>> keys_;
    std::vector<PairPotential> tables_;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> index_;
};

inline double veff_total(std::span<const double> x, const ParticleSystem& sys) {
    return PairField(sys, 1.0, true).total(x);
}

struct SelfEnergy {
    double G = 0.0;
    std::vector<double> norm_sq;                  // ||lambda_j||^2
    std::vector<double> norm_over_sqrt_omega_sq;  // ||lambda_j / sqrt(omega)||^2
    std::vector<double> norm_over_omega_sq;       // ||lambda_j / omega||^2
};

inline SelfEnergy self_energy_constant(const ParticleSystem& sys) {
    if (sys.profiles.empty())
        throw unsupported("self_energy_constant: system has no cutoff profiles");
    SelfEnergy se;
    for (const auto& p : sys.profiles) {
        const double over_sqrt = profile_moment(p, p, 1);
        se.norm_sq.push_back(profile_moment(p, p, 0));
        se.norm_over_sqrt_omega_sq.push_back(over_sqrt);
        // lambda/omega may fail to be square integrable even when G exists
        double over_omega = std::numeric_limits<double>::infinity();
        try {
            over_omega = profile_moment(p, p, 2);
        } catch (const infrared_divergence&) {
        }
        se.norm_over_omega_sq.push_back(over_omega);
        se.G -= 0.25 * over_sqrt;
    }
    return se;
}

}  // namespace ebind
