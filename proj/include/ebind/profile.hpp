#pragma once

#include <math.h>  // pchip.hpp calls isnan unqualified
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "ebind/errors.hpp"
#include "ebind/quadrature.hpp"

namespace ebind {

enum class ProfileKind { shell, gaussian, tabulated };
enum class ProfileForm { lambda_hat, rho_over_sqrt_omega };

inline double omega(double k) { return std::abs(k); }

// Surface area of the unit sphere in R^d.
inline double sphere_area(int d) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

// Radially symmetric UV cutoff. Values are either lambda-hat itself or rho-hat
// with lambda-hat = rho-hat / sqrt(omega), selected by `form`.
class CutoffProfile {
public:
    ProfileKind kind = ProfileKind::shell;
    int d = 3;
    double ir_cut = 0.0;
    double uv_cut = 1.0;
    double amplitude = 1.0;
    std::vector<std::pair<double, double>> table;
    ProfileForm form = ProfileForm::rho_over_sqrt_omega;

    CutoffProfile() = default;

    static CutoffProfile shell(int d, double ir, double uv, double amplitude = 1.0,
                               ProfileForm form = ProfileForm::rho_over_sqrt_omega) {
        CutoffProfile p;
        p.kind = ProfileKind::shell;
        p.d = d;
        p.ir_cut = ir;
        p.uv_cut = uv;
        p.amplitude = amplitude;
        p.form = form;
        p.validate();
        return p;
    }

    // amplitude/sqrt((2pi)^d) * exp(-k^2 / (2 uv^2)) for k > ir.
    static CutoffProfile gaussian(int d, double ir, double width, double amplitude = 1.0,
                                  ProfileForm form = ProfileForm::lambda_hat) {
        CutoffProfile p;
        p.kind = ProfileKind::gaussian;
        p.d = d;
        p.ir_cut = ir;
        p.uv_cut = width;
        p.amplitude = amplitude;
        p.form = form;
        p.validate();
        return p;
    }

    // Samples (k, value); amplitude multiplies the interpolated value.
    static CutoffProfile tabulated(int d, std::vector<std::pair<double, double>> samples,
                                   double amplitude = 1.0,
                                   ProfileForm form = ProfileForm::lambda_hat) {
        CutoffProfile p;
        p.kind = ProfileKind::tabulated;
        p.d = d;
        p.table = std::move(samples);
        if (!p.table.empty()) {
            p.ir_cut = p.table.front().first;
            p.uv_cut = p.table.back().first;
        }
        p.amplitude = amplitude;
        p.form = form;
        p.validate();
        return p;
    }

    void validate() {
        if (d < 1) throw invalid_profile("profile: dimension must be positive");
        if (!(ir_cut >= 0.0)) throw invalid_profile("profile: ir_cut must be >= 0");
        if (!(uv_cut - ir_cut > 0.0))
            throw invalid_profile("profile: uv_cut must exceed ir_cut");
        if (!std::isfinite(amplitude)) throw invalid_profile("profile: amplitude not finite");
        if (kind == ProfileKind::tabulated) {
            if (table.size() < 4)
                throw invalid_profile("profile: tabulated kind needs at least 4 samples");
            std::vector<double> ks, vs;
            for (std::size_t i = 0; i < table.size(); ++i) {
                if (i > 0 && !(table[i].first > table[i - 1].first))
                    throw invalid_profile("profile: table wavenumbers must increase");
                if (table[i].first < 0.0)
                    throw invalid_profile("profile: negative wavenumber in table");
                ks.push_back(table[i].first);
                vs.push_back(table[i].second);
            }
            interp_ = std::make_shared<const boost::math::interpolators::pchip<std::vector<double>>>(
                std::move(ks), std::move(vs));
        }
    }

    double norm_factor() const { return amplitude / std::pow(2.0 * std::numbers::pi, 0.5 * d); }

    // Stored value (lambda-hat or rho-hat) at |k| = k.
    double raw(double k) const {
        k = std::abs(k);
        switch (kind) {
            case ProfileKind::shell:
                return (k > ir_cut && k < uv_cut) ? norm_factor() : 0.0;
            case ProfileKind::gaussian:
                return k > ir_cut ? norm_factor() * std::exp(-k * k / (2.0 * uv_cut * uv_cut))
                                  : 0.0;
            case ProfileKind::tabulated:
                if (k < table.front().first || k > table.back().first) return 0.0;
                return amplitude * (*interp_)(k);
        }
        return 0.0;
    }

    double lambda_hat(double k) const {
        double v = raw(k);
        if (form == ProfileForm::rho_over_sqrt_omega) {
            if (v == 0.0) return 0.0;
            return v / std::sqrt(omega(k));
        }
        return v;
    }

    // Radial interval outside which lambda-hat vanishes (numerically, for gaussian).
    std::pair<double, double> support() const {
        switch (kind) {
            case ProfileKind::shell:
                return {ir_cut, uv_cut};
            case ProfileKind::gaussian:
                return {ir_cut, std::max(ir_cut, 0.0) + 9.0 * uv_cut};
            case ProfileKind::tabulated:
                return {table.front().first, table.back().first};
        }
        return {0.0, 0.0};
    }

    bool soft_support() const { return kind == ProfileKind::gaussian; }

    bool is_zero() const {
        if (amplitude == 0.0) return true;
        if (kind == ProfileKind::tabulated)
            return std::all_of(table.begin(), table.end(),
                               [](const auto& s) { return s.second == 0.0; });
        return false;
    }

    // Power e with lambda-hat ~ k^e as k -> 0 (only meaningful if support reaches 0).
    double small_k_exponent() const {
        double e = form == ProfileForm::rho_over_sqrt_omega ? -0.5 : 0.0;
        if (kind == ProfileKind::tabulated && table.front().second == 0.0) e += 1.0;
        return e;
    }

    friend bool operator==(const CutoffProfile& a, const CutoffProfile& b) {
        return a.kind == b.kind && a.d == b.d && a.ir_cut == b.ir_cut &&
               a.uv_cut == b.uv_cut && a.amplitude == b.amplitude && a.table == b.table &&
               a.form == b.form;
    }

private:
    std::shared_ptr<const boost::math::interpolators::pchip<std::vector<double>>> interp_;
};

namespace detail {

// Integrate f over [lo, hi] where f may have an integrable power singularity at 0.
template <class F>
double integrate_from_origin(F&& f, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    if (lo > 0.0) return integrate(f, lo, hi).value;
    boost::math::quadrature::tanh_sinh<double> ts;
    double split = std::min(hi, lo + 0.25 * (hi - lo));
    double head = ts.integrate(f, 0.0, split, 1e-13);
    return head + integrate(f, split, hi).value;
}

inline void require_integrable(double exponent, const std::string& what) {
    if (!(exponent > -1.0))
        throw infrared_divergence(what + ": integrand not integrable at k = 0");
}

}  // namespace detail

// S_{d-1} * integral of lambda_i lambda_j k^{d-1-q} dk over the common support.
inline double profile_moment(const CutoffProfile& a, const CutoffProfile& b, int q) {
    if (a.d != b.d) throw invalid_profile("profiles must share the spatial dimension");
    if (a.is_zero() || b.is_zero()) return 0.0;
    auto [lo_a, hi_a] = a.support();
    auto [lo_b, hi_b] = b.support();
    const double lo = std::max(lo_a, lo_b), hi = std::min(hi_a, hi_b);
    if (!(hi > lo)) return 0.0;
    const int d = a.d;
    if (lo == 0.0)
        detail::require_integrable(a.small_k_exponent() + b.small_k_exponent() + d - 1 - q,
                                   "profile moment");
    auto f = [&](double k) {
        if (k <= 0.0) return 0.0;
        const double e = d - 1 - q - 0.5 * (a.form == ProfileForm::rho_over_sqrt_omega) -
                         0.5 * (b.form == ProfileForm::rho_over_sqrt_omega);
        return a.raw(k) * b.raw(k) * std::pow(k, e);
    };
    // shell and table breakpoints are panel edges
    std::vector<double> cuts{lo, hi};
    for (const auto* p : {&a, &b}) {
        if (p->kind == ProfileKind::tabulated)
            for (auto& s : p->table) cuts.push_back(s.first);
        cuts.push_back(p->ir_cut);
        if (p->kind == ProfileKind::shell) cuts.push_back(p->uv_cut);
    }
    std::sort(cuts.begin(), cuts.end());
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double x0 = std::max(cuts[i], lo), x1 = std::min(cuts[i + 1], hi);
        if (x1 > x0) sum += detail::integrate_from_origin(f, x0, x1);
    }
    return sphere_area(d) * sum;
}

struct ProfileNorms {
    double l2 = 0.0;              // ||lambda||^2
    double over_sqrt_omega = 0.0; // ||lambda / sqrt(omega)||^2
    double over_omega = 0.0;      // ||lambda / omega||^2
};

inline ProfileNorms profile_norms(const CutoffProfile& p) {
    return {profile_moment(p, p, 0), profile_moment(p, p, 1), profile_moment(p, p, 2)};
}

}  // namespace ebind
