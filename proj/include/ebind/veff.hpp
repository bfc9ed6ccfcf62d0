#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "ebind/errors.hpp"
#include "ebind/profile.hpp"
#include "ebind/quadrature.hpp"
#include "ebind/radial.hpp"

namespace ebind {

// Fourier kernel of a radial function in R^d:
// (2 pi)^{d/2} z^{-nu} J_nu(z), nu = (d - 2)/2; bounded, equals S_{d-1} at z = 0.
inline double reduced_kernel(int d, double z) {
    if (z == 0.0) return sphere_area(d);
    switch (d) {
        case 1: return 2.0 * std::cos(z);
        case 3: return 4.0 * std::numbers::pi * std::sin(z) / z;
        default: {
            const double nu = 0.5 * (d - 2);
            return std::pow(2.0 * std::numbers::pi, 0.5 * d) * std::pow(z, -nu) * std::cyl_bessel_j(nu, z);
        }
    }
}

// integral of f(|k|) exp(-i k.x) dk = integral_0^inf f(k) radial_kernel(d, k, |x|) dk.
inline double radial_kernel(int d, double k, double r) {
    return std::pow(k, d - 1) * reduced_kernel(d, k * r);
}

// Integral of sin t / t over [a, b], b >= a >= 0.
inline double sine_integral_range(double a, double b) {
    if (b <= a) return 0.0;
    // sinc is entire, so a fixed rule is exact to rounding on panels of width pi
    static const GaussRule rule = gauss_legendre(24);
    auto panel = [](double x0, double x1) {
        const double c = 0.5 * (x0 + x1), h = 0.5 * (x1 - x0);
        double s = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double t = c + h * rule.nodes[i];
            s += rule.weights[i] * (t == 0.0 ? 1.0 : std::sin(t) / t);
        }
        return h * s;
    };
    double sum = 0.0;
    const double step = std::numbers::pi;
    double x0 = a;
    for (double n = std::floor(a / step) + 1.0; x0 < b; n += 1.0) {
        const double x1 = std::min(b, n * step);
        if (x1 <= x0) continue;
        sum += panel(x0, x1);
        x0 = x1;
    }
    return sum;
}

// Shell profile in d = 3 with unit amplitude (rho-hat form).
inline double veff_pair_closed_form(double r, double alpha_i, double alpha_j, double ir_cut,
                                    double uv_cut) {
    if (!(uv_cut - ir_cut > 0.0) || ir_cut < 0.0)
        throw invalid_profile("veff_pair_closed_form: need uv_cut > ir_cut >= 0");
    if (r < 0.0) throw domain_error("veff_pair_closed_form: negative separation");
    const double c = alpha_i * alpha_j / (8.0 * std::numbers::pi * std::numbers::pi);
    if (c == 0.0) return 0.0;
    if (r == 0.0) return -c * (uv_cut - ir_cut);
    return -c / r * sine_integral_range(ir_cut * r, uv_cut * r);
}

namespace detail {

inline std::vector<double> profile_breaks(const CutoffProfile& p) {
    std::vector<double> out{p.ir_cut};
    if (p.kind == ProfileKind::shell) out.push_back(p.uv_cut);
    if (p.kind == ProfileKind::tabulated)
        for (auto& s : p.table) out.push_back(s.first);
    return out;
}

}  // namespace detail

// Radial Fourier transform of lambda_i lambda_j / omega, i.e. the coupling-free
// pair kernel before the -1/4 prefactor.
inline double pair_fourier(const CutoffProfile& pi, const CutoffProfile& pj, double r) {
    if (pi.d != pj.d) throw invalid_profile("pair_fourier: profiles differ in dimension");
    if (r < 0.0) throw domain_error("pair_fourier: negative separation");
    if (pi.is_zero() || pj.is_zero()) return 0.0;
    if (r == 0.0) return profile_moment(pi, pj, 1);
    auto [la, ha] = pi.support();
    auto [lb, hb] = pj.support();
    const double lo = std::max(la, lb), hi = std::min(ha, hb);
    if (!(hi > lo)) return 0.0;
    const int d = pi.d;
    if (lo == 0.0)
        detail::require_integrable(pi.small_k_exponent() + pj.small_k_exponent() + d - 2,
                                   "effective potential");
    auto f = [&](double k) {
        if (k <= 0.0) return 0.0;
        // powers of k collected first so that k -> 0 stays finite
        const double e = d - 2 - 0.5 * (pi.form == ProfileForm::rho_over_sqrt_omega) -
                         0.5 * (pj.form == ProfileForm::rho_over_sqrt_omega);
        return pi.raw(k) * pj.raw(k) * std::pow(k, e) * reduced_kernel(d, k * r);
    };

    // Panel edges: kernel zeros (McMahon form, exact for d = 1, 3) and profile breaks.
    std::vector<double> cuts{lo, hi};
    const double nu = 0.5 * (d - 2);
    const double shift = 0.5 * nu - 0.25;
    for (double n = std::max(1.0, std::ceil(lo * r / std::numbers::pi - shift));; n += 1.0) {
        double k = (n + shift) * std::numbers::pi / r;
        if (k >= hi) break;
        if (k > lo) cuts.push_back(k);
    }
    for (auto* p : {&pi, &pj})
        for (double b : detail::profile_breaks(*p))
            if (b > lo && b < hi) cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<double> partial;
    partial.reserve(cuts.size());
    double sum = 0.0, last = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        last = i == 0 ? detail::integrate_from_origin(f, cuts[0], cuts[1])
                      : integrate(f, cuts[i], cuts[i + 1]).value;
        sum += last;
        partial.push_back(sum);
    }
    const bool soft = pi.soft_support() || pj.soft_support();
    if (soft && partial.size() > 10 && std::abs(last) > 1e-14 * std::abs(sum)) {
        std::vector<double> tail(partial.end() - 10, partial.end());
        sum = wynn_epsilon(tail);
    }
    return sum;
}

inline double veff_pair_quadrature(const CutoffProfile& pi, const CutoffProfile& pj, double r,
                                   double alpha_i, double alpha_j) {
    if (r < 0.0) throw domain_error("veff_pair_quadrature: negative separation");
    const double c = alpha_i * alpha_j;
    double ft = pair_fourier(pi, pj, r);
    return c == 0.0 ? 0.0 : -0.25 * c * ft;
}

// Coupling-free kernel W_ij(r) = -(1/4) FT[lambda_i lambda_j / omega](r), tabulated on [0, r_max].
inline PairPotential tabulate_pair_kernel(const CutoffProfile& pi, const CutoffProfile& pj,
                                          double r_max, std::size_t n = 0) {
    if (!(r_max > 0.0)) throw domain_error("tabulate_pair_kernel: r_max must be positive");
    if (n == 0) {
        double kmax = std::max(pi.support().second, pj.support().second);
        n = std::max<std::size_t>(1025, static_cast<std::size_t>(std::ceil(r_max * kmax * 8.0)) + 1);
    }
    std::vector<double> r(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = r_max * static_cast<double>(i) / static_cast<double>(n - 1);
        v[i] = -0.25 * pair_fourier(pi, pj, r[i]);
    }
    return PairPotential(std::move(r), std::move(v), Interp::cubic, DecayTail::zero_beyond_range);
}

struct WConditionRow {
    double epsilon = 0.0;
    double inner_min = 0.0;
    double outer_min = 0.0;
    bool pass = false;
};

struct DecayRow {
    double radius = 0.0;
    double sup_abs = 0.0;
};

struct WConditionReport {
    double value_at_zero = 0.0;
    std::vector<WConditionRow> rows;
    std::vector<DecayRow> decay;
    bool all_pass() const {
        return !rows.empty() &&
               std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
    }
};

// Checks W(0) = inf_{r<eps} W < inf_{r>eps} W on the tabulation samples.
inline WConditionReport check_w_conditions(const PairPotential& w, const std::vector<double>& eps,
                                           std::vector<double> decay_radii = {}) {
    if (eps.empty()) throw domain_error("check_w_conditions: empty epsilon list");
    const double emin = *std::min_element(eps.begin(), eps.end());
    const auto below = std::count_if(w.radii.begin(), w.radii.end(),
                                     [emin](double r) { return r < emin; });
    if (below < 3)
        throw resolution_error("check_w_conditions: fewer than 3 samples below smallest epsilon");
    double scale = 0.0;
    for (double v : w.values) scale = std::max(scale, std::abs(v));
    const double tol = 1e-12 * scale;

    WConditionReport rep;
    rep.value_at_zero = w.value_at_zero;
    for (double e : eps) {
        WConditionRow row;
        row.epsilon = e;
        row.inner_min = std::numeric_limits<double>::infinity();
        row.outer_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < w.radii.size(); ++i) {
            if (w.radii[i] < e)
                row.inner_min = std::min(row.inner_min, w.values[i]);
            else if (w.radii[i] > e)
                row.outer_min = std::min(row.outer_min, w.values[i]);
        }
        // W decays to 0 at infinity, so the outer infimum is at most 0
        if (w.decay_tail == DecayTail::zero_beyond_range || w.values.back() == 0.0)
            row.outer_min = std::min(row.outer_min, 0.0);
        row.pass = std::abs(w.value_at_zero - row.inner_min) <= tol &&
                   row.inner_min < row.outer_min - tol;
        rep.rows.push_back(row);
    }
    if (decay_radii.empty()) {
        for (double f : {0.125, 0.25, 0.5, 0.75}) decay_radii.push_back(f * w.range());
    }
    for (double rr : decay_radii) {
        DecayRow d{rr, 0.0};
        for (std::size_t i = 0; i < w.radii.size(); ++i)
            if (w.radii[i] > rr) d.sup_abs = std::max(d.sup_abs, std::abs(w.values[i]));
        rep.decay.push_back(d);
    }
    return rep;
}

}  // namespace ebind
