#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ebind/errors.hpp"
#include "ebind/quadrature.hpp"
#include "ebind/radial.hpp"

namespace ebind {

namespace detail {

inline double bump(double t) {
    return std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0;
}

}  // namespace detail

// Smooth, compactly supported approximation of V: samples are zeroed beyond
// R - sigma and wherever |V| >= cap, then the even extension in r is convolved
// with a C-infinity bump of half-width sigma. The result vanishes for r >= R.
inline PairPotential mollify_potential(const RadialPotential& v, double R, double cap,
                                       double sigma, std::size_t samples = 0) {
    if (!(sigma > 0.0)) throw domain_error("mollify_potential: sigma must be positive");
    if (!(R > 0.0)) throw domain_error("mollify_potential: R must be positive");
    if (!(cap > 0.0)) throw domain_error("mollify_potential: cap must be positive");
    const double cut = R - sigma;
    auto f = [&](double r) {
        r = std::abs(r);
        if (r >= cut) return 0.0;
        double y = evaluate(v, r);
        return std::abs(y) < cap ? y : 0.0;
    };

    // composite Gauss-Legendre over [-sigma, sigma]
    constexpr std::size_t panels = 16;
    const GaussRule g = gauss_legendre(8);
    std::vector<double> s_nodes, s_weights;
    double norm = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        double a = -sigma + 2.0 * sigma * static_cast<double>(p) / panels;
        double b = a + 2.0 * sigma / panels;
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            double s = 0.5 * (a + b) + 0.5 * (b - a) * g.nodes[i];
            double w = 0.5 * (b - a) * g.weights[i] * detail::bump(s / sigma);
            s_nodes.push_back(s);
            s_weights.push_back(w);
            norm += w;
        }
    }
    for (auto& w : s_weights) w /= norm;

    if (samples == 0)
        samples = std::max<std::size_t>(2001, static_cast<std::size_t>(std::ceil(16.0 * R / sigma)) + 1);
    std::vector<double> r(samples), y(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        r[i] = R * static_cast<double>(i) / static_cast<double>(samples - 1);
        double acc = 0.0;
        for (std::size_t q = 0; q < s_nodes.size(); ++q) acc += s_weights[q] * f(r[i] - s_nodes[q]);
        y[i] = acc;
    }
    y.back() = 0.0;
    return PairPotential(std::move(r), std::move(y), Interp::cubic, DecayTail::zero_beyond_range);
}

// sup over r >= R of |V(r) - V_eps(r)|, sampled geometrically out to r_far.
inline double mollification_tail_bound(const RadialPotential& v, const PairPotential& v_eps,
                                       double R, double r_far, std::size_t samples = 4000) {
    if (!(r_far > R)) throw domain_error("mollification_tail_bound: need r_far > R");
    double sup = 0.0;
    const double ratio = std::log(r_far / R);
    for (std::size_t i = 0; i < samples; ++i) {
        double r = R * std::exp(ratio * static_cast<double>(i) / static_cast<double>(samples - 1));
        sup = std::max(sup, std::abs(evaluate(v, r) - v_eps(r)));
    }
    return sup;
}

}  // namespace ebind
