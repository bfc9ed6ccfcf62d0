#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "ebind/errors.hpp"

namespace ebind {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
};

// Adaptive Gauss-Kronrod (15/31) on a finite interval.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, double rel_tol = 1e-13,
                           unsigned max_depth = 8) {
    if (a == b) return {};
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, a, b, max_depth, rel_tol, &err);
    return {v, err};
}

struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// n-point Gauss-Legendre rule mapped to [a, b].
inline GaussRule gauss_legendre(std::size_t n, double a = -1.0, double b = 1.0) {
    if (n == 0) throw domain_error("gauss_legendre: n must be positive");
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const auto un = static_cast<unsigned>(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p = std::legendre(un, x);
            double pm = n > 1 ? std::legendre(un - 1, x) : 1.0;
            dp = static_cast<double>(n) * (x * p - pm) / (x * x - 1.0);
            double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        {
            double p = std::legendre(un, x);
            double pm = n > 1 ? std::legendre(un - 1, x) : 1.0;
            dp = static_cast<double>(n) * (x * p - pm) / (x * x - 1.0);
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    const double half = 0.5 * (b - a), mid = 0.5 * (b + a);
    for (std::size_t i = 0; i < n; ++i) {
        rule.nodes[i] = mid + half * rule.nodes[i];
        rule.weights[i] *= half;
    }
    return rule;
}

// Wynn epsilon extrapolation of a sequence of partial sums.
inline double wynn_epsilon(const std::vector<double>& s) {
    const std::size_t n = s.size();
    if (n == 0) return 0.0;
    if (n < 3) return s.back();
    std::vector<double> prev(n + 1, 0.0), cur(s.begin(), s.end());
    double best = s.back();
    double best_change = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < n; ++k) {
        std::vector<double> next(n - k);
        for (std::size_t i = 0; i + k < n; ++i) {
            double diff = cur[i + 1] - cur[i];
            double base = k == 1 ? 0.0 : prev[i + 1];
            if (diff == 0.0) {
                next.resize(i);
                break;
            }
            next[i] = base + 1.0 / diff;
        }
        if (k % 2 == 0 && !next.empty()) {
            // even columns hold the extrapolants
            double last = next.back();
            if (next.size() >= 2) {
                double ch = std::abs(last - next[next.size() - 2]);
                if (ch < best_change) {
                    best_change = ch;
                    best = last;
                }
            }
        }
        if (next.empty()) break;
        prev = cur;
        cur = std::move(next);
    }
    return best;
}

}  // namespace ebind
