#pragma once

#include <boost/math/interpolators/makima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "ebind/errors.hpp"

namespace ebind {

enum class Interp { linear, cubic };
enum class DecayTail { zero_beyond_range, power_fit };

// Radial tabulation of a pair kernel W(r) or an external potential V(|x|).
class PairPotential {
public:
    std::vector<double> radii;
    std::vector<double> values;
    double value_at_zero = 0.0;
    Interp interp = Interp::cubic;
    DecayTail decay_tail = DecayTail::zero_beyond_range;

    PairPotential() = default;

    PairPotential(std::vector<double> r, std::vector<double> v, Interp in = Interp::cubic,
                  DecayTail tail = DecayTail::zero_beyond_range)
        : radii(std::move(r)), values(std::move(v)), interp(in), decay_tail(tail) {
        finalize();
    }

    void finalize() {
        if (radii.size() != values.size() || radii.size() < 4)
            throw domain_error("PairPotential: need >= 4 matching radii/values");
        for (std::size_t i = 0; i < radii.size(); ++i) {
            if (!std::isfinite(values[i])) throw domain_error("PairPotential: non-finite sample");
            if (radii[i] < 0.0 || (i > 0 && !(radii[i] > radii[i - 1])))
                throw domain_error("PairPotential: radii must be nonnegative and increasing");
        }
        if (radii.front() != 0.0)
            throw domain_error("PairPotential: tabulation must start at r = 0");
        value_at_zero = values.front();
        if (interp == Interp::cubic) {
            auto r = radii;
            auto v = values;
            spline_ = std::make_shared<const boost::math::interpolators::makima<std::vector<double>>>(
                std::move(r), std::move(v));
        }
        tail_c_ = 0.0;
        tail_p_ = 0.0;
        if (decay_tail == DecayTail::power_fit) {
            const std::size_t n = radii.size();
            double r1 = radii[n - 2], r2 = radii[n - 1], v1 = values[n - 2], v2 = values[n - 1];
            if (v1 * v2 > 0.0 && std::abs(v2) < std::abs(v1)) {
                tail_p_ = std::log(v1 / v2) / std::log(r2 / r1);
                tail_c_ = v2 * std::pow(r2, tail_p_);
            }
        }
    }

    double range() const { return radii.empty() ? 0.0 : radii.back(); }

    double operator()(double r) const {
        r = std::abs(r);
        if (r >= radii.back()) {
            if (r == radii.back()) return values.back();
            if (decay_tail == DecayTail::power_fit && tail_c_ != 0.0)
                return tail_c_ * std::pow(r, -tail_p_);
            return 0.0;
        }
        if (interp == Interp::cubic) return (*spline_)(r);
        auto it = std::upper_bound(radii.begin(), radii.end(), r);
        std::size_t i = static_cast<std::size_t>(it - radii.begin()) - 1;
        double t = (r - radii[i]) / (radii[i + 1] - radii[i]);
        return (1.0 - t) * values[i] + t * values[i + 1];
    }

    PairPotential scaled(double c) const {
        PairPotential p = *this;
        for (auto& v : p.values) v *= c;
        p.finalize();
        return p;
    }

    friend bool operator==(const PairPotential& a, const PairPotential& b) {
        return a.radii == b.radii && a.values == b.values && a.interp == b.interp &&
               a.decay_tail == b.decay_tail;
    }

private:
    std::shared_ptr<const boost::math::interpolators::makima<std::vector<double>>> spline_;
    double tail_c_ = 0.0;
    double tail_p_ = 0.0;
};

// Analytic radial descriptors.
struct ZeroPotential {
    friend bool operator==(const ZeroPotential&, const ZeroPotential&) = default;
};

// -depth for r < width, 0 outside.
struct SquareWell {
    double depth = 0.0;
    double width = 1.0;
    friend bool operator==(const SquareWell&, const SquareWell&) = default;
};

// Sum of a_i exp(-r^2 / (2 w_i^2)); a single negative term is a gaussian well.
struct GaussianSum {
    std::vector<double> amplitudes;
    std::vector<double> widths;
    friend bool operator==(const GaussianSum&, const GaussianSum&) = default;
};

// Potential of a uniformly charged ball of radius `core` with total strength s:
// -s/r outside, -s(3 core^2 - r^2)/(2 core^3) inside.
struct CoulombTail {
    double strength = 1.0;
    double core = 1.0;
    friend bool operator==(const CoulombTail&, const CoulombTail&) = default;
};

using RadialPotential = std::variant<ZeroPotential, SquareWell, GaussianSum, CoulombTail, PairPotential>;

inline RadialPotential gaussian_well(double depth, double width) {
    return GaussianSum{{-depth}, {width}};
}

inline double evaluate(const RadialPotential& v, double r) {
    r = std::abs(r);
    return std::visit(
        [r](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ZeroPotential>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, SquareWell>) {
                return r < p.width ? -p.depth : 0.0;
            } else if constexpr (std::is_same_v<T, GaussianSum>) {
                double s = 0.0;
                for (std::size_t i = 0; i < p.amplitudes.size(); ++i)
                    s += p.amplitudes[i] * std::exp(-r * r / (2.0 * p.widths[i] * p.widths[i]));
                return s;
            } else if constexpr (std::is_same_v<T, CoulombTail>) {
                if (r >= p.core) return -p.strength / r;
                return -p.strength * (3.0 * p.core * p.core - r * r) /
                       (2.0 * p.core * p.core * p.core);
            } else {
                return p(r);
            }
        },
        v);
}

inline bool is_zero(const RadialPotential& v) {
    if (std::holds_alternative<ZeroPotential>(v)) return true;
    if (auto* g = std::get_if<GaussianSum>(&v))
        return std::all_of(g->amplitudes.begin(), g->amplitudes.end(),
                           [](double a) { return a == 0.0; });
    return false;
}

inline RadialPotential scaled(const RadialPotential& v, double c) {
    return std::visit(
        [c](const auto& p) -> RadialPotential {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ZeroPotential>) {
                return p;
            } else if constexpr (std::is_same_v<T, SquareWell>) {
                return SquareWell{p.depth * c, p.width};
            } else if constexpr (std::is_same_v<T, GaussianSum>) {
                GaussianSum g = p;
                for (auto& a : g.amplitudes) a *= c;
                return g;
            } else if constexpr (std::is_same_v<T, CoulombTail>) {
                return CoulombTail{p.strength * c, p.core};
            } else {
                return p.scaled(c);
            }
        },
        v);
}

// Radius beyond which the potential is identically zero (infinity if none).
inline double support_radius(const RadialPotential& v) {
    return std::visit(
        [](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ZeroPotential>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, SquareWell>) {
                return p.width;
            } else if constexpr (std::is_same_v<T, PairPotential>) {
                return p.decay_tail == DecayTail::zero_beyond_range
                           ? p.range()
                           : std::numeric_limits<double>::infinity();
            } else {
                return std::numeric_limits<double>::infinity();
            }
        },
        v);
}

inline const char* kind_name(const RadialPotential& v) {
    switch (v.index()) {
        case 0: return "zero";
        case 1: return "square_well";
        case 2: return "gaussian";
        case 3: return "coulomb_tail";
        default: return "tabulated";
    }
}

// Uniform tabulation of any radial descriptor on [0, r_max].
inline PairPotential tabulate(const RadialPotential& v, double r_max, std::size_t n,
                              Interp in = Interp::cubic,
                              DecayTail tail = DecayTail::zero_beyond_range) {
    if (n < 4 || !(r_max > 0.0)) throw domain_error("tabulate: need n >= 4 and r_max > 0");
    std::vector<double> r(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = r_max * static_cast<double>(i) / static_cast<double>(n - 1);
        y[i] = evaluate(v, r[i]);
    }
    return PairPotential(std::move(r), std::move(y), in, tail);
}

}  // namespace ebind
