#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "ebind/errors.hpp"
#include "ebind/jacobi.hpp"

namespace ebind {

template <class Op>
concept SymmetricOperator = requires(const Op& a, std::span<const double> x, std::span<double> y) {
    { a.size() } -> std::convertible_to<std::size_t>;
    a.apply(x, y);
};

struct SolverOptions {
    double tol = 1e-8;                // residual norm ||Av - Ev||
    std::size_t max_matvecs = 60000;
    std::size_t basis = 32;           // Krylov basis size before a restart
    std::uint64_t seed = 0x5eed;
    double perturbation = 1e-3;       // relative size of the random start component
    std::vector<double> start;        // optional start vector
};

struct SpectralResult {
    double energy = 0.0;
    std::vector<double> vector;
    double residual = 0.0;
    std::size_t iterations = 0;  // matrix-vector products
    bool converged = false;
};

struct DenseEigen {
    std::vector<double> values;  // ascending
    Matrix vectors;              // column i belongs to values[i]
};

// Cyclic Jacobi rotations for a small symmetric matrix.
inline DenseEigen dense_symmetric_eigen(Matrix a) {
    const std::size_t n = a.rows;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j) off += a(i, j) * a(i, j);
                scale += a(i, j) * a(i, j);
            }
        if (off <= 1e-30 * scale || off == 0.0) break;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
    DenseEigen out;
    out.vectors = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out.values.push_back(a(order[i], order[i]));
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, i) = v(k, order[i]);
    }
    return out;
}

namespace detail {

inline double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline void fix_sign(std::vector<double>& v) {
    std::size_t imax = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
    if (!v.empty() && v[imax] < 0.0)
        for (auto& x : v) x = -x;
}

template <class Op>
std::vector<double> initial_vector(const Op& a, const SolverOptions& opt) {
    const std::size_t n = a.size();
    std::vector<double> v;
    if (!opt.start.empty()) {
        if (opt.start.size() != n) throw domain_error("start vector has wrong length");
        v = opt.start;
    } else if constexpr (requires { a.start_guess(); }) {
        v = a.start_guess();
    } else {
        v.assign(n, 1.0);
    }
    double nv = norm(v);
    if (nv == 0.0) {
        v.assign(n, 1.0);
        nv = norm(v);
    }
    for (auto& x : v) x /= nv;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double amp = opt.perturbation / std::sqrt(static_cast<double>(n));
    for (auto& x : v) x += amp * uni(rng);
    nv = norm(v);
    for (auto& x : v) x /= nv;
    return v;
}

template <class Op>
std::vector<SpectralResult> dense_lowest(const Op& a, std::size_t k) {
    const std::size_t n = a.size();
    Matrix m(n, n);
    std::vector<double> e(n, 0.0), col(n);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        a.apply(e, col);
        e[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i) m(i, j) = col[i];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) m(i, j) = m(j, i) = 0.5 * (m(i, j) + m(j, i));
    auto eig = dense_symmetric_eigen(m);
    std::vector<SpectralResult> out;
    for (std::size_t i = 0; i < std::min(k, n); ++i) {
        SpectralResult r;
        r.energy = eig.values[i];
        r.vector.resize(n);
        for (std::size_t t = 0; t < n; ++t) r.vector[t] = eig.vectors(t, i);
        fix_sign(r.vector);
        a.apply(r.vector, col);
        double res = 0.0;
        for (std::size_t t = 0; t < n; ++t) res += std::pow(col[t] - r.energy * r.vector[t], 2);
        r.residual = std::sqrt(res);
        r.iterations = n;
        r.converged = true;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace detail

inline std::vector<SpectralResult> tridiagonal_lowest(const std::vector<double>& diag,
                                              const std::vector<double>& off, std::size_t k);

namespace detail {

// Lowest eigenpair by the three-term Lanczos recurrence without stored basis.
// The first pass builds the tridiagonal matrix until the lowest Ritz pair has
// converged, the second replays the recurrence to assemble the Ritz vector.
// Loss of orthogonality only produces spurious copies, which do not affect
// the lowest Ritz value. Cycles restart from the last Ritz vector.
template <class Op>
SpectralResult lanczos_ground(const Op& a, const SolverOptions& opt, double* upper = nullptr) {
    const std::size_t n = a.size();
    std::vector<double> start = initial_vector(a, opt);
    std::vector<double> v(n), v_prev(n), w(n), x(n);
    std::size_t matvecs = 0;
    SpectralResult best;
    best.residual = std::numeric_limits<double>::infinity();
    while (matvecs < opt.max_matvecs) {
        std::vector<double> alpha, beta;
        std::vector<double> s;
        // pass one
        v = start;
        std::fill(v_prev.begin(), v_prev.end(), 0.0);
        double b_prev = 0.0;
        const std::size_t budget = opt.max_matvecs - matvecs;
        const std::size_t check_every = 10;
        bool done = false;
        for (std::size_t j = 0; j < budget && j < n; ++j) {
            a.apply(v, w);
            ++matvecs;
            const double aj = dot(v, w);
            for (std::size_t t = 0; t < n; ++t) w[t] -= aj * v[t] + b_prev * v_prev[t];
            alpha.push_back(aj);
            const double bj = norm(w);
            const bool last = j + 1 == budget || j + 1 == n || bj == 0.0;
            if ((j + 1) % check_every == 0 || last) {
                auto r = tridiagonal_lowest(alpha, beta, 1).front();
                if (std::abs(bj * r.vector.back()) < 0.25 * opt.tol || last) {
                    s = std::move(r.vector);
                    done = true;
                }
            }
            if (done) break;
            beta.push_back(bj);
            std::swap(v_prev, v);
            for (std::size_t t = 0; t < n; ++t) v[t] = w[t] / bj;
            b_prev = bj;
        }
        if (upper)  // Gershgorin bound on the Ritz values
            for (std::size_t j = 0; j < alpha.size(); ++j) {
                double g = alpha[j] + (j > 0 ? std::abs(beta[j - 1]) : 0.0) +
                           (j < beta.size() ? std::abs(beta[j]) : 0.0);
                *upper = j == 0 && matvecs == alpha.size() ? g : std::max(*upper, g);
            }
        // pass two, replaying the same arithmetic
        std::fill(x.begin(), x.end(), 0.0);
        v = start;
        std::fill(v_prev.begin(), v_prev.end(), 0.0);
        b_prev = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            for (std::size_t t = 0; t < n; ++t) x[t] += s[j] * v[t];
            if (j + 1 == s.size()) break;
            a.apply(v, w);
            ++matvecs;
            for (std::size_t t = 0; t < n; ++t) w[t] -= alpha[j] * v[t] + b_prev * v_prev[t];
            std::swap(v_prev, v);
            for (std::size_t t = 0; t < n; ++t) v[t] = w[t] / beta[j];
            b_prev = beta[j];
        }
        const double nx = norm(x);
        for (auto& t : x) t /= nx;
        a.apply(x, w);
        ++matvecs;
        SpectralResult r;
        r.energy = dot(x, w);
        double rr = 0.0;
        for (std::size_t t = 0; t < n; ++t) rr += std::pow(w[t] - r.energy * x[t], 2);
        r.residual = std::sqrt(rr);
        r.vector = x;
        r.iterations = matvecs;
        r.converged = r.residual < opt.tol;
        if (r.residual < best.residual) best = r;
        if (r.converged || !done) break;
        start = x;
    }
    best.iterations = matvecs;
    fix_sign(best.vector);
    return best;
}

// Operator with the span of `found` moved up to the level `lift`, so that its
// lowest eigenpair is the next one of `a`.
template <class Op>
struct Deflated {
    const Op& a;
    const std::vector<std::vector<double>>& found;
    double lift;

    std::size_t size() const { return a.size(); }
    void apply(std::span<const double> x, std::span<double> y) const {
        std::vector<double> xp(x.begin(), x.end());
        for (const auto& q : found) {
            const double c = dot(q, xp);
            for (std::size_t t = 0; t < xp.size(); ++t) xp[t] -= c * q[t];
        }
        a.apply(xp, y);
        for (const auto& q : found) {
            const double c = dot(q, y);
            for (std::size_t t = 0; t < xp.size(); ++t) y[t] -= c * q[t];
        }
        for (std::size_t t = 0; t < xp.size(); ++t) y[t] += lift * (x[t] - xp[t]);
    }
};

}  // namespace detail

// k lowest eigenpairs, ascending. Levels beyond the first are ground states of
// the operator deflated by the levels already found. Tridiagonal operators
// (exposing diag/off) are solved directly.
template <SymmetricOperator Op>
std::vector<SpectralResult> lowest_eigenpairs(const Op& a, std::size_t k, const SolverOptions& opt = {}) {
    const std::size_t n = a.size();
    if (k == 0) throw domain_error("lowest_eigenpairs: k must be positive");
    if constexpr (requires { a.diag; a.off; }) {
        return tridiagonal_lowest(a.diag, a.off, k);
    } else {
        if (n <= 64) return detail::dense_lowest(a, k);
        k = std::min(k, n);
        double upper = 0.0;
        std::vector<SpectralResult> out{detail::lanczos_ground(a, opt, &upper)};
        std::vector<std::vector<double>> found{out.front().vector};
        // above every level sought: the largest Ritz value bounds lambda_k from above
        const double lift = upper + std::abs(upper) + 1.0;
        for (std::size_t i = 1; i < k; ++i) {
            detail::Deflated<Op> d{a, found, lift};
            SolverOptions o = opt;
            o.seed = opt.seed + i;
            if constexpr (requires { a.start_guess(); })
                if (o.start.empty()) o.start = a.start_guess();
            if (o.start.empty()) o.start.assign(n, 1.0);
            for (const auto& q : found) {
                const double c = detail::dot(q, o.start);
                for (std::size_t t = 0; t < n; ++t) o.start[t] -= c * q[t];
            }
            auto r = detail::lanczos_ground(d, o);
            // true residual against the undeflated operator
            std::vector<double> w(n);
            a.apply(r.vector, w);
            r.energy = detail::dot(r.vector, w);
            double rr = 0.0;
            for (std::size_t t = 0; t < n; ++t) rr += std::pow(w[t] - r.energy * r.vector[t], 2);
            r.residual = std::sqrt(rr);
            r.converged = r.converged && r.residual < opt.tol;
            found.push_back(r.vector);
            out.push_back(std::move(r));
        }
        std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.energy < y.energy; });
        return out;
    }
}

template <SymmetricOperator Op>
SpectralResult ground_state(const Op& a, const SolverOptions& opt = {}) {
    return lowest_eigenpairs(a, 1, opt).front();
}

template <SymmetricOperator Op>
std::vector<double> low_spectrum(const Op& a, std::size_t k, const SolverOptions& opt = {}) {
    std::vector<double> e;
    for (const auto& r : lowest_eigenpairs(a, k, opt)) e.push_back(r.energy);
    return e;
}

// Rayleigh quotient (u, A u) / (u, u).
template <SymmetricOperator Op>
double rayleigh_quotient(const Op& a, std::span<const double> u) {
    std::vector<double> w(u.size());
    a.apply(u, w);
    return detail::dot(u, w) / detail::dot(u, u);
}

// Lowest eigenpairs of a symmetric tridiagonal matrix: Sturm-count bisection for
// the values, inverse iteration for the vectors.
inline std::vector<SpectralResult> tridiagonal_lowest(const std::vector<double>& diag,
                                                      const std::vector<double>& off, std::size_t k) {
    const std::size_t n = diag.size();
    if (n == 0 || off.size() + 1 != n) throw domain_error("tridiagonal_lowest: bad shape");
    k = std::min(k, n);
    double lo = diag[0], hi = diag[0];
    for (std::size_t i = 0; i < n; ++i) {
        double r = (i > 0 ? std::abs(off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(off[i]) : 0.0);
        lo = std::min(lo, diag[i] - r);
        hi = std::max(hi, diag[i] + r);
    }
    auto count_below = [&](double x) {
        std::size_t c = 0;
        double q = diag[0] - x;
        if (q < 0) ++c;
        for (std::size_t i = 1; i < n; ++i) {
            if (q == 0.0) q = 1e-300;
            q = diag[i] - x - off[i - 1] * off[i - 1] / q;
            if (q < 0) ++c;
        }
        return c;
    };
    std::vector<SpectralResult> out;
    const double span = std::max(hi - lo, 1e-300);
    for (std::size_t j = 0; j < k; ++j) {
        double a = lo, b = hi;
        while (b - a > 4e-16 * std::max(std::abs(a), std::abs(b)) + 1e-300 * span) {
            double mid = 0.5 * (a + b);
            if (mid <= a || mid >= b) break;
            if (count_below(mid) > j)
                b = mid;
            else
                a = mid;
        }
        const double lambda = 0.5 * (a + b);
        // inverse iteration with a slightly shifted, nonsingular factorization
        const double shift = lambda - 1e-10 * (std::abs(lambda) + 1.0);
        std::vector<double> v(n, 1.0), cp(n), dp(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * std::sin(1.0 + static_cast<double>(i));
        for (int it = 0; it < 6; ++it) {
            // Thomas algorithm for (T - shift) x = v
            double denom = diag[0] - shift;
            cp[0] = n > 1 ? off[0] / denom : 0.0;
            dp[0] = v[0] / denom;
            for (std::size_t i = 1; i < n; ++i) {
                denom = diag[i] - shift - off[i - 1] * cp[i - 1];
                if (denom == 0.0) denom = 1e-300;
                cp[i] = i + 1 < n ? off[i] / denom : 0.0;
                dp[i] = (v[i] - off[i - 1] * dp[i - 1]) / denom;
            }
            v[n - 1] = dp[n - 1];
            for (std::size_t i = n - 1; i-- > 0;) v[i] = dp[i] - cp[i] * v[i + 1];
            // project out lower eigenvectors already found
            for (const auto& prev : out) {
                double c = detail::dot(prev.vector, v);
                for (std::size_t i = 0; i < n; ++i) v[i] -= c * prev.vector[i];
            }
            double nv = detail::norm(v);
            for (auto& x : v) x /= nv;
        }
        detail::fix_sign(v);
        SpectralResult r;
        r.vector = v;
        double e = 0.0, res = 0.0;
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = diag[i] * v[i] + (i > 0 ? off[i - 1] * v[i - 1] : 0.0) + (i + 1 < n ? off[i] * v[i + 1] : 0.0);
            e += v[i] * w[i];
        }
        for (std::size_t i = 0; i < n; ++i) res += std::pow(w[i] - e * v[i], 2);
        r.energy = e;
        r.residual = std::sqrt(res);
        r.iterations = 6;
        r.converged = true;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace ebind
