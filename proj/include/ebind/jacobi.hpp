#pragma once

#include <cmath>
#include <cstddef>
#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ebind/errors.hpp"

namespace ebind {

// Small dense row-major matrix.
struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    friend Matrix operator*(const Matrix& x, const Matrix& y) {
        Matrix z(x.rows, y.cols);
        for (std::size_t i = 0; i < x.rows; ++i)
            for (std::size_t k = 0; k < x.cols; ++k)
                for (std::size_t j = 0; j < y.cols; ++j) z(i, j) += x(i, k) * y(k, j);
        return z;
    }
};

struct JacobiTransform {
    std::size_t N = 0;
    Matrix T;
    Matrix T_inv;
    std::vector<double> reduced_masses;  // for unit mass; multiply by m
};

// x_c = mean of x_j, y_j = x_{j+1} - (1/j) sum_{i<=j} x_i.
inline JacobiTransform jacobi_matrix(std::size_t N) {
    if (N < 2) throw domain_error("jacobi_matrix: N must be at least 2");
    JacobiTransform J;
    J.N = N;
    J.T = Matrix(N, N);
    J.T_inv = Matrix(N, N);
    const double dn = static_cast<double>(N);
    for (std::size_t c = 0; c < N; ++c) J.T(0, c) = 1.0 / dn;
    for (std::size_t j = 1; j < N; ++j) {
        const double dj = static_cast<double>(j);
        for (std::size_t i = 0; i < j; ++i) J.T(j, i) = -1.0 / dj;
        J.T(j, j) = 1.0;
    }
    // closed-form inverse: column 0 is all ones; column c has -1/(c+1) above
    // the diagonal entry c/(c+1) and zeros below
    for (std::size_t r = 0; r < N; ++r) {
        J.T_inv(r, 0) = 1.0;
        for (std::size_t c = 1; c < N; ++c) {
            const double dc = static_cast<double>(c);
            if (r < c)
                J.T_inv(r, c) = -1.0 / (dc + 1.0);
            else if (r == c)
                J.T_inv(r, c) = dc / (dc + 1.0);
        }
    }
    for (std::size_t j = 1; j < N; ++j) {
        const double dj = static_cast<double>(j);
        J.reduced_masses.push_back(dj / (dj + 1.0));
    }
    return J;
}

// Blockwise x = T_inv Y; Y and x hold N d-vectors, entry-major.
inline std::vector<double> positions_from_jacobi(std::span<const double> Y, const JacobiTransform& J,
                                                 std::size_t d) {
    if (Y.size() != J.N * d) throw domain_error("positions_from_jacobi: shape mismatch");
    std::vector<double> x(J.N * d, 0.0);
    for (std::size_t j = 0; j < J.N; ++j)
        for (std::size_t c = 0; c < J.N; ++c) {
            const double t = J.T_inv(j, c);
            if (t == 0.0) continue;
            for (std::size_t a = 0; a < d; ++a) x[j * d + a] += t * Y[c * d + a];
        }
    return x;
}

inline std::vector<double> jacobi_from_positions(std::span<const double> x, const JacobiTransform& J,
                                                 std::size_t d) {
    if (x.size() != J.N * d) throw domain_error("jacobi_from_positions: shape mismatch");
    std::vector<double> Y(J.N * d, 0.0);
    for (std::size_t c = 0; c < J.N; ++c)
        for (std::size_t j = 0; j < J.N; ++j) {
            const double t = J.T(c, j);
            if (t == 0.0) continue;
            for (std::size_t a = 0; a < d; ++a) Y[c * d + a] += t * x[j * d + a];
        }
    return Y;
}

// Max residual of sum |p_j|^2/2m = |P|^2/(2Nm) + sum |q_j|^2/(2 mu_j) over random
// particle momenta p, with (P, q) = T_inv^T p.
inline double kinetic_split_check(std::size_t N, double m, std::size_t trials,
                                  std::uint64_t seed = 1, std::size_t d = 3) {
    const JacobiTransform J = jacobi_matrix(N);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        std::vector<double> p(N * d);
        for (auto& v : p) v = gauss(rng);
        double lhs = 0.0;
        for (double v : p) lhs += v * v / (2.0 * m);
        double rhs = 0.0;
        for (std::size_t c = 0; c < N; ++c) {
            const double mass = c == 0 ? static_cast<double>(N) * m : J.reduced_masses[c - 1] * m;
            for (std::size_t a = 0; a < d; ++a) {
                double q = 0.0;
                for (std::size_t j = 0; j < N; ++j) q += J.T_inv(j, c) * p[j * d + a];
                rhs += q * q / (2.0 * mass);
            }
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

}  // namespace ebind
