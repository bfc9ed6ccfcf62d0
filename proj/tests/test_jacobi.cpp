#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ebind/jacobi.hpp"

using namespace ebind;

TEST(Jacobi, TwoBodyMatrix) {
    auto J = jacobi_matrix(2);
    EXPECT_DOUBLE_EQ(J.T(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(J.T(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(J.T(1, 0), -1.0);
    EXPECT_DOUBLE_EQ(J.T(1, 1), 1.0);
    EXPECT_DOUBLE_EQ(J.reduced_masses[0], 0.5);
    EXPECT_THROW(jacobi_matrix(1), domain_error);
}

TEST(Jacobi, ThreeBodyRowsAndInverseDisplay) {
    auto J = jacobi_matrix(3);
    EXPECT_DOUBLE_EQ(J.T(2, 0), -0.5);
    EXPECT_DOUBLE_EQ(J.T(2, 1), -0.5);
    EXPECT_DOUBLE_EQ(J.T(2, 2), 1.0);
    // rows of the printed inverse
    const double inv[3][3] = {{1, -0.5, -1.0 / 3}, {1, 0.5, -1.0 / 3}, {1, 0, 2.0 / 3}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(J.T_inv(i, j), inv[i][j]);
}

TEST(Jacobi, InverseExactUpToTen) {
    for (std::size_t n = 2; n <= 10; ++n) {
        auto J = jacobi_matrix(n);
        Matrix P = J.T * J.T_inv;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(P(i, j), i == j ? 1.0 : 0.0, 1e-12);
        for (std::size_t j = 0; j < n; ++j) EXPECT_DOUBLE_EQ(J.T(0, j), 1.0 / static_cast<double>(n));
        for (std::size_t j = 1; j < J.reduced_masses.size(); ++j) {
            EXPECT_GT(J.reduced_masses[j], J.reduced_masses[j - 1]);
            EXPECT_LT(J.reduced_masses[j], 1.0);
        }
    }
}

TEST(Jacobi, PositionIdentitiesAndRoundTrip) {
    auto J = jacobi_matrix(3);
    const std::size_t d = 2;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3, 3);
    std::vector<double> Y(3 * d);
    for (auto& v : Y) v = u(rng);
    auto x = positions_from_jacobi(Y, J, d);
    for (std::size_t a = 0; a < d; ++a) {
        EXPECT_NEAR(x[1 * d + a] - x[0 * d + a], Y[1 * d + a], 1e-14);
        EXPECT_NEAR(x[2 * d + a] - x[1 * d + a], Y[2 * d + a] - 0.5 * Y[1 * d + a], 1e-14);
    }
    auto back = jacobi_from_positions(x, J, d);
    for (std::size_t i = 0; i < Y.size(); ++i) EXPECT_NEAR(back[i], Y[i], 1e-12);

    std::vector<double> c = {1.5, -2.0, 0, 0, 0, 0};
    auto xc = positions_from_jacobi(c, J, d);
    for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_DOUBLE_EQ(xc[j * d], 1.5);
        EXPECT_DOUBLE_EQ(xc[j * d + 1], -2.0);
    }
    EXPECT_THROW(positions_from_jacobi(std::vector<double>(5), J, d), domain_error);
}

TEST(Jacobi, ShiftChangesOnlyCentreOfMass) {
    auto J = jacobi_matrix(4);
    std::vector<double> x = {0.3, -1.2, 2.2, 0.7};
    auto Y = jacobi_from_positions(x, J, 1);
    for (auto& v : x) v += 5.0;
    auto Z = jacobi_from_positions(x, J, 1);
    EXPECT_NEAR(Z[0] - Y[0], 5.0, 1e-14);
    for (std::size_t j = 1; j < 4; ++j) EXPECT_NEAR(Z[j], Y[j], 1e-14);
}

TEST(Jacobi, KineticSplit) {
    EXPECT_LT(kinetic_split_check(2, 1.0, 20), 1e-12);
    EXPECT_LT(kinetic_split_check(5, 1.7, 100, 3), 1e-10);
    EXPECT_LT(kinetic_split_check(10, 0.4, 100, 11), 1e-10);
}
