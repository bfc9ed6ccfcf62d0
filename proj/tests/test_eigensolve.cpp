#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "ebind/eigensolve.hpp"
#include "ebind/lattice.hpp"

using namespace ebind;

namespace {

// Dense symmetric matrix wrapped as an operator, with an Eigen copy for reference.
struct DenseOp {
    Eigen::MatrixXd m;
    std::size_t size() const { return static_cast<std::size_t>(m.rows()); }
    void apply(std::span<const double> x, std::span<double> y) const {
        Eigen::Map<const Eigen::VectorXd> xv(x.data(), m.rows());
        Eigen::Map<Eigen::VectorXd> yv(y.data(), m.rows());
        yv.noalias() = m * xv;
    }
};

DenseOp random_symmetric(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = g(rng);
    return {0.5 * (a + a.transpose())};
}

LatticeOperator oscillator(double L, double h, double shift = 0.0) {
    LatticeOperator op;
    op.grid = GridSpec{{GridSpec::axis_for(L, h)}};
    op.kinetic_coeffs = {0.5};
    GridCursor c(op.grid);
    for (std::size_t i = 0; i < op.grid.size(); ++i, c.next())
        op.potential_diag.push_back(0.5 * c.coords()[0] * c.coords()[0] + shift);
    return op;
}

}  // namespace

TEST(Eigensolve, OscillatorLevels) {
    auto op = oscillator(12.0, 0.05);
    auto r = lowest_eigenpairs(op, 3);
    ASSERT_EQ(r.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(r[i].energy, 0.5 + static_cast<double>(i), 5e-3);
        EXPECT_TRUE(r[i].converged);
        EXPECT_LT(r[i].residual, 1e-8);
    }
}

TEST(Eigensolve, ConstantShift) {
    const double e0 = ground_state(oscillator(8.0, 0.1)).energy;
    const double e1 = ground_state(oscillator(8.0, 0.1, 3.25)).energy;
    EXPECT_NEAR(e1 - e0, 3.25, 1e-9);
}

TEST(Eigensolve, SmallDenseAgainstEigen) {
    auto op = random_symmetric(16, 3);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.m);
    auto r = lowest_eigenpairs(op, 4);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(r[i].energy, es.eigenvalues()(i), 1e-10);
    auto dense = dense_symmetric_eigen([&] {
        Matrix m(16, 16);
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j) m(i, j) = op.m(i, j);
        return m;
    }());
    for (int i = 0; i < 16; ++i) EXPECT_NEAR(dense.values[i], es.eigenvalues()(i), 1e-10);
}

TEST(Eigensolve, LanczosAgainstEigen) {
    auto op = random_symmetric(200, 11);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.m);
    SolverOptions opt;
    opt.tol = 1e-10;
    auto r = lowest_eigenpairs(op, 3, opt);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(r[i].energy, es.eigenvalues()(i), 1e-10);
        EXPECT_TRUE(r[i].converged);
    }
}

TEST(Eigensolve, DoubleWellSplitting) {
    auto op = oscillator(6.0, 0.05);
    GridCursor c(op.grid);
    for (std::size_t i = 0; i < op.size(); ++i, c.next()) {
        const double x = c.coords()[0];
        op.potential_diag[i] = 2.0 * (x * x - 2.0) * (x * x - 2.0);
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(op.size(), op.size());
    for (const auto& t : op.triplets()) m(t.row, t.col) = t.value;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    auto r = lowest_eigenpairs(op, 2);
    EXPECT_NEAR(r[0].energy, es.eigenvalues()(0), 1e-8);
    EXPECT_NEAR(r[1].energy, es.eigenvalues()(1), 1e-8);
    EXPECT_GT(r[1].energy - r[0].energy, 0.0);
    EXPECT_LT(r[1].energy - r[0].energy, 0.1);
}

TEST(Eigensolve, GroundStateMatchesFirstPair) {
    auto op = oscillator(10.0, 0.1);
    auto a = ground_state(op);
    auto b = lowest_eigenpairs(op, 1).front();
    EXPECT_DOUBLE_EQ(a.energy, b.energy);
    EXPECT_EQ(a.vector, b.vector);
}

TEST(Eigensolve, VariationalBound) {
    auto op = oscillator(10.0, 0.1);
    const double e0 = ground_state(op).energy;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int t = 0; t < 20; ++t) {
        std::vector<double> u(op.size());
        for (auto& v : u) v = g(rng);
        EXPECT_GE(rayleigh_quotient(op, u), e0 - 1e-12);
    }
    EXPECT_NEAR(rayleigh_quotient(op, ground_state(op).vector), e0, 1e-10);
}

TEST(Eigensolve, GroundStateIsSignDefinite) {
    auto op = oscillator(6.0, 0.1);
    GridCursor c(op.grid);
    for (std::size_t i = 0; i < op.size(); ++i, c.next())
        op.potential_diag[i] = -3.0 * std::exp(-std::pow(c.coords()[0] - 1.0, 2));
    auto v = ground_state(op).vector;
    for (double x : v) EXPECT_GT(x, 0.0);
}

TEST(Eigensolve, BudgetExhaustionIsReported) {
    auto op = oscillator(20.0, 0.02);
    SolverOptions opt;
    opt.max_matvecs = 40;
    opt.tol = 1e-12;
    auto r = ground_state(op, opt);
    EXPECT_FALSE(r.converged);
    EXPECT_GT(r.residual, opt.tol);
}

TEST(Eigensolve, Deterministic) {
    auto op = oscillator(10.0, 0.05);
    auto a = lowest_eigenpairs(op, 2), b = lowest_eigenpairs(op, 2);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(a[i].energy, b[i].energy);
        EXPECT_EQ(a[i].vector, b[i].vector);
    }
}

TEST(Eigensolve, TridiagonalAgainstEigen) {
    auto op = radial_reduce(SquareWell{4.0, 1.0}, 0, RadialGrid::graded(10.0, 120, 1.5), 1.0);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(120, 120);
    for (int i = 0; i < 120; ++i) {
        m(i, i) = op.diag[i];
        if (i + 1 < 120) m(i, i + 1) = m(i + 1, i) = op.off[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    auto r = lowest_eigenpairs(op, 3);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(r[i].energy, es.eigenvalues()(i), 1e-10);
        EXPECT_LT(r[i].residual, 1e-8);
    }
}
