#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ebind/errors.hpp"
#include "ebind/jacobi.hpp"
#include "ebind/radial.hpp"
#include "ebind/system.hpp"

namespace ebind {

struct Axis {
    double extent = 1.0;  // half-width L
    std::size_t points = 8;

    double spacing() const { return 2.0 * extent / static_cast<double>(points - 1); }
    double coord(std::size_t i) const { return -extent + spacing() * static_cast<double>(i); }
    friend bool operator==(const Axis&, const Axis&) = default;
};

// Tensor grid with Dirichlet walls one spacing beyond the outermost nodes.
struct GridSpec {
    std::vector<Axis> axes;

    static GridSpec uniform(std::size_t dims, double extent, std::size_t points) {
        return GridSpec{std::vector<Axis>(dims, Axis{extent, points})};
    }

    // Axis with the given half-width whose spacing is as close as possible to h.
    static Axis axis_for(double extent, double h) {
        auto n = static_cast<std::size_t>(std::llround(2.0 * extent / h)) + 1;
        return Axis{extent, std::max<std::size_t>(n, 8)};
    }

    std::size_t dims() const { return axes.size(); }

    std::size_t size() const {
        std::size_t n = 1;
        for (const auto& a : axes) n *= a.points;
        return n;
    }

    void validate() const {
        for (const auto& a : axes) {
            if (a.points < 8) throw domain_error("grid: every axis needs at least 8 points");
            if (!(a.extent > 0.0)) throw domain_error("grid: extent must be positive");
        }
    }

    std::vector<std::size_t> strides() const {
        std::vector<std::size_t> s(axes.size(), 1);
        for (std::size_t a = axes.size(); a-- > 1;) s[a - 1] = s[a] * axes[a].points;
        return s;
    }

    double cell_volume() const {
        double v = 1.0;
        for (const auto& a : axes) v *= a.spacing();
        return v;
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Walks every node of a grid, keeping the coordinates current.
class GridCursor {
public:
    explicit GridCursor(const GridSpec& g) : g_(&g), idx_(g.dims(), 0), x_(g.dims()) {
        for (std::size_t a = 0; a < g.dims(); ++a) x_[a] = g.axes[a].coord(0);
    }
    std::span<const double> coords() const { return x_; }
    std::span<const std::size_t> index() const { return idx_; }
    void next() {
        for (std::size_t a = g_->dims(); a-- > 0;) {
            if (++idx_[a] < g_->axes[a].points) {
                x_[a] = g_->axes[a].coord(idx_[a]);
                return;
            }
            idx_[a] = 0;
            x_[a] = g_->axes[a].coord(0);
        }
    }

private:
    const GridSpec* g_;
    std::vector<std::size_t> idx_;
    std::vector<double> x_;
};

struct Triplet {
    std::size_t row, col;
    double value;
};

// Second-order central-difference kinetic term per axis plus a diagonal potential.
struct LatticeOperator {
    GridSpec grid;
    std::vector<double> kinetic_coeffs;  // 1/(2 m_axis)
    std::vector<double> potential_diag;
    std::string label;

    std::size_t size() const { return potential_diag.size(); }

    double diagonal(std::size_t i) const {
        double s = potential_diag[i];
        for (std::size_t a = 0; a < grid.dims(); ++a) {
            double h = grid.axes[a].spacing();
            s += 2.0 * kinetic_coeffs[a] / (h * h);
        }
        return s;
    }

    void apply(std::span<const double> x, std::span<double> y) const {
        const std::size_t n = size();
        double kdiag = 0.0;
        for (std::size_t a = 0; a < grid.dims(); ++a) {
            double h = grid.axes[a].spacing();
            kdiag += 2.0 * kinetic_coeffs[a] / (h * h);
        }
        for (std::size_t i = 0; i < n; ++i) y[i] = (potential_diag[i] + kdiag) * x[i];
        const auto strides = grid.strides();
        for (std::size_t a = 0; a < grid.dims(); ++a) {
            const double h = grid.axes[a].spacing();
            const double c = kinetic_coeffs[a] / (h * h);
            const std::size_t s = strides[a], len = grid.axes[a].points, block = s * len;
            for (std::size_t o = 0; o < n; o += block) {
                for (std::size_t i = 0; i < len; ++i) {
                    const std::size_t base = o + i * s;
                    if (i > 0)
                        for (std::size_t j = 0; j < s; ++j) y[base + j] -= c * x[base + j - s];
                    if (i + 1 < len)
                        for (std::size_t j = 0; j < s; ++j) y[base + j] -= c * x[base + j + s];
                }
            }
        }
    }

    // Normalized gaussian bump centred in the box.
    std::vector<double> start_guess() const {
        std::vector<double> v(size());
        GridCursor cur(grid);
        for (std::size_t i = 0; i < v.size(); ++i, cur.next()) {
            double e = 0.0;
            for (std::size_t a = 0; a < grid.dims(); ++a) {
                double w = 0.35 * grid.axes[a].extent;
                double t = cur.coords()[a] / w;
                e += t * t;
            }
            v[i] = std::exp(-0.5 * e);
        }
        return v;
    }

    std::vector<Triplet> triplets() const {
        std::vector<Triplet> out;
        const auto strides = grid.strides();
        GridCursor cur(grid);
        for (std::size_t i = 0; i < size(); ++i, cur.next()) {
            out.push_back({i, i, diagonal(i)});
            for (std::size_t a = 0; a < grid.dims(); ++a) {
                double h = grid.axes[a].spacing();
                double c = -kinetic_coeffs[a] / (h * h);
                if (cur.index()[a] > 0) out.push_back({i, i - strides[a], c});
                if (cur.index()[a] + 1 < grid.axes[a].points) out.push_back({i, i + strides[a], c});
            }
        }
        std::sort(out.begin(), out.end(), [](const Triplet& p, const Triplet& q) {
            return p.row != q.row ? p.row < q.row : p.col < q.col;
        });
        return out;
    }
};

// Coordinate-format export, debug sized grids only.
inline void write_coo_csv(const std::vector<Triplet>& t, std::FILE* f) {
    std::fprintf(f, "row,col,value\n");
    for (const auto& e : t) std::fprintf(f, "%zu,%zu,%.17g\n", e.row, e.col, e.value);
}

struct BuildOptions {
    std::optional<double> alpha;  // replaces every coupling
    bool include_pair = true;
    // unordered pair whose two ordered terms are dropped
    std::optional<std::pair<std::size_t, std::size_t>> removed_pair;
    std::size_t max_points = 16'000'000;
    bool exact_pair = false;  // run the Fourier quadrature at every node
};

namespace detail {

inline void check_cap(std::size_t points, std::size_t cap, const char* what) {
    if (points > cap) throw too_large(std::string(what) + ": grid too large", points, cap);
}

inline double grid_diameter(const GridSpec& g) {
    double s = 0.0;
    for (const auto& a : g.axes) s += 4.0 * a.extent * a.extent;
    return std::sqrt(s);
}

// Potential at particle positions x (|beta| d-vectors) for the listed particles.
struct ClusterPotential {
    const ParticleSystem& sys;
    const std::vector<std::size_t>& beta;
    const PairField* field;
    bool external;
    const BuildOptions& opt;

    double operator()(std::span<const double> x) const {
        const std::size_t n = beta.size();
        const auto d = static_cast<std::size_t>(sys.d);
        double v = 0.0;
        if (external)
            for (std::size_t a = 0; a < n; ++a) {
                double r2 = 0.0;
                for (std::size_t k = 0; k < d; ++k) r2 += x[a * d + k] * x[a * d + k];
                v += evaluate(sys.external[beta[a]], std::sqrt(r2));
            }
        if (field)
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = a + 1; b < n; ++b) {
                    if (opt.removed_pair) {
                        auto [p, q] = *opt.removed_pair;
                        if ((beta[a] == p && beta[b] == q) || (beta[a] == q && beta[b] == p))
                            continue;
                    }
                    double r2 = 0.0;
                    for (std::size_t k = 0; k < d; ++k) {
                        double t = x[a * d + k] - x[b * d + k];
                        r2 += t * t;
                    }
                    v += 2.0 * field->pair(beta[a], beta[b], std::sqrt(r2));
                }
        return v;
    }
};

inline void check_beta(const ParticleSystem& sys, const std::vector<std::size_t>& beta) {
    for (std::size_t i = 0; i < beta.size(); ++i) {
        if (beta[i] >= sys.size()) throw domain_error("cluster index out of range");
        if (i > 0 && !(beta[i] > beta[i - 1]))
            throw domain_error("cluster indices must be strictly increasing");
    }
}

}  // namespace detail

inline std::string cluster_label(const char* op, const std::vector<std::size_t>& beta) {
    std::string s = std::string(op) + "({";
    for (std::size_t i = 0; i < beta.size(); ++i) s += (i ? "," : "") + std::to_string(beta[i] + 1);
    return s + "})";
}

// h^V(beta) or h^0(beta) in particle coordinates; beta is 0-based and sorted.
inline LatticeOperator build_cluster_hamiltonian(const ParticleSystem& sys_in,
                                                 const std::vector<std::size_t>& beta,
                                                 const GridSpec& grid, bool include_external,
                                                 const BuildOptions& opt = {}) {
    ParticleSystem sys = opt.alpha ? with_uniform_coupling(sys_in, *opt.alpha) : sys_in;
    sys.validate();
    detail::check_beta(sys, beta);
    const std::size_t d = static_cast<std::size_t>(sys.d);
    LatticeOperator op;
    op.label = cluster_label(include_external ? "h^V" : "h^0", beta);
    if (beta.empty()) {
        if (grid.dims() != 0) throw domain_error("empty cluster needs a zero-dimensional grid");
        op.potential_diag = {0.0};
        return op;
    }
    if (grid.dims() != d * beta.size())
        throw domain_error("grid dimension must equal d * |beta|");
    grid.validate();
    detail::check_cap(grid.size(), opt.max_points, "build_cluster_hamiltonian");
    op.grid = grid;
    for (std::size_t a = 0; a < beta.size(); ++a)
        for (std::size_t k = 0; k < d; ++k) op.kinetic_coeffs.push_back(0.5 / sys.masses[beta[a]]);

    std::optional<PairField> field;
    if (opt.include_pair && beta.size() >= 2)
        field.emplace(sys, detail::grid_diameter(grid) + 1.0, opt.exact_pair);
    detail::ClusterPotential pot{sys, beta, field ? &*field : nullptr, include_external, opt};
    op.potential_diag.resize(grid.size());
    GridCursor cur(grid);
    for (std::size_t i = 0; i < grid.size(); ++i, cur.next()) op.potential_diag[i] = pot(cur.coords());
    return op;
}

// Cluster operator in Jacobi coordinates: axes are [x_c if include_com], y_1, ..., y_{n-1}.
inline LatticeOperator build_jacobi_hamiltonian(const ParticleSystem& sys_in,
                                                const std::vector<std::size_t>& beta,
                                                const GridSpec& grid, bool include_com,
                                                bool include_external, const BuildOptions& opt = {}) {
    ParticleSystem sys = opt.alpha ? with_uniform_coupling(sys_in, *opt.alpha) : sys_in;
    sys.validate();
    detail::check_beta(sys, beta);
    const std::size_t n = beta.size();
    if (n < 2) throw domain_error("Jacobi coordinates need at least two particles");
    const double m = sys.masses[beta[0]];
    for (std::size_t b : beta)
        if (sys.masses[b] != m) throw unsupported("Jacobi coordinates need equal masses");
    if (include_external && !include_com)
        throw domain_error("external potentials depend on the centre of mass");
    const std::size_t d = static_cast<std::size_t>(sys.d);
    const std::size_t blocks = include_com ? n : n - 1;
    if (grid.dims() != d * blocks) throw domain_error("grid dimension does not match Jacobi blocks");
    grid.validate();
    detail::check_cap(grid.size(), opt.max_points, "build_jacobi_hamiltonian");

    const JacobiTransform J = jacobi_matrix(n);
    LatticeOperator op;
    op.grid = grid;
    op.label = include_com ? cluster_label(include_external ? "h^V" : "h^0", beta)
                           : std::string("k(alpha)") + cluster_label("", beta);
    if (include_com)
        for (std::size_t k = 0; k < d; ++k) op.kinetic_coeffs.push_back(0.5 / (static_cast<double>(n) * m));
    for (std::size_t j = 0; j + 1 < n; ++j)
        for (std::size_t k = 0; k < d; ++k) op.kinetic_coeffs.push_back(0.5 / (J.reduced_masses[j] * m));

    std::optional<PairField> field;
    if (opt.include_pair) {
        // largest separation reachable on this grid
        double reach = 0.0;
        for (const auto& a : grid.axes) reach += a.extent;
        field.emplace(sys, 2.0 * reach + 1.0, opt.exact_pair);
    }
    detail::ClusterPotential pot{sys, beta, field ? &*field : nullptr, include_external, opt};
    op.potential_diag.resize(grid.size());
    std::vector<double> Y(n * d, 0.0);
    GridCursor cur(grid);
    const std::size_t off = include_com ? 0 : d;
    for (std::size_t i = 0; i < grid.size(); ++i, cur.next()) {
        auto c = cur.coords();
        for (std::size_t t = 0; t < c.size(); ++t) Y[off + t] = c[t];
        auto x = positions_from_jacobi(Y, J, d);
        op.potential_diag[i] = pot(x);
    }
    return op;
}

// k(alpha): relative coordinates only, all couplings set to alpha.
inline LatticeOperator build_relative_hamiltonian(const ParticleSystem& sys, const GridSpec& grid,
                                                  double alpha, BuildOptions opt = {}) {
    if (!sys.equal_masses()) throw unsupported("build_relative_hamiltonian: unequal masses");
    std::vector<std::size_t> all(sys.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    opt.alpha = alpha;
    auto op = build_jacobi_hamiltonian(sys, all, grid, false, false, opt);
    op.label = "k(alpha)";
    return op;
}

// Interior nodes r_1..r_n of (0, L]; r_i = L (i/(n+1))^power.
struct RadialGrid {
    std::vector<double> nodes;
    double outer = 1.0;

    static RadialGrid graded(double L, std::size_t n, double power = 1.0) {
        if (n < 8 || !(L > 0.0) || !(power >= 1.0)) throw domain_error("radial grid: bad parameters");
        RadialGrid g;
        g.outer = L;
        for (std::size_t i = 1; i <= n; ++i)
            g.nodes.push_back(L * std::pow(static_cast<double>(i) / static_cast<double>(n + 1), power));
        return g;
    }
    static RadialGrid uniform(double L, std::size_t n) { return graded(L, n, 1.0); }
};

// Symmetric tridiagonal operator M^{-1/2} K M^{-1/2} + diag(U) from linear
// finite elements with lumped mass; u(0) = u(L) = 0.
struct RadialOperator {
    RadialGrid grid;
    std::vector<double> diag;
    std::vector<double> off;      // off[i] couples i and i+1
    std::vector<double> lumped;   // M_i, for mapping eigenvectors to u(r_i)
    std::string label;

    std::size_t size() const { return diag.size(); }

    void apply(std::span<const double> x, std::span<double> y) const {
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += off[i - 1] * x[i - 1];
            if (i + 1 < n) s += off[i] * x[i + 1];
            y[i] = s;
        }
    }

    std::vector<double> start_guess() const {
        std::vector<double> v(size());
        const double L = grid.outer;
        for (std::size_t i = 0; i < v.size(); ++i) {
            double r = grid.nodes[i];
            v[i] = std::sqrt(lumped[i]) * r * std::exp(-3.0 * r / L);
        }
        return v;
    }
};

inline RadialOperator radial_reduce(const RadialPotential& w, int ell, const RadialGrid& grid,
                                    double mass) {
    if (ell < 0) throw domain_error("radial_reduce: angular momentum must be >= 0");
    if (!(mass > 0.0)) throw domain_error("radial_reduce: mass must be positive");
    const std::size_t n = grid.nodes.size();
    auto r_at = [&](std::size_t i) {  // i in 0..n+1 including the two walls
        if (i == 0) return 0.0;
        if (i == n + 1) return grid.outer;
        return grid.nodes[i - 1];
    };
    const double c = 0.5 / mass;
    RadialOperator op;
    op.grid = grid;
    op.label = "radial(l=" + std::to_string(ell) + ")";
    op.diag.resize(n);
    op.off.resize(n > 0 ? n - 1 : 0);
    op.lumped.resize(n);
    for (std::size_t i = 1; i <= n; ++i) {
        double hl = r_at(i) - r_at(i - 1), hr = r_at(i + 1) - r_at(i);
        op.lumped[i - 1] = 0.5 * (hl + hr);
    }
    const double cent = 0.5 * ell * (ell + 1) / mass;
    for (std::size_t i = 1; i <= n; ++i) {
        double r = r_at(i);
        double hl = r - r_at(i - 1), hr = r_at(i + 1) - r;
        op.diag[i - 1] = c * (1.0 / hl + 1.0 / hr) / op.lumped[i - 1] + evaluate(w, r) + cent / (r * r);
        if (i < n) op.off[i - 1] = -c / hr / std::sqrt(op.lumped[i - 1] * op.lumped[i]);
    }
    return op;
}

}  // namespace ebind
