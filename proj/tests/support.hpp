#pragma once

// Independent oracles shared by the test binaries. None of these call into the
// library's solvers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "wpt/random.hpp"
#include "wpt/types.hpp"

namespace wpt::testing {

inline Matrix random_points(Index n, Index d, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    return scale * rng.normal_matrix(n, d);
}

/// Squared distances by a plain double loop.
inline Matrix loop_cost(const Matrix& X, const Matrix& Y) {
    Matrix C(X.rows(), Y.rows());
    for (Index i = 0; i < X.rows(); ++i)
        for (Index j = 0; j < Y.rows(); ++j) {
            double s = 0.0;
            for (Index k = 0; k < X.cols(); ++k) s += (X(i, k) - Y(j, k)) * (X(i, k) - Y(j, k));
            C(i, j) = s;
        }
    return C;
}

/// Minimum over all permutation plans of the uniform assignment problem,
/// (1/n) sum_i C(i, sigma(i)).
template <class Cost>
double brute_force_assignment(const Cost& C, std::vector<Index>* best_perm = nullptr) {
    const Index n = C.rows();
    std::vector<Index> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (Index i = 0; i < n; ++i) s += C(i, p[static_cast<std::size_t>(i)]);
        if (s < best) {
            best = s;
            if (best_perm) *best_perm = p;
        }
    } while (std::next_permutation(p.begin(), p.end()));
    return best / static_cast<double>(n);
}

/// Planar convex hull membership via support functions: y is in the hull iff
/// u.y <= max_j u.Y_j for every direction u. Checked on a dense set of
/// directions plus every edge normal of the point set.
inline bool inside_hull_2d(const Matrix& Y, const Vector& y, double tol) {
    const auto outside = [&](double ux, double uy) {
        double best = -std::numeric_limits<double>::infinity();
        for (Index j = 0; j < Y.rows(); ++j) best = std::max(best, ux * Y(j, 0) + uy * Y(j, 1));
        return ux * y(0) + uy * y(1) > best + tol;
    };
    for (int k = 0; k < 3600; ++k) {
        const double t = 2.0 * 3.14159265358979323846 * k / 3600.0;
        if (outside(std::cos(t), std::sin(t))) return false;
    }
    for (Index i = 0; i < Y.rows(); ++i)
        for (Index j = 0; j < Y.rows(); ++j)
            if (i != j) {
                const double ex = Y(j, 0) - Y(i, 0), ey = Y(j, 1) - Y(i, 1);
                if (outside(ey, -ex) || outside(-ey, ex)) return false;
            }
    return true;
}

inline double rel_err(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

}  // namespace wpt::testing
