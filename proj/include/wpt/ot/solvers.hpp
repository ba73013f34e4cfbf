#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "wpt/ot/cost.hpp"
#include "wpt/ot/coupling.hpp"
#include "wpt/ot/network_simplex.hpp"
#include "wpt/types.hpp"

namespace wpt {

enum class SolverMethod { exact, sinkhorn };

struct SolverConfig {
    SolverMethod method = SolverMethod::exact;
    double epsilon = 1e-2;       ///< entropic regularization (absolute, in cost units)
    int max_iter = 10000;
    double tol = 1e-9;           ///< L1 marginal violation at which Sinkhorn stops
};

/// Optional warm start for the exact solver: orders of rows and columns along
/// which a north-west-corner plan is a good initial basis (e.g. sorted
/// projections on a common axis).
struct ExactHint {
    std::vector<int> row_order;
    std::vector<int> col_order;
};

/// Diagnostics of the last Sinkhorn run.
struct SinkhornReport {
    int iterations = 0;
    double marginal_violation = 0.0;  ///< before the feasibility rounding
    bool converged = false;
    bool log_domain = false;
};

namespace detail {

inline void check_probability(const Vector& w, const char* name) {
    if (w.size() < 1) throw InputError(std::string(name) + " weights are empty");
    if (!w.allFinite() || (w.array() < 0.0).any())
        throw InputError(std::string(name) + " weights must be finite and nonnegative");
}

inline void check_problem(const Vector& a, const Vector& b, const CostMatrix& C) {
    check_probability(a, "source");
    check_probability(b, "target");
    if (C.rows() != a.size() || C.cols() != b.size())
        throw InputError("cost matrix is " + std::to_string(C.rows()) + "x" + std::to_string(C.cols()) +
                         " for marginals of length " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    if (!C.allFinite()) throw InputError("cost matrix contains non-finite entries");
    if (std::abs(a.sum() - b.sum()) > 1e-6)
        throw InputError("marginal masses differ: " + std::to_string(a.sum()) + " vs " + std::to_string(b.sum()));
}

inline double median_of(const CostMatrix& C) {
    std::vector<double> v(C.data(), C.data() + C.size());
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

// Rounds an approximately feasible plan onto the transport polytope: shrink rows
// and columns that carry too much mass, then spread the deficit with a rank-one
// correction. The result has the exact marginals (up to rounding) and stays >= 0.
inline Matrix round_to_feasible(Matrix P, const Vector& a, const Vector& b) {
    const Vector r = P.rowwise().sum();
    for (Index i = 0; i < P.rows(); ++i)
        if (r(i) > a(i)) P.row(i) *= a(i) / r(i);
    const Vector c = P.colwise().sum().transpose();
    for (Index j = 0; j < P.cols(); ++j)
        if (c(j) > b(j)) P.col(j) *= b(j) / c(j);
    const Vector er = (a - P.rowwise().sum()).cwiseMax(0.0);
    const Vector ec = (b - P.colwise().sum().transpose()).cwiseMax(0.0);
    const double total = er.sum();
    if (total > 0.0) P.noalias() += er * ec.transpose() / total;
    return P;
}

}  // namespace detail

/// Exact discrete OT by primal network simplex. Marginals whose masses differ by
/// at most 1e-6 are rescaled to balance before solving.
inline Coupling solve_exact(const Vector& a, const Vector& b, const CostMatrix& C, const ExactHint* hint = nullptr) {
    detail::check_problem(a, b, C);
    const Vector bb = b * (a.sum() / b.sum());
    ot::NetworkSimplex ns(a, bb, C);
    ot::NetworkSimplexResult res;
    bool done = false;
    if (hint && static_cast<Index>(hint->row_order.size()) == a.size() &&
        static_cast<Index>(hint->col_order.size()) == b.size()) {
        // The staircase start is not strongly feasible, so cap it and fall back to
        // the artificial start (which is) if it ever stalls.
        const std::int64_t cap = 200 * (a.size() + b.size()) + 10000;
        try {
            res = ns.solve(cap, &hint->row_order, &hint->col_order);
            done = true;
        } catch (const SolverError&) {
            done = false;
        }
    }
    if (!done) res = ns.solve();
    return {std::move(res.entries), a, bb, res.cost};
}

/// Entropic OT (Sinkhorn). Uses scaling updates when epsilon >= 1e-2 * median(C)
/// and log-domain updates below that. The final plan is rounded onto the exact
/// marginals, so its objective never undercuts the exact optimum.
inline Coupling solve_sinkhorn(const Vector& a, const Vector& b, const CostMatrix& C, double epsilon,
                               int max_iter = 10000, double tol = 1e-9, SinkhornReport* report = nullptr) {
    detail::check_problem(a, b, C);
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InputError("sinkhorn epsilon must be > 0");
    if (max_iter < 1) throw InputError("sinkhorn max_iter must be >= 1");
    const Vector bb = b * (a.sum() / b.sum());
    const Index n = a.size(), m = b.size();
    const bool use_log = epsilon < 1e-2 * detail::median_of(C);
    SinkhornReport rep;
    rep.log_domain = use_log;
    Matrix P;

    if (!use_log) {
        const Matrix K = (-C.array() / epsilon).exp().matrix();
        Vector u = Vector::Ones(n), v = Vector::Ones(m);
        for (rep.iterations = 1; rep.iterations <= max_iter; ++rep.iterations) {
            const Vector Kv = K * v;
            u = a.array() / Kv.array();
            const Vector Ktu = K.transpose() * u;
            v = bb.array() / Ktu.array();
            if (!u.allFinite() || !v.allFinite() || (Kv.array() == 0.0).any() || (Ktu.array() == 0.0).any())
                throw SolverError("sinkhorn scaling underflowed at epsilon " + std::to_string(epsilon) +
                                  "; use a larger epsilon");
            rep.marginal_violation = (u.cwiseProduct(K * v) - a).lpNorm<1>();
            if (rep.marginal_violation <= tol) {
                rep.converged = true;
                break;
            }
        }
        rep.iterations = std::min(rep.iterations, max_iter);
        P = u.asDiagonal() * K * v.asDiagonal();
    } else {
        // potentials f, g with P_ij = exp((f_i + g_j - C_ij) / eps)
        const Eigen::ArrayXd loga = a.array().log(), logb = bb.array().log();
        Eigen::ArrayXd f = Eigen::ArrayXd::Zero(n), g = Eigen::ArrayXd::Zero(m);
        const auto lse_rows = [&](const Eigen::ArrayXd& gg) {
            Eigen::ArrayXd out(n);
            for (Index i = 0; i < n; ++i) {
                const Eigen::ArrayXd z = (gg - C.row(i).transpose().array()) / epsilon;
                const double mx = z.maxCoeff();
                out(i) = std::isfinite(mx) ? mx + std::log((z - mx).exp().sum()) : mx;
            }
            return out;
        };
        const auto lse_cols = [&](const Eigen::ArrayXd& ff) {
            Eigen::ArrayXd mx = Eigen::ArrayXd::Constant(m, -std::numeric_limits<double>::infinity());
            for (Index i = 0; i < n; ++i)
                mx = mx.max((ff(i) - C.row(i).transpose().array()) / epsilon);
            Eigen::ArrayXd s = Eigen::ArrayXd::Zero(m);
            for (Index i = 0; i < n; ++i) {
                const Eigen::ArrayXd z = (ff(i) - C.row(i).transpose().array()) / epsilon - mx;
                s += z.exp();
            }
            Eigen::ArrayXd out = mx + s.log();
            for (Index j = 0; j < m; ++j)
                if (!std::isfinite(mx(j))) out(j) = mx(j);
            return out;
        };
        for (rep.iterations = 1; rep.iterations <= max_iter; ++rep.iterations) {
            f = epsilon * (loga - lse_rows(g));
            g = epsilon * (logb - lse_cols(f));
            // row marginals after the column update
            const Eigen::ArrayXd rows = ((f / epsilon) + lse_rows(g)).exp();
            rep.marginal_violation = (rows - a.array()).abs().sum();
            if (rep.marginal_violation <= tol) {
                rep.converged = true;
                break;
            }
        }
        rep.iterations = std::min(rep.iterations, max_iter);
        P.resize(n, m);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < m; ++j) P(i, j) = std::exp((f(i) + g(j) - C(i, j)) / epsilon);
        if (!P.allFinite()) throw SolverError("sinkhorn potentials became non-finite; use a larger epsilon");
    }

    P = detail::round_to_feasible(std::move(P), a, bb);
    std::vector<PlanEntry> entries;
    double cost = 0.0;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j)
            if (P(i, j) > 0.0) {
                entries.push_back({i, j, P(i, j)});
                cost += P(i, j) * C(i, j);
            }
    if (report) *report = rep;
    return {std::move(entries), a, bb, cost};
}

/// Dispatches on the configured method.
inline Coupling solve_ot(const Vector& a, const Vector& b, const CostMatrix& C, const SolverConfig& cfg,
                         const ExactHint* hint = nullptr) {
    if (cfg.method == SolverMethod::sinkhorn) return solve_sinkhorn(a, b, C, cfg.epsilon, cfg.max_iter, cfg.tol);
    return solve_exact(a, b, C, hint);
}

/// Orders both clouds by their projection on the leading principal axis of the
/// pooled support; a cheap warm start for the exact solver.
inline ExactHint principal_axis_hint(const Matrix& X, const Matrix& Y) {
    Matrix pooled(X.rows() + Y.rows(), X.cols());
    pooled << X, Y;
    const Eigen::RowVectorXd mean = pooled.colwise().mean();
    const Matrix centered = pooled.rowwise() - mean;
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(centered.transpose() * centered);
    const Vector axis = eig.eigenvectors().col(X.cols() - 1);
    const auto order_of = [&](const Matrix& Z) {
        const Vector proj = Z * axis;
        std::vector<int> idx(static_cast<std::size_t>(Z.rows()));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int p, int q) { return proj(p) < proj(q); });
        return idx;
    };
    return {order_of(X), order_of(Y)};
}

}  // namespace wpt
