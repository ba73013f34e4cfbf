#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "wpt/ot/cost.hpp"
#include "wpt/ot/coupling.hpp"
#include "wpt/ot/solvers.hpp"
#include "wpt/types.hpp"

namespace wpt {

namespace detail {

inline void check_same_dim(const PointCloud& P, const PointCloud& Q) {
    if (P.dim() != Q.dim())
        throw InputError("point clouds have dimensions " + std::to_string(P.dim()) + " and " + std::to_string(Q.dim()));
}

}  // namespace detail

/// Optimal plan between two clouds under squared Euclidean cost.
inline Coupling optimal_coupling(const PointCloud& P, const PointCloud& Q, const SolverConfig& cfg = {}) {
    detail::check_same_dim(P, Q);
    const CostMatrix C = pairwise_sq_cost(P.points(), Q.points());
    if (cfg.method == SolverMethod::exact && P.size() > 64 && Q.size() > 64) {
        const ExactHint hint = principal_axis_hint(P.points(), Q.points());
        return solve_exact(P.weights(), Q.weights(), C, &hint);
    }
    return solve_ot(P.weights(), Q.weights(), C, cfg);
}

inline double w2_distance(const PointCloud& P, const PointCloud& Q, const SolverConfig& cfg = {}) {
    return std::sqrt(std::max(0.0, optimal_coupling(P, Q, cfg).cost()));
}

/// Conditional barycenter of the target for every source atom.
inline Matrix barycentric_projection(const Coupling& plan, const Matrix& Y) {
    if (Y.rows() != plan.cols())
        throw InputError("barycentric projection: plan has " + std::to_string(plan.cols()) + " columns but " +
                         std::to_string(Y.rows()) + " target points");
    Matrix out = Matrix::Zero(plan.rows(), Y.cols());
    Vector mass = Vector::Zero(plan.rows());
    for (const auto& e : plan.entries()) {
        out.row(e.row) += e.mass * Y.row(e.col);
        mass(e.row) += e.mass;
    }
    for (Index i = 0; i < plan.rows(); ++i) {
        if (!(mass(i) > 0.0)) throw DegeneratePlanError("plan row " + std::to_string(i) + " carries no mass");
        out.row(i) /= mass(i);
    }
    return out;
}

/// Mass-weighted average of the source vectors arriving at each target atom.
inline Matrix weighted_aggregate(const Coupling& plan, const Matrix& Z) {
    if (Z.rows() != plan.rows())
        throw InputError("weighted aggregate: plan has " + std::to_string(plan.rows()) + " rows but " +
                         std::to_string(Z.rows()) + " source vectors");
    Matrix out = Matrix::Zero(plan.cols(), Z.cols());
    Vector mass = Vector::Zero(plan.cols());
    for (const auto& e : plan.entries()) {
        out.row(e.col) += e.mass * Z.row(e.row);
        mass(e.col) += e.mass;
    }
    for (Index j = 0; j < plan.cols(); ++j) {
        if (!(mass(j) > 0.0)) throw DegeneratePlanError("plan column " + std::to_string(j) + " carries no mass");
        out.row(j) /= mass(j);
    }
    return out;
}

/// Log map from an already solved plan P -> Q.
inline TangentField log_map(const PointCloud& P, const PointCloud& Q, const Coupling& plan) {
    return {P, barycentric_projection(plan, Q.points()) - P.points()};
}

/// Empirical log map: barycentric image of the optimal plan minus identity.
inline TangentField log_map(const PointCloud& P, const PointCloud& Q, const SolverConfig& cfg = {}) {
    return log_map(P, Q, optimal_coupling(P, Q, cfg));
}

/// Pushes every atom along its vector: x_i + t v_i, weights unchanged.
inline PointCloud exp_map(const PointCloud& P, const TangentField& v, double t = 1.0) {
    if (!(v.anchor() == P)) throw InputError("tangent field is not anchored at the given point cloud");
    return P.with_points(P.points() + t * v.vectors());
}

}  // namespace wpt
