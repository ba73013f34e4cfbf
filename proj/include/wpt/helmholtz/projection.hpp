#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "wpt/helmholtz/exact.hpp"
#include "wpt/helmholtz/kernel.hpp"
#include "wpt/helmholtz/rff.hpp"
#include "wpt/types.hpp"

namespace wpt {

enum class ProjectionMethod { automatic, exact, rff };

struct ProjectionConfig {
    ProjectionMethod method = ProjectionMethod::automatic;  ///< automatic: rff above auto_threshold points
    KernelSpec kernel;
    std::optional<double> lambda;  ///< default n^{-1/3}
    Index n_features = 1024;
    std::uint64_t seed = 0;
    Index max_exact_system = kDefaultMaxExactSystem;
    Index auto_threshold = 500;

    [[nodiscard]] double resolved_lambda(Index n) const {
        return lambda ? *lambda : std::pow(static_cast<double>(n), -1.0 / 3.0);
    }
    [[nodiscard]] ProjectionMethod resolved_method(Index n) const {
        if (method != ProjectionMethod::automatic) return method;
        return n > auto_threshold ? ProjectionMethod::rff : ProjectionMethod::exact;
    }
};

inline TangentField project_field(const ExactGradientModel& model, const PointCloud& anchor) {
    return {anchor, model.gradient(anchor.points())};
}

inline TangentField project_field(const RFFModel& model, const PointCloud& anchor) {
    return {anchor, model.gradient(anchor.points())};
}

/// L2(P) projection of v onto gradient fields: a kernel gradient regression on
/// P's support with P's weights as per-sample loss multipliers, evaluated back
/// on the support.
inline TangentField helmholtz_project(const PointCloud& P, const TangentField& v, const ProjectionConfig& cfg) {
    if (!(v.anchor() == P)) throw InputError("tangent field is not anchored at the given point cloud");
    const Index n = P.size();
    const double lambda = cfg.resolved_lambda(n);
    if (cfg.resolved_method(n) == ProjectionMethod::exact) {
        const auto model = fit_exact(P.points(), v.vectors(), cfg.kernel, lambda, &P.weights(), cfg.max_exact_system);
        return project_field(model, P);
    }
    const auto model = fit_rff(P.points(), v.vectors(), cfg.kernel, lambda, cfg.n_features, cfg.seed, &P.weights());
    return project_field(model, P);
}

}  // namespace wpt
