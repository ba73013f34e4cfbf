#pragma once

// Approximate parallel transport along an empirical W2 geodesic in flat space:
// particles move on straight lines, the vector riding on particle k is pulled
// back index-wise, and (optionally) re-projected onto gradient fields after
// every substep.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "wpt/gaussian.hpp"
#include "wpt/helmholtz/projection.hpp"
#include "wpt/ot/maps.hpp"
#include "wpt/random.hpp"
#include "wpt/types.hpp"

namespace wpt {

inline constexpr int kDefaultSubsteps = 20;

/// Discretized geodesic nu -> mu: intermediate supports nu_i = x + (i/N) u,
/// sharing nu's row labels and weights.
struct GeodesicDiscretization {
    PointCloud base;
    TangentField displacement;
    Coupling plan;  ///< optimal plan base -> target, used to re-anchor onto the target support
    int n_steps = 1;

    [[nodiscard]] PointCloud support(int i) const {
        if (i < 0 || i > n_steps) throw InputError("geodesic index out of range");
        const double s = static_cast<double>(i) / static_cast<double>(n_steps);
        return base.with_points(base.points() + s * displacement.vectors());
    }
};

inline GeodesicDiscretization build_geodesic(const PointCloud& nu, const PointCloud& mu, int N,
                                             const SolverConfig& solver = {}) {
    if (N < 1) throw InputError("geodesic needs N >= 1 substeps");
    Coupling plan = optimal_coupling(nu, mu, solver);
    TangentField u = log_map(nu, mu, plan);
    return {nu, std::move(u), std::move(plan), N};
}

enum class ProjectEvery { each_step, final_only };

/// Transported field on the endpoint support (row k rides with particle k).
/// `final_only` applies no projection at all, so its output does not depend on N.
inline TangentField wpt_approx(const GeodesicDiscretization& geo, const TangentField& v, const ProjectionConfig& proj,
                               ProjectEvery every = ProjectEvery::each_step) {
    if (!(v.anchor() == geo.base)) throw InputError("tangent field is not anchored at the geodesic's base");
    if (every == ProjectEvery::final_only) return {geo.support(geo.n_steps), v.vectors()};
    Matrix current = v.vectors();
    for (int i = 1; i <= geo.n_steps; ++i) {
        const PointCloud anchor = geo.support(i);
        current = helmholtz_project(anchor, TangentField(anchor, std::move(current)), proj).vectors();
        log::debug("transport substep " + std::to_string(i) + "/" + std::to_string(geo.n_steps));
    }
    return {geo.support(geo.n_steps), std::move(current)};
}

inline TangentField wpt_approx(const PointCloud& nu, const PointCloud& mu, const TangentField& v, int N,
                               const ProjectionConfig& proj, ProjectEvery every = ProjectEvery::each_step,
                               const SolverConfig& solver = {}) {
    return wpt_approx(build_geodesic(nu, mu, N, solver), v, proj, every);
}

/// Transported field re-anchored onto mu's own support through the plan.
inline TangentField transport_to_target(const GeodesicDiscretization& geo, const PointCloud& mu, const TangentField& v,
                                        const ProjectionConfig& proj, ProjectEvery every) {
    const TangentField w = wpt_approx(geo, v, proj, every);
    return {mu, weighted_aggregate(geo.plan, w.vectors())};
}

/// Gaussian pair with an affine tangent at the source: the closed-form
/// transport is the reference. The source sample has exact moments and the
/// target sample is its image under the Gaussian optimal map, so the discrete
/// plan is the identity and the remaining error is the scheme's own.
struct TransportFixture {
    GaussianMeasure source;
    GaussianMeasure target;
    AffineTangent tangent;
    Index n_samples = 2000;
    ProjectionConfig projection;
    ProjectEvery every = ProjectEvery::each_step;
    int oracle_steps = 1000;
};

namespace detail {

inline Matrix rotation2(double angle) {
    Matrix R(2, 2);
    R << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return R;
}

}  // namespace detail

/// Planar instance used by the convergence harness and the demo command.
inline TransportFixture default_transport_fixture() {
    const Matrix R0 = detail::rotation2(0.3), R1 = detail::rotation2(-0.9);
    Matrix D0 = Matrix::Zero(2, 2), D1 = Matrix::Zero(2, 2);
    D0.diagonal() << 1.0, 0.25;
    D1.diagonal() << 9.0, 0.5 / 3.0;
    Vector m1(2);
    m1 << 1.0, 0.5;
    Matrix A0(2, 2);
    A0 << 0.5, 0.3, 0.3, -0.4;
    Vector a0(2);
    a0 << 0.2, -0.1;
    TransportFixture f{GaussianMeasure(Vector::Zero(2), R0 * D0 * R0.transpose()),
                       GaussianMeasure(m1, R1 * D1 * R1.transpose()), AffineTangent(a0, A0), 2000, {}};
    // wide kernel: close to a low-degree polynomial basis, where affine gradients live
    f.projection.method = ProjectionMethod::rff;
    f.projection.kernel = {KernelFamily::rbf, 50.0, 2.5};
    f.projection.lambda = 1e-13;
    f.projection.n_features = 256;
    return f;
}

/// Weighted RMS distance between the scheme's output and the closed-form
/// transported field, one row per seed, one column per N.
inline Matrix transport_errors(const TransportFixture& fx, const std::vector<int>& Ns,
                               const std::vector<std::uint64_t>& seeds, const SolverConfig& solver = {}) {
    const AffineTangent exact = gaussian_parallel_transport(fx.source, fx.target, fx.tangent, fx.oracle_steps);
    const Matrix B = brenier_matrix(fx.source.cov(), fx.target.cov());
    Matrix err(static_cast<Index>(seeds.size()), static_cast<Index>(Ns.size()));
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        const PointCloud nu = sample_moment_matched(fx.source, fx.n_samples, seeds[s]);
        Matrix Y = (nu.points().rowwise() - fx.source.mean().transpose()) * B;
        Y.rowwise() += fx.target.mean().transpose();
        const PointCloud mu = nu.with_points(std::move(Y));
        const TangentField v(nu, fx.tangent.evaluate(nu.points(), fx.source.mean()));
        const Coupling plan = optimal_coupling(nu, mu, solver);
        const TangentField u = log_map(nu, mu, plan);
        for (std::size_t k = 0; k < Ns.size(); ++k) {
            const GeodesicDiscretization geo{nu, u, plan, Ns[k]};
            ProjectionConfig proj = fx.projection;
            proj.seed = mix_seed(seeds[s], 0x9E);
            const TangentField out = wpt_approx(geo, v, proj, fx.every);
            const Matrix truth = exact.evaluate(out.anchor().points(), fx.target.mean());
            err(static_cast<Index>(s), static_cast<Index>(k)) = weighted_l2(out.vectors() - truth, nu.weights());
        }
    }
    return err;
}

struct ErrorCurveRow {
    int N;
    double mean_l2_error;
    double stddev;
};

inline std::vector<ErrorCurveRow> transport_error_curve(const TransportFixture& fx, const std::vector<int>& Ns,
                                                        const std::vector<std::uint64_t>& seeds,
                                                        const SolverConfig& solver = {}) {
    const Matrix err = transport_errors(fx, Ns, seeds, solver);
    std::vector<ErrorCurveRow> rows;
    for (std::size_t k = 0; k < Ns.size(); ++k) {
        const Vector col = err.col(static_cast<Index>(k));
        const double mean = col.mean();
        const double var = col.size() > 1 ? (col.array() - mean).square().sum() / static_cast<double>(col.size() - 1) : 0.0;
        rows.push_back({Ns[k], mean, std::sqrt(var)});
    }
    return rows;
}

}  // namespace wpt
