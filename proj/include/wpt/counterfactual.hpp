#pragma once

// Counterfactual trajectory reconstruction: each step of the control
// trajectory is turned into a tangent field, carried over to the current
// counterfactual state, and applied there through the exp map.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "wpt/gaussian.hpp"
#include "wpt/helmholtz/projection.hpp"
#include "wpt/ot/maps.hpp"
#include "wpt/random.hpp"
#include "wpt/transport.hpp"
#include "wpt/types.hpp"

namespace wpt {

/// Time-ordered point clouds of one dimension. Times default to 0..T-1.
class Trajectory {
public:
    Trajectory() = default;

    explicit Trajectory(std::vector<PointCloud> steps, std::vector<double> times = {})
        : steps_(std::move(steps)), times_(std::move(times)) {
        if (steps_.empty()) throw InputError("trajectory needs at least one step");
        for (std::size_t i = 1; i < steps_.size(); ++i)
            if (steps_[i].dim() != steps_[0].dim())
                throw InputError("trajectory step " + std::to_string(i) + " has dimension " +
                                 std::to_string(steps_[i].dim()) + ", expected " + std::to_string(steps_[0].dim()));
        if (times_.empty()) {
            for (std::size_t i = 0; i < steps_.size(); ++i) times_.push_back(static_cast<double>(i));
        } else {
            if (times_.size() != steps_.size()) throw InputError("trajectory times do not match its steps");
            for (std::size_t i = 1; i < times_.size(); ++i)
                if (!(times_[i] > times_[i - 1])) throw InputError("trajectory times must be strictly increasing");
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return steps_.size(); }
    [[nodiscard]] Index dim() const { return steps_.front().dim(); }
    [[nodiscard]] const PointCloud& operator[](std::size_t i) const { return steps_.at(i); }
    [[nodiscard]] const std::vector<PointCloud>& steps() const noexcept { return steps_; }
    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }

private:
    std::vector<PointCloud> steps_;
    std::vector<double> times_;
};

enum class ReconstructionMethod { wpt, wpt_minus, mean_shift, brenier, gauss_pt };

inline const char* method_name(ReconstructionMethod m) {
    switch (m) {
        case ReconstructionMethod::wpt: return "wpt";
        case ReconstructionMethod::wpt_minus: return "wpt_minus";
        case ReconstructionMethod::mean_shift: return "mean_shift";
        case ReconstructionMethod::brenier: return "brenier";
        case ReconstructionMethod::gauss_pt: return "gauss_pt";
    }
    return "?";
}

inline ReconstructionMethod parse_method(const std::string& s) {
    for (auto m : {ReconstructionMethod::wpt, ReconstructionMethod::wpt_minus, ReconstructionMethod::mean_shift,
                   ReconstructionMethod::brenier, ReconstructionMethod::gauss_pt})
        if (s == method_name(m)) return m;
    throw ConfigError("unknown reconstruction method '" + s + "'");
}

struct ReconstructionConfig {
    ReconstructionMethod method = ReconstructionMethod::wpt_minus;
    int N = kDefaultSubsteps;
    ProjectionConfig projection;
    SolverConfig solver;
    std::uint64_t seed = 0;
    int gauss_steps = 1000;  ///< RK4 steps of the closed-form transport in gauss_pt
};

/// Velocity of the control between consecutive steps.
inline TangentField control_velocity(const PointCloud& from, const PointCloud& to, const SolverConfig& solver = {}) {
    return log_map(from, to, solver);
}

namespace detail {

// Index of the nearest row of X to y (lowest index on ties).
inline Index nearest_row(const Matrix& X, const Eigen::RowVectorXd& y) {
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < X.rows(); ++i) {
        const double dd = (X.row(i) - y).squaredNorm();
        if (dd < best_d) {
            best_d = dd;
            best = i;
        }
    }
    return best;
}

inline PointCloud advance(const PointCloud& control, const PointCloud& next_control, const PointCloud& state,
                          const ReconstructionConfig& cfg, std::size_t step) {
    switch (cfg.method) {
        case ReconstructionMethod::mean_shift: {
            Matrix X = state.points();
            X.rowwise() += (next_control.mean() - control.mean()).transpose();
            return state.with_points(std::move(X));
        }
        case ReconstructionMethod::brenier: {
            // the control's own map, extended to the counterfactual points by
            // nearest control atom; no transport between the two supports
            const TangentField v = control_velocity(control, next_control, cfg.solver);
            Matrix X = state.points();
            for (Index k = 0; k < X.rows(); ++k)
                X.row(k) += v.vectors().row(nearest_row(control.points(), state.points().row(k)));
            return state.with_points(std::move(X));
        }
        case ReconstructionMethod::gauss_pt: {
            const GaussianMeasure g0 = fit_gaussian(control);
            const GaussianMeasure g1 = fit_gaussian(next_control);
            const GaussianMeasure gs = fit_gaussian(state);
            const AffineTangent w = gaussian_parallel_transport(g0, gs, gaussian_log_map(g0, g1), cfg.gauss_steps);
            return state.with_points(state.points() + w.evaluate(state.points(), gs.mean()));
        }
        case ReconstructionMethod::wpt:
        case ReconstructionMethod::wpt_minus: {
            const TangentField v = control_velocity(control, next_control, cfg.solver);
            const GeodesicDiscretization geo = build_geodesic(control, state, cfg.N, cfg.solver);
            ProjectionConfig proj = cfg.projection;
            proj.seed = mix_seed(cfg.seed, step);
            const ProjectEvery every =
                cfg.method == ReconstructionMethod::wpt ? ProjectEvery::each_step : ProjectEvery::final_only;
            return exp_map(state, transport_to_target(geo, state, v, proj, every));
        }
    }
    throw ConfigError("unhandled reconstruction method");
}

}  // namespace detail

/// Predicted counterfactual states, starting from mu1 and advancing once per
/// control step.
inline Trajectory reconstruct(const Trajectory& control, const PointCloud& mu1, const ReconstructionConfig& cfg) {
    if (cfg.N < 1) throw ConfigError("reconstruction needs N >= 1");
    if (mu1.dim() != control.dim())
        throw InputError("initial condition has dimension " + std::to_string(mu1.dim()) + ", control has " +
                         std::to_string(control.dim()));
    std::vector<PointCloud> out{mu1};
    for (std::size_t i = 0; i + 1 < control.size(); ++i) {
        out.push_back(detail::advance(control[i], control[i + 1], out.back(), cfg, i));
        log::debug(std::string(method_name(cfg.method)) + ": step " + std::to_string(i + 1) + " done");
    }
    return Trajectory(std::move(out), control.times());
}

struct EvalRow {
    std::size_t step;
    double w2;
    double cumulative;
};

/// Per-step W2 between prediction and truth from step 1 on (step 0 is the
/// shared initial condition), with the running sum.
inline std::vector<EvalRow> evaluate(const Trajectory& predicted, const Trajectory& truth, const SolverConfig& solver = {}) {
    if (predicted.size() != truth.size()) throw InputError("predicted and true trajectories differ in length");
    if (predicted.dim() != truth.dim()) throw InputError("predicted and true trajectories differ in dimension");
    std::vector<EvalRow> rows;
    double acc = 0.0;
    for (std::size_t i = 1; i < predicted.size(); ++i) {
        const double w = w2_distance(predicted[i], truth[i], solver);
        acc += w;
        rows.push_back({i, w, acc});
    }
    return rows;
}

/// Same table against Gaussian truth: each predicted cloud is moment-fitted and
/// compared in closed form.
inline std::vector<EvalRow> evaluate_gaussian(const Trajectory& predicted, const std::vector<GaussianMeasure>& truth) {
    if (predicted.size() != truth.size()) throw InputError("predicted and true trajectories differ in length");
    std::vector<EvalRow> rows;
    double acc = 0.0;
    for (std::size_t i = 1; i < predicted.size(); ++i) {
        const double w = gaussian_w2(fit_gaussian(predicted[i]), truth[i]);
        acc += w;
        rows.push_back({i, w, acc});
    }
    return rows;
}

enum class SweepMetric { gaussian, empirical };

struct SweepConfig {
    std::vector<Index> dims{2};
    int T = 6;
    Index n_samples = 5000;
    std::vector<ReconstructionMethod> methods{ReconstructionMethod::wpt_minus, ReconstructionMethod::mean_shift,
                                              ReconstructionMethod::brenier, ReconstructionMethod::gauss_pt};
    std::vector<std::uint64_t> seeds{0, 1, 2};
    SystemMode mode = SystemMode::mean_and_cov;
    GeneratorConfig generator;
    ReconstructionConfig reconstruction;
    SweepMetric metric = SweepMetric::gaussian;
    std::uint64_t base_seed = 0;
};

struct SweepRow {
    Index d;
    std::size_t step;
    ReconstructionMethod method;
    std::uint64_t seed;
    double w2;
};

/// Sampled instance of the synthetic system for one (d, seed) cell.
struct SweepInstance {
    ParallelSystem system;
    Trajectory control;
    PointCloud initial;
};

inline SweepInstance make_sweep_instance(const SweepConfig& cfg, Index d, std::uint64_t seed) {
    const std::uint64_t cell = mix_seed(mix_seed(cfg.base_seed, static_cast<std::uint64_t>(d)), seed);
    SweepInstance inst;
    inst.system = simulate_parallel_system(d, cfg.T, cfg.mode, mix_seed(cell, 0), cfg.generator);
    std::vector<PointCloud> steps;
    for (std::size_t i = 0; i < inst.system.control.size(); ++i)
        steps.push_back(sample(inst.system.control[i], cfg.n_samples, mix_seed(cell, 100 + i)));
    inst.control = Trajectory(std::move(steps));
    inst.initial = sample(inst.system.counterfactual.front(), cfg.n_samples, mix_seed(cell, 1));
    return inst;
}

/// Runs every (d, seed, method) cell; rows come out in that nesting order
/// whatever the thread count, each cell being computed independently.
inline std::vector<SweepRow> dimension_sweep(const SweepConfig& cfg, unsigned threads = 1) {
    if (cfg.dims.empty() || cfg.methods.empty() || cfg.seeds.empty())
        throw ConfigError("sweep needs nonempty dims, methods and seeds");
    if (cfg.T < 2) throw ConfigError("sweep needs T >= 2");
    struct Cell {
        Index d;
        std::uint64_t seed;
        ReconstructionMethod method;
    };
    std::vector<Cell> cells;
    for (Index d : cfg.dims)
        for (std::uint64_t s : cfg.seeds)
            for (auto m : cfg.methods) cells.push_back({d, s, m});

    std::vector<std::vector<SweepRow>> results(cells.size());
    std::vector<std::exception_ptr> errors(cells.size());
    const auto run_cell = [&](std::size_t c) {
        try {
            const Cell& cell = cells[c];
            const SweepInstance inst = make_sweep_instance(cfg, cell.d, cell.seed);
            ReconstructionConfig rc = cfg.reconstruction;
            rc.method = cell.method;
            rc.seed = mix_seed(cfg.base_seed, cell.seed);
            const Trajectory pred = reconstruct(inst.control, inst.initial, rc);
            std::vector<EvalRow> ev;
            if (cfg.metric == SweepMetric::gaussian) {
                ev = evaluate_gaussian(pred, inst.system.counterfactual);
            } else {
                std::vector<PointCloud> truth;
                const std::uint64_t cs = mix_seed(mix_seed(cfg.base_seed, static_cast<std::uint64_t>(cell.d)), cell.seed);
                for (std::size_t i = 0; i < inst.system.counterfactual.size(); ++i)
                    truth.push_back(sample(inst.system.counterfactual[i], cfg.n_samples, mix_seed(cs, 1000 + i)));
                ev = evaluate(pred, Trajectory(std::move(truth)), rc.solver);
            }
            for (const auto& r : ev) results[c].push_back({cell.d, r.step, cell.method, cell.seed, r.w2});
            log::info("sweep cell d=" + std::to_string(cell.d) + " seed=" + std::to_string(cell.seed) + " " +
                      method_name(cell.method) + " done");
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };

    const unsigned k = std::max(1u, threads);
    if (k == 1 || cells.size() == 1) {
        for (std::size_t c = 0; c < cells.size(); ++c) run_cell(c);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < k; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t c = t; c < cells.size(); c += k) run_cell(c);
            });
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<SweepRow> rows;
    for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
    return rows;
}

}  // namespace wpt
