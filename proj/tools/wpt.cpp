// wpt: command-line front end for the transport library.
//
//   wpt sweep|reconstruct|transport|gaussian-demo|helmholtz
//       [--config PATH] [--seed U64] [--threads K] [--dry-run] [--output DIR]
//
// Every run writes resolved_config.json (the config with all defaults filled
// in) next to its outputs. Exit codes: 0 ok, 2 config, 3 input data,
// 4 numerical failure.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wpt/io/csv.hpp"
#include "wpt/io/json.hpp"
#include "wpt/wpt.hpp"

namespace fs = std::filesystem;
using wpt::io::ConfigNode;
using wpt::io::Json;

namespace {

struct GlobalFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    bool dry_run = false;
    std::string output;
    // command inputs that may also come from the config
    std::string control, initial, truth, source, target, field, points;
};

/// Shared envelope {"seed", "solver", "output_dir"}.
struct Envelope {
    std::uint64_t seed = 0;
    wpt::SolverConfig solver;
    std::string output_dir = "wpt_out";
};

Json load_config(const GlobalFlags& g) {
    if (g.config_path.empty()) return Json::object();
    return wpt::io::read_json(g.config_path);
}

Envelope read_envelope(ConfigNode& root, const GlobalFlags& g) {
    Envelope e;
    e.seed = root.get<std::uint64_t>("seed", 0);
    if (g.seed) e.seed = *g.seed;
    e.solver = wpt::io::solver_from_json(root.child("solver"));
    e.output_dir = root.get<std::string>("output_dir", e.output_dir);
    if (!g.output.empty()) e.output_dir = g.output;
    return e;
}

Json envelope_json(const Envelope& e) {
    return {{"seed", e.seed}, {"solver", wpt::io::to_json(e.solver)}, {"output_dir", e.output_dir}};
}

// Path from a flag, else from the config; required.
std::string input_path(ConfigNode& root, const std::string& key, const std::string& flag) {
    std::string v = root.get<std::string>(key, "");
    if (!flag.empty()) v = flag;
    if (v.empty()) throw wpt::ConfigError(root.where(key) + ": required (config key or command-line flag)");
    return v;
}

/// Prints the resolved config for --dry-run, otherwise creates the output
/// directory and records the config there. Returns false on a dry run.
bool begin_run(const Json& resolved, const Envelope& env, const GlobalFlags& g) {
    if (g.dry_run) {
        std::cout << resolved.dump(2) << '\n';
        return false;
    }
    fs::create_directories(env.output_dir);
    wpt::io::write_json((fs::path(env.output_dir) / "resolved_config.json").string(), resolved);
    return true;
}

std::string out_path(const Envelope& env, const std::string& name) { return (fs::path(env.output_dir) / name).string(); }

std::vector<std::uint64_t> u64_list(ConfigNode& node, const std::string& key, std::vector<std::uint64_t> fallback) {
    if (!node.has(key)) return fallback;
    const Json& j = node.raw(key);
    if (!j.is_array() || j.empty()) throw wpt::ConfigError(node.where(key) + ": expected a nonempty array");
    std::vector<std::uint64_t> out;
    for (const auto& v : j) out.push_back(ConfigNode::as<std::uint64_t>(v, node.where(key)));
    return out;
}

std::vector<int> int_list(ConfigNode& node, const std::string& key, std::vector<int> fallback) {
    if (!node.has(key)) return fallback;
    const Json& j = node.raw(key);
    if (!j.is_array() || j.empty()) throw wpt::ConfigError(node.where(key) + ": expected a nonempty array");
    std::vector<int> out;
    for (const auto& v : j) out.push_back(ConfigNode::as<int>(v, node.where(key)));
    return out;
}

Json methods_json(const std::vector<wpt::ReconstructionMethod>& ms) {
    Json j = Json::array();
    for (auto m : ms) j.push_back(wpt::method_name(m));
    return j;
}

// ---- sweep ----------------------------------------------------------------

int cmd_sweep(const GlobalFlags& g) {
    const Json cfg = load_config(g);
    ConfigNode root(cfg, "$");
    const Envelope env = read_envelope(root, g);
    wpt::SweepConfig sc;
    sc.base_seed = env.seed;
    {
        const auto dims = int_list(root, "dims", {2});
        sc.dims.clear();
        for (int d : dims) {
            if (d < 1) throw wpt::ConfigError("$.dims: dimensions must be >= 1");
            sc.dims.push_back(d);
        }
    }
    sc.T = root.get<int>("T", sc.T);
    sc.n_samples = root.get<wpt::Index>("n_samples", sc.n_samples);
    if (sc.n_samples < 2) throw wpt::ConfigError("$.n_samples: must be >= 2");
    if (root.has("methods")) {
        const Json& j = root.raw("methods");
        if (!j.is_array() || j.empty()) throw wpt::ConfigError("$.methods: expected a nonempty array");
        sc.methods.clear();
        for (const auto& m : j) sc.methods.push_back(wpt::parse_method(ConfigNode::as<std::string>(m, "$.methods")));
    }
    sc.seeds = u64_list(root, "seeds", sc.seeds);
    const std::string mode = root.get<std::string>("mode", "mean-and-cov");
    if (mode == "mean-and-cov")
        sc.mode = wpt::SystemMode::mean_and_cov;
    else if (mode == "mean-only")
        sc.mode = wpt::SystemMode::mean_only;
    else
        throw wpt::ConfigError("$.mode: expected \"mean-only\" or \"mean-and-cov\"");
    const std::string metric = root.get<std::string>("metric", "gaussian");
    if (metric == "gaussian")
        sc.metric = wpt::SweepMetric::gaussian;
    else if (metric == "empirical")
        sc.metric = wpt::SweepMetric::empirical;
    else
        throw wpt::ConfigError("$.metric: expected \"gaussian\" or \"empirical\"");
    sc.generator = wpt::io::generator_from_json(root.child("generator"));
    sc.reconstruction.N = root.get<int>("N", sc.reconstruction.N);
    if (sc.reconstruction.N < 1) throw wpt::ConfigError("$.N: must be >= 1");
    sc.reconstruction.gauss_steps = root.get<int>("gauss_steps", sc.reconstruction.gauss_steps);
    sc.reconstruction.projection = wpt::io::projection_from_json(root.child("projection"), env.seed);
    sc.reconstruction.solver = env.solver;
    root.finish();

    Json dims = Json::array();
    for (auto d : sc.dims) dims.push_back(d);
    Json resolved = envelope_json(env);
    resolved["dims"] = dims;
    resolved["T"] = sc.T;
    resolved["n_samples"] = sc.n_samples;
    resolved["methods"] = methods_json(sc.methods);
    resolved["seeds"] = sc.seeds;
    resolved["mode"] = mode;
    resolved["metric"] = metric;
    resolved["generator"] = wpt::io::to_json(sc.generator);
    resolved["N"] = sc.reconstruction.N;
    resolved["gauss_steps"] = sc.reconstruction.gauss_steps;
    resolved["projection"] = wpt::io::to_json(sc.reconstruction.projection);
    if (!begin_run(resolved, env, g)) return 0;

    const auto rows = wpt::dimension_sweep(sc, g.threads);
    {
        std::ofstream out(out_path(env, "results.csv"), std::ios::binary);
        out << "d,step,method,seed,w2\n";
        for (const auto& r : rows)
            out << r.d << ',' << r.step << ',' << wpt::method_name(r.method) << ',' << r.seed << ','
                << wpt::io::format_double(r.w2) << '\n';
    }
    // pivot: one row per (d, step), one column per method, mean over seeds
    std::map<std::pair<wpt::Index, std::size_t>, std::map<int, std::pair<double, int>>> cells;
    for (const auto& r : rows) {
        auto& c = cells[{r.d, r.step}][static_cast<int>(r.method)];
        c.first += r.w2;
        c.second += 1;
    }
    std::ofstream out(out_path(env, "summary.csv"), std::ios::binary);
    out << "d,step";
    for (auto m : sc.methods) out << ',' << wpt::method_name(m);
    out << '\n';
    for (const auto& [key, by_method] : cells) {
        out << key.first << ',' << key.second;
        for (auto m : sc.methods) {
            const auto& c = by_method.at(static_cast<int>(m));
            out << ',' << wpt::io::format_double(c.first / c.second);
        }
        out << '\n';
    }
    return 0;
}

// ---- reconstruct ----------------------------------------------------------

int cmd_reconstruct(const GlobalFlags& g) {
    const Json cfg = load_config(g);
    ConfigNode root(cfg, "$");
    const Envelope env = read_envelope(root, g);
    const std::string control_dir = input_path(root, "control_dir", g.control);
    const std::string initial = input_path(root, "initial", g.initial);
    std::string truth_dir = root.get<std::string>("truth_dir", "");
    if (!g.truth.empty()) truth_dir = g.truth;
    wpt::ReconstructionConfig rc;
    rc.method = wpt::parse_method(root.get<std::string>("method", wpt::method_name(rc.method)));
    rc.N = root.get<int>("N", rc.N);
    if (rc.N < 1) throw wpt::ConfigError("$.N: must be >= 1");
    rc.gauss_steps = root.get<int>("gauss_steps", rc.gauss_steps);
    rc.projection = wpt::io::projection_from_json(root.child("projection"), env.seed);
    rc.solver = env.solver;
    rc.seed = env.seed;
    root.finish();

    Json resolved = envelope_json(env);
    resolved["control_dir"] = control_dir;
    resolved["initial"] = initial;
    resolved["truth_dir"] = truth_dir.empty() ? Json(nullptr) : Json(truth_dir);
    resolved["method"] = wpt::method_name(rc.method);
    resolved["N"] = rc.N;
    resolved["gauss_steps"] = rc.gauss_steps;
    resolved["projection"] = wpt::io::to_json(rc.projection);
    if (!begin_run(resolved, env, g)) return 0;

    const wpt::Trajectory control = wpt::io::read_trajectory(control_dir);
    const wpt::PointCloud mu1 = wpt::io::read_point_cloud(initial);
    if (mu1.dim() != control.dim())
        throw wpt::InputError(initial + ": dimension " + std::to_string(mu1.dim()) + " differs from the control's " +
                              std::to_string(control.dim()));
    const wpt::Trajectory predicted = wpt::reconstruct(control, mu1, rc);
    wpt::io::write_trajectory(out_path(env, "predicted"), predicted);
    if (!truth_dir.empty()) {
        const wpt::Trajectory truth = wpt::io::read_trajectory(truth_dir);
        const auto rows = wpt::evaluate(predicted, truth, rc.solver);
        std::ofstream out(out_path(env, "eval.csv"), std::ios::binary);
        out << "step,w2,cumulative_w2\n";
        for (const auto& r : rows)
            out << r.step << ',' << wpt::io::format_double(r.w2) << ',' << wpt::io::format_double(r.cumulative) << '\n';
    }
    return 0;
}

// ---- transport ------------------------------------------------------------

int cmd_transport(const GlobalFlags& g) {
    const Json cfg = load_config(g);
    ConfigNode root(cfg, "$");
    const Envelope env = read_envelope(root, g);
    const std::string source = input_path(root, "source", g.source);
    const std::string target = input_path(root, "target", g.target);
    const std::string field = input_path(root, "field", g.field);
    const int N = root.get<int>("N", wpt::kDefaultSubsteps);
    if (N < 1) throw wpt::ConfigError("$.N: must be >= 1");
    const wpt::ProjectEvery every =
        wpt::io::project_every_from_string(root.get<std::string>("project_every", "each-step"), "$.project_every");
    const wpt::ProjectionConfig proj = wpt::io::projection_from_json(root.child("projection"), env.seed);
    root.finish();

    Json resolved = envelope_json(env);
    resolved["source"] = source;
    resolved["target"] = target;
    resolved["field"] = field;
    resolved["N"] = N;
    resolved["project_every"] = wpt::io::to_string(every);
    resolved["projection"] = wpt::io::to_json(proj);
    if (!begin_run(resolved, env, g)) return 0;

    const wpt::PointCloud nu = wpt::io::read_point_cloud(source);
    const wpt::PointCloud mu = wpt::io::read_point_cloud(target);
    const wpt::Matrix V = wpt::io::read_field(field);
    if (V.rows() != nu.size() || V.cols() != nu.dim())
        throw wpt::InputError(field + ": field is " + std::to_string(V.rows()) + "x" + std::to_string(V.cols()) +
                              ", source cloud is " + std::to_string(nu.size()) + "x" + std::to_string(nu.dim()));
    const wpt::GeodesicDiscretization geo = wpt::build_geodesic(nu, mu, N, env.solver);
    const wpt::TangentField w = wpt::transport_to_target(geo, mu, wpt::TangentField(nu, V), proj, every);
    auto header = wpt::io::numbered_header("x", mu.dim());
    for (const auto& h : wpt::io::numbered_header("v", mu.dim())) header.push_back(h);
    wpt::Matrix M(mu.size(), 2 * mu.dim());
    M << mu.points(), w.vectors();
    wpt::io::write_csv(out_path(env, "transported.csv"), header, M);
    return 0;
}

// ---- gaussian-demo --------------------------------------------------------

int cmd_gaussian_demo(const GlobalFlags& g) {
    const Json cfg = load_config(g);
    ConfigNode root(cfg, "$");
    const Envelope env = read_envelope(root, g);
    wpt::TransportFixture fx = wpt::default_transport_fixture();
    if (root.has("source")) fx.source = wpt::io::gaussian_from_json(root.child("source"));
    if (root.has("target")) fx.target = wpt::io::gaussian_from_json(root.child("target"));
    if (root.has("tangent")) fx.tangent = wpt::io::affine_from_json(root.child("tangent"));
    if (fx.source.dim() != fx.target.dim() || fx.tangent.offset().size() != fx.source.dim())
        throw wpt::InputError("source, target and tangent must share one dimension");
    fx.oracle_steps = root.get<int>("steps", fx.oracle_steps);
    if (fx.oracle_steps < 1) throw wpt::ConfigError("$.steps: must be >= 1");
    ConfigNode conv = root.child("convergence");
    fx.n_samples = conv.get<wpt::Index>("n_samples", fx.n_samples);
    const std::vector<int> Ns = int_list(conv, "N", {1, 2, 4, 8, 16, 32});
    for (int n : Ns)
        if (n < 1) throw wpt::ConfigError("$.convergence.N: entries must be >= 1");
    const std::vector<std::uint64_t> seeds = u64_list(conv, "seeds", {0, 1, 2});
    fx.every = wpt::io::project_every_from_string(conv.get<std::string>("project_every", "each-step"),
                                                  "$.convergence.project_every");
    if (conv.has("projection")) fx.projection = wpt::io::projection_from_json(conv.child("projection"), env.seed);
    conv.finish();
    root.finish();

    Json resolved = envelope_json(env);
    resolved["source"] = wpt::io::to_json(fx.source);
    resolved["target"] = wpt::io::to_json(fx.target);
    resolved["tangent"] = wpt::io::to_json(fx.tangent);
    resolved["steps"] = fx.oracle_steps;
    resolved["convergence"] = {{"n_samples", fx.n_samples},
                               {"N", Ns},
                               {"seeds", seeds},
                               {"project_every", wpt::io::to_string(fx.every)},
                               {"projection", wpt::io::to_json(fx.projection)}};
    if (!begin_run(resolved, env, g)) return 0;

    // A_t at quarter times (nearest integration step)
    const std::vector<double> ts{0.0, 0.25, 0.5, 0.75, 1.0};
    std::map<int, double> wanted;
    for (double t : ts) wanted[static_cast<int>(std::lround(t * fx.oracle_steps))] = t;
    Json samples = Json::array();
    const wpt::AffineTangent v1 = wpt::gaussian_parallel_transport(
        fx.source, fx.target, fx.tangent, fx.oracle_steps, [&](int k, const wpt::Matrix& A) {
            if (wanted.count(k))
                samples.push_back({{"t", static_cast<double>(k) / fx.oracle_steps}, {"linear", wpt::io::to_json(A)}});
        });
    Json report = {{"w2", wpt::gaussian_w2(fx.source, fx.target)},
                   {"brenier_matrix", wpt::io::to_json(wpt::brenier_matrix(fx.source.cov(), fx.target.cov()))},
                   {"transported", wpt::io::to_json(v1)},
                   {"linear_path", samples}};
    wpt::io::write_json(out_path(env, "report.json"), report);

    const auto curve = wpt::transport_error_curve(fx, Ns, seeds, env.solver);
    std::ofstream out(out_path(env, "error_curve.csv"), std::ios::binary);
    out << "N,mean_l2_error,stddev\n";
    for (const auto& r : curve)
        out << r.N << ',' << wpt::io::format_double(r.mean_l2_error) << ',' << wpt::io::format_double(r.stddev) << '\n';
    return 0;
}

// ---- helmholtz ------------------------------------------------------------

int cmd_helmholtz(const GlobalFlags& g) {
    const Json cfg = load_config(g);
    ConfigNode root(cfg, "$");
    const Envelope env = read_envelope(root, g);
    const std::string points = input_path(root, "points", g.points);
    const std::string field = input_path(root, "field", g.field);
    const wpt::ProjectionConfig proj = wpt::io::projection_from_json(root.child("projection"), env.seed);
    root.finish();

    Json resolved = envelope_json(env);
    resolved["points"] = points;
    resolved["field"] = field;
    resolved["projection"] = wpt::io::to_json(proj);
    if (!begin_run(resolved, env, g)) return 0;

    const wpt::PointCloud P = wpt::io::read_point_cloud(points);
    const wpt::Matrix V = wpt::io::read_field(field);
    if (V.rows() != P.size() || V.cols() != P.dim())
        throw wpt::InputError(field + ": field is " + std::to_string(V.rows()) + "x" + std::to_string(V.cols()) +
                              ", points are " + std::to_string(P.size()) + "x" + std::to_string(P.dim()));
    const wpt::TangentField v(P, V);
    const wpt::TangentField pv = wpt::helmholtz_project(P, v, proj);
    const auto header = wpt::io::numbered_header("v", P.dim());
    wpt::io::write_csv(out_path(env, "projected.csv"), header, pv.vectors());
    wpt::io::write_csv(out_path(env, "residual.csv"), header, V - pv.vectors());
    return 0;
}

int exit_code(wpt::ErrorKind k) {
    switch (k) {
        case wpt::ErrorKind::config: return 2;
        case wpt::ErrorKind::input: return 3;
        case wpt::ErrorKind::degenerate_plan:
        case wpt::ErrorKind::solver:
        case wpt::ErrorKind::numerical: return 4;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parallel transport of tangent fields along empirical Wasserstein geodesics"};
    app.require_subcommand(1);
    GlobalFlags g;
    std::uint64_t seed = 0;
    const auto add_globals = [&](CLI::App* sub) {
        sub->add_option("--config", g.config_path, "JSON config file");
        sub->add_option("--seed", seed, "64-bit seed (overrides the config)");
        sub->add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--dry-run", g.dry_run, "print the resolved config and exit");
        sub->add_option("--output", g.output, "output directory (overrides output_dir)");
    };
    auto* sweep = app.add_subcommand("sweep", "dimension sweep of the reconstruction methods");
    auto* recon = app.add_subcommand("reconstruct", "reconstruct a counterfactual trajectory");
    recon->add_option("--control", g.control, "control trajectory directory (manifest.json)");
    recon->add_option("--initial", g.initial, "initial counterfactual point cloud CSV");
    recon->add_option("--truth", g.truth, "true trajectory directory for evaluation");
    auto* transport = app.add_subcommand("transport", "transport a tangent field along the geodesic");
    transport->add_option("--source", g.source, "source point cloud CSV");
    transport->add_option("--target", g.target, "target point cloud CSV");
    transport->add_option("--field", g.field, "field CSV aligned with the source");
    auto* demo = app.add_subcommand("gaussian-demo", "closed-form Gaussian transport and convergence curve");
    auto* helm = app.add_subcommand("helmholtz", "project a sampled field onto gradient fields");
    helm->add_option("--points", g.points, "point cloud CSV");
    helm->add_option("--field", g.field, "field CSV aligned with the points");
    for (auto* sub : {sweep, recon, transport, demo, helm}) add_globals(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    for (auto* sub : {sweep, recon, transport, demo, helm})
        if (sub->parsed() && sub->count("--seed")) g.seed = seed;

    try {
        if (sweep->parsed()) return cmd_sweep(g);
        if (recon->parsed()) return cmd_reconstruct(g);
        if (transport->parsed()) return cmd_transport(g);
        if (demo->parsed()) return cmd_gaussian_demo(g);
        if (helm->parsed()) return cmd_helmholtz(g);
    } catch (const wpt::Error& e) {
        std::cerr << "wpt: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "wpt: internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
