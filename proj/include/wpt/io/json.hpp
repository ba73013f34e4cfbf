#pragma once

// JSON documents: Gaussian measures, trajectory manifests and the config
// sections shared by library and CLI. Readers reject keys they do not know.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wpt/counterfactual.hpp"
#include "wpt/errors.hpp"
#include "wpt/gaussian.hpp"
#include "wpt/helmholtz/projection.hpp"
#include "wpt/io/csv.hpp"
#include "wpt/ot/solvers.hpp"
#include "wpt/transport.hpp"

namespace wpt::io {

using Json = nlohmann::json;

/// Object view that records which keys were read; finish() rejects the rest.
class ConfigNode {
public:
    ConfigNode(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {
        if (!j.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    [[nodiscard]] bool has(const std::string& key) {
        used_.insert(key);
        return j_->contains(key) && !(*j_)[key].is_null();
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        if (!has(key)) return fallback;
        return as<T>((*j_)[key], where(key));
    }

    template <class T>
    T require(const std::string& key) {
        if (!has(key)) throw ConfigError(where(key) + ": required key missing");
        return as<T>((*j_)[key], where(key));
    }

    /// Present, non-null value of a required key.
    [[nodiscard]] const Json& raw(const std::string& key) {
        if (!has(key)) throw ConfigError(where(key) + ": required key missing");
        return (*j_)[key];
    }

    /// Child object; an absent key gives an empty object.
    [[nodiscard]] ConfigNode child(const std::string& key) {
        used_.insert(key);
        if (!j_->contains(key) || (*j_)[key].is_null()) return {empty(), where(key)};
        return {(*j_)[key], where(key)};
    }

    [[nodiscard]] std::string where(const std::string& key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto& item : j_->items())
            if (!used_.count(item.key())) throw ConfigError(where(item.key()) + ": unknown key");
    }

    template <class T>
    static T as(const Json& v, const std::string& where) {
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ConfigError(where + ": expected a number");
            } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
                if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
                if constexpr (std::is_unsigned_v<T>)
                    if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
                        throw ConfigError(where + ": expected a nonnegative integer");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError(where + ": expected a string");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ConfigError(where + ": expected true or false");
            }
            return v.get<T>();
        } catch (const Json::exception& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }

private:
    static const Json& empty() {
        static const Json e = Json::object();
        return e;
    }

    const Json* j_;
    std::string path_;
    std::set<std::string> used_;
};

/// Parses a JSON file; failures are config errors, or input errors for data
/// files such as trajectory manifests.
inline Json read_json(const std::string& path, ErrorKind kind = ErrorKind::config) {
    const auto fail = [&](const std::string& msg) -> Json {
        if (kind == ErrorKind::input) throw InputError(msg);
        throw ConfigError(msg);
    };
    std::ifstream in(path);
    if (!in) return fail("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        return fail(path + ": " + e.what());
    }
}

inline void write_json(const std::string& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << j.dump(2) << '\n';
}

// ---- matrices -------------------------------------------------------------

inline Vector vector_from_json(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a nonempty array of numbers");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Index>(k)) = ConfigNode::as<double>(j[k], where);
    return v;
}

inline Matrix matrix_from_json(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected an array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Matrix M(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols || cols == 0) throw ConfigError(where + ": ragged or empty rows");
        for (std::size_t c = 0; c < cols; ++c)
            M(static_cast<Index>(r), static_cast<Index>(c)) = ConfigNode::as<double>(j[r][c], where);
    }
    return M;
}

inline Json to_json(const Vector& v) {
    Json j = Json::array();
    for (Index k = 0; k < v.size(); ++k) j.push_back(v(k));
    return j;
}

inline Json to_json(const Matrix& M) {
    Json j = Json::array();
    for (Index r = 0; r < M.rows(); ++r) {
        Json row = Json::array();
        for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        j.push_back(row);
    }
    return j;
}

// ---- gaussian documents ---------------------------------------------------

/// {"mean": [...], "cov": [[...]]}; invalid measures surface as input errors.
inline GaussianMeasure gaussian_from_json(ConfigNode node) {
    const Vector m = vector_from_json(node.raw("mean"), node.where("mean"));
    const Matrix S = matrix_from_json(node.raw("cov"), node.where("cov"));
    node.finish();
    return {m, S};
}

inline Json to_json(const GaussianMeasure& g) { return {{"mean", to_json(g.mean())}, {"cov", to_json(g.cov())}}; }

inline AffineTangent affine_from_json(ConfigNode node) {
    const Vector a = vector_from_json(node.raw("offset"), node.where("offset"));
    const Matrix A = matrix_from_json(node.raw("linear"), node.where("linear"));
    node.finish();
    return {a, A};
}

inline Json to_json(const AffineTangent& v) { return {{"offset", to_json(v.offset())}, {"linear", to_json(v.linear())}}; }

// ---- config sections ------------------------------------------------------

inline SolverConfig solver_from_json(ConfigNode node) {
    SolverConfig c;
    const std::string m = node.get<std::string>("method", "exact");
    if (m == "exact")
        c.method = SolverMethod::exact;
    else if (m == "sinkhorn")
        c.method = SolverMethod::sinkhorn;
    else
        throw ConfigError(node.where("method") + ": expected \"exact\" or \"sinkhorn\"");
    c.epsilon = node.get<double>("epsilon", c.epsilon);
    c.max_iter = node.get<int>("max_iter", c.max_iter);
    c.tol = node.get<double>("tol", c.tol);
    if (!(c.epsilon > 0.0)) throw ConfigError(node.where("epsilon") + ": must be > 0");
    if (c.max_iter < 1) throw ConfigError(node.where("max_iter") + ": must be >= 1");
    if (!(c.tol > 0.0)) throw ConfigError(node.where("tol") + ": must be > 0");
    node.finish();
    return c;
}

inline Json to_json(const SolverConfig& c) {
    return {{"method", c.method == SolverMethod::exact ? "exact" : "sinkhorn"},
            {"epsilon", c.epsilon},
            {"max_iter", c.max_iter},
            {"tol", c.tol}};
}

inline KernelSpec kernel_from_json(ConfigNode node) {
    KernelSpec k;
    const std::string fam = node.get<std::string>("family", "rbf");
    if (fam == "rbf")
        k.family = KernelFamily::rbf;
    else if (fam == "matern")
        k.family = KernelFamily::matern;
    else
        throw ConfigError(node.where("family") + ": expected \"rbf\" or \"matern\"");
    k.lengthscale = node.get<double>("lengthscale", k.lengthscale);
    k.smoothness = node.get<double>("smoothness", k.smoothness);
    node.finish();
    k.validate();
    return k;
}

inline Json to_json(const KernelSpec& k) {
    return {{"family", k.family == KernelFamily::rbf ? "rbf" : "matern"},
            {"lengthscale", k.lengthscale},
            {"smoothness", k.smoothness}};
}

/// {"method": auto|exact|rff, "kernel": {...}, "lambda": number|"auto",
///  "n_features", "seed", "max_exact_system"}
inline ProjectionConfig projection_from_json(ConfigNode node, std::uint64_t default_seed = 0) {
    ProjectionConfig c;
    const std::string m = node.get<std::string>("method", "auto");
    if (m == "auto")
        c.method = ProjectionMethod::automatic;
    else if (m == "exact")
        c.method = ProjectionMethod::exact;
    else if (m == "rff")
        c.method = ProjectionMethod::rff;
    else
        throw ConfigError(node.where("method") + ": expected \"auto\", \"exact\" or \"rff\"");
    c.kernel = kernel_from_json(node.child("kernel"));
    if (node.has("lambda")) {
        const Json& l = node.raw("lambda");
        if (l.is_string()) {
            if (l.get<std::string>() != "auto") throw ConfigError(node.where("lambda") + ": expected a number or \"auto\"");
        } else {
            c.lambda = ConfigNode::as<double>(l, node.where("lambda"));
            if (!(*c.lambda > 0.0)) throw ConfigError(node.where("lambda") + ": must be > 0");
        }
    }
    c.n_features = node.get<Index>("n_features", c.n_features);
    if (c.n_features < 1) throw ConfigError(node.where("n_features") + ": must be >= 1");
    c.seed = node.get<std::uint64_t>("seed", default_seed);
    c.max_exact_system = node.get<Index>("max_exact_system", c.max_exact_system);
    node.finish();
    return c;
}

inline Json to_json(const ProjectionConfig& c) {
    const char* method = c.method == ProjectionMethod::automatic ? "auto"
                         : c.method == ProjectionMethod::exact   ? "exact"
                                                                 : "rff";
    Json j = {{"method", method},
              {"kernel", to_json(c.kernel)},
              {"n_features", c.n_features},
              {"seed", c.seed},
              {"max_exact_system", c.max_exact_system}};
    if (c.lambda)
        j["lambda"] = *c.lambda;
    else
        j["lambda"] = "auto";
    return j;
}

inline GeneratorConfig generator_from_json(ConfigNode node) {
    GeneratorConfig g;
    g.mean_step = node.get<double>("mean_step", g.mean_step);
    g.rotation = node.get<double>("rotation", g.rotation);
    g.scale = node.get<double>("scale", g.scale);
    g.cf_offset = node.get<double>("cf_offset", g.cf_offset);
    g.transport_steps = node.get<int>("transport_steps", g.transport_steps);
    if (!(g.scale > 0.0)) throw ConfigError(node.where("scale") + ": must be > 0");
    if (g.transport_steps < 1) throw ConfigError(node.where("transport_steps") + ": must be >= 1");
    node.finish();
    return g;
}

inline Json to_json(const GeneratorConfig& g) {
    return {{"mean_step", g.mean_step},
            {"rotation", g.rotation},
            {"scale", g.scale},
            {"cf_offset", g.cf_offset},
            {"transport_steps", g.transport_steps}};
}

inline ProjectEvery project_every_from_string(const std::string& s, const std::string& where) {
    if (s == "each-step") return ProjectEvery::each_step;
    if (s == "final-only") return ProjectEvery::final_only;
    throw ConfigError(where + ": expected \"each-step\" or \"final-only\"");
}

inline const char* to_string(ProjectEvery e) { return e == ProjectEvery::each_step ? "each-step" : "final-only"; }

// ---- trajectories ---------------------------------------------------------

/// Directory with manifest.json {"steps": ["a.csv", ...], "times": [...]?}.
inline Trajectory read_trajectory(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    const Json j = read_json((root / "manifest.json").string(), ErrorKind::input);
    if (!j.is_object() || !j.contains("steps") || !j["steps"].is_array() || j["steps"].empty())
        throw InputError(dir + "/manifest.json: expected a nonempty \"steps\" array");
    for (const auto& item : j.items())
        if (item.key() != "steps" && item.key() != "times")
            throw InputError(dir + "/manifest.json: unknown key " + item.key());
    std::vector<PointCloud> steps;
    for (const auto& f : j["steps"]) {
        if (!f.is_string()) throw InputError(dir + "/manifest.json: step entries must be file names");
        const std::string file = (root / f.get<std::string>()).string();
        steps.push_back(read_point_cloud(file));
        if (steps.back().dim() != steps.front().dim())
            throw InputError(file + ": dimension " + std::to_string(steps.back().dim()) + " differs from " +
                             std::to_string(steps.front().dim()) + " of the first step");
    }
    std::vector<double> times;
    if (j.contains("times")) {
        if (!j["times"].is_array()) throw InputError(dir + "/manifest.json: \"times\" must be an array");
        for (const auto& t : j["times"]) {
            if (!t.is_number()) throw InputError(dir + "/manifest.json: times must be numbers");
            times.push_back(t.get<double>());
        }
    }
    return Trajectory(std::move(steps), std::move(times));
}

inline void write_trajectory(const std::string& dir, const Trajectory& traj) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    Json files = Json::array();
    for (std::size_t i = 0; i < traj.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "step_%03zu.csv", i);
        write_point_cloud((fs::path(dir) / name).string(), traj[i]);
        files.push_back(name);
    }
    Json times = Json::array();
    for (double t : traj.times()) times.push_back(t);
    write_json((fs::path(dir) / "manifest.json").string(), {{"steps", files}, {"times", times}});
}

}  // namespace wpt::io
