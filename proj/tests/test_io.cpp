#include <gtest/gtest.h>

#include <filesystem>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>

#include "support.hpp"
#include "wpt/io/csv.hpp"
#include "wpt/io/json.hpp"

using namespace wpt;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("wpt_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(path(name), std::ios::binary) << text;
        return path(name);
    }

    fs::path dir_;
};

using CsvIo = TempDir;
using ConfigIo = TempDir;
using TrajectoryIo = TempDir;

}  // namespace

TEST(FormatDouble, SeventeenSignificantDigits) {
    EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(io::format_double(2.0), "2");
    Rng rng(3);
    for (int k = 0; k < 1000; ++k) {
        const double x = rng.normal() * std::pow(10.0, rng.uniform(-300.0, 300.0));
        EXPECT_EQ(std::strtod(io::format_double(x).c_str(), nullptr), x);
    }
}

TEST_F(CsvIo, PointCloudRoundTripIsBitExact) {
    Matrix X = wpt::testing::random_points(25, 3, 1);
    X(0, 0) = std::numeric_limits<double>::denorm_min();
    X(1, 1) = -std::numeric_limits<double>::max();
    const PointCloud P = PointCloud::uniform(X);
    io::write_point_cloud(path("p.csv"), P);
    EXPECT_EQ(io::read_point_cloud(path("p.csv")), P);
}

TEST_F(CsvIo, WeightedCloudKeepsItsWeights) {
    Vector w(3);
    w << 0.2, 0.3, 0.5;
    const PointCloud P(wpt::testing::random_points(3, 2, 2), w);
    io::write_point_cloud(path("w.csv"), P);
    const io::CsvTable t = io::read_csv(path("w.csv"));
    EXPECT_EQ(t.header, (std::vector<std::string>{"x0", "x1", "weight"}));
    EXPECT_EQ(io::read_point_cloud(path("w.csv")), P);
}

TEST_F(CsvIo, HeaderIsOptional) {
    const auto a = io::read_point_cloud(write("a.csv", "1,2\n3,4\n"));
    const auto b = io::read_point_cloud(write("b.csv", "x0,x1\r\n1,2\r\n\r\n3,4\r\n"));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), 2);
}

TEST_F(CsvIo, MalformedFilesAreInputErrors) {
    EXPECT_THROW(io::read_csv(write("ragged.csv", "1,2\n3\n")), InputError);
    EXPECT_THROW(io::read_csv(write("text.csv", "x0\n1\nabc\n")), InputError);
    EXPECT_THROW(io::read_csv(write("empty.csv", "x0,x1\n")), InputError);
    EXPECT_THROW(io::read_csv(write("trailing.csv", "1,2,\n")), InputError);
    EXPECT_THROW(io::read_csv(path("missing.csv")), InputError);
    EXPECT_THROW(io::read_point_cloud(write("badw.csv", "x0,weight\n1,0.5\n2,0.6\n")), InputError);
    EXPECT_THROW(io::read_point_cloud(write("nan.csv", "1,nan\n")), InputError);
}

TEST_F(CsvIo, RaggedRowErrorNamesTheLine) {
    try {
        io::read_csv(write("r.csv", "x0,x1\n1,2\n3,4,5\n"));
        FAIL() << "expected an InputError";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
    }
}

TEST_F(ConfigIo, UnknownKeysAreRejected) {
    const io::Json j = io::Json::parse(R"({"seed": 3, "sede": 4})");
    io::ConfigNode node(j, "$");
    EXPECT_EQ(node.get<std::uint64_t>("seed", 0), 3u);
    EXPECT_THROW(node.finish(), ConfigError);
}

TEST_F(ConfigIo, NestedUnknownKeysAreRejected) {
    const io::Json j = io::Json::parse(R"({"family": "rbf", "lengthscale": 1.0, "smothness": 2.5})");
    EXPECT_THROW(io::kernel_from_json(io::ConfigNode(j, "$.projection.kernel")), ConfigError);
}

TEST_F(ConfigIo, WrongTypesAreConfigErrors) {
    const io::Json j = io::Json::parse(R"({"N": "twenty", "seed": -1, "x": 1.5})");
    io::ConfigNode node(j, "$");
    EXPECT_THROW(node.get<int>("N", 20), ConfigError);
    EXPECT_THROW(node.get<std::uint64_t>("seed", 0), ConfigError);
    EXPECT_THROW(node.get<int>("x", 0), ConfigError);
    EXPECT_THROW(static_cast<void>(node.raw("absent")), ConfigError);
}

TEST_F(ConfigIo, ProjectionRoundTripsThroughJson) {
    const io::Json j = io::Json::parse(
        R"({"method": "exact", "kernel": {"family": "matern", "lengthscale": 0.5, "smoothness": 1.5},
            "lambda": 0.01, "n_features": 64})");
    const ProjectionConfig p = io::projection_from_json(io::ConfigNode(j, "$"), 9);
    EXPECT_EQ(p.method, ProjectionMethod::exact);
    EXPECT_EQ(p.kernel.family, KernelFamily::matern);
    EXPECT_EQ(p.kernel.smoothness, 1.5);
    EXPECT_EQ(*p.lambda, 0.01);
    EXPECT_EQ(p.n_features, 64);
    const io::Json back = io::to_json(p);
    const ProjectionConfig q = io::projection_from_json(io::ConfigNode(back, "$"), 9);
    EXPECT_EQ(io::to_json(q), back);
}

TEST_F(ConfigIo, LambdaAutoMeansTheSizeRule) {
    const io::Json j = io::Json::parse(R"({"lambda": "auto"})");
    const ProjectionConfig p = io::projection_from_json(io::ConfigNode(j, "$"));
    EXPECT_FALSE(p.lambda.has_value());
    const io::Json bad = io::Json::parse(R"({"lambda": "big"})");
    EXPECT_THROW(io::projection_from_json(io::ConfigNode(bad, "$")), ConfigError);
}

TEST_F(ConfigIo, ParseErrorsCarryTheRequestedKind) {
    const std::string p = write("bad.json", "{ \"seed\": ");
    EXPECT_THROW(io::read_json(p), ConfigError);
    EXPECT_THROW(io::read_json(p, ErrorKind::input), InputError);
    EXPECT_THROW(io::read_json(path("absent.json")), ConfigError);
}

TEST_F(ConfigIo, GaussianFromJsonValidates) {
    const io::Json good = io::Json::parse(R"({"mean": [0, 1], "cov": [[2, 0.5], [0.5, 1]]})");
    const GaussianMeasure g = io::gaussian_from_json(io::ConfigNode(good, "$"));
    EXPECT_EQ(g.cov()(0, 1), 0.5);
    const io::Json bad = io::Json::parse(R"({"mean": [0, 1], "cov": [[1, 2], [2, 1]]})");
    EXPECT_THROW(io::gaussian_from_json(io::ConfigNode(bad, "$")), Error);
}

TEST_F(TrajectoryIo, RoundTripThroughManifest) {
    std::vector<PointCloud> steps;
    for (std::uint64_t s = 0; s < 3; ++s) steps.push_back(PointCloud::uniform(wpt::testing::random_points(7, 2, s)));
    const Trajectory t(steps, {0.0, 0.5, 2.0});
    io::write_trajectory(path("traj"), t);
    EXPECT_TRUE(fs::exists(path("traj/step_000.csv")));
    const Trajectory back = io::read_trajectory(path("traj"));
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(back.times(), t.times());
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back[i], t[i]);
}

TEST_F(TrajectoryIo, ManifestErrorsAreInputErrors) {
    fs::create_directories(path("m"));
    write("m/a.csv", "1,2\n");
    write("m/b.csv", "1,2,3\n");
    write("m/manifest.json", R"({"steps": ["a.csv"], "extra": 1})");
    EXPECT_THROW(io::read_trajectory(path("m")), InputError);
    write("m/manifest.json", R"({"steps": ["a.csv", "b.csv"]})");
    EXPECT_THROW(io::read_trajectory(path("m")), InputError);
    write("m/manifest.json", R"({"steps": []})");
    EXPECT_THROW(io::read_trajectory(path("m")), InputError);
    EXPECT_THROW(io::read_trajectory(path("nowhere")), InputError);
}
