#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "wpt/transport.hpp"

using namespace wpt;

namespace {

PointCloud cloud(const GaussianMeasure& g, Index n, std::uint64_t seed) { return sample(g, n, seed); }

GaussianMeasure standard(Index d) { return {Vector::Zero(d), Matrix::Identity(d, d)}; }

GaussianMeasure stretched() {
    Matrix S(2, 2);
    S << 3.0, 0.8, 0.8, 0.6;
    Vector m(2);
    m << 2.0, -1.0;
    return {m, S};
}

ProjectionConfig wide_rff() { return default_transport_fixture().projection; }

}  // namespace

TEST(Geodesic, EndpointsAreTheInputClouds) {
    const PointCloud nu = cloud(standard(2), 60, 1), mu = cloud(stretched(), 60, 2);
    const GeodesicDiscretization geo = build_geodesic(nu, mu, 4);
    EXPECT_EQ(geo.support(0), nu);
    // a permutation plan sends every atom onto a target atom
    const Matrix end = geo.support(4).points();
    for (Index i = 0; i < end.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < mu.size(); ++j) best = std::min(best, (end.row(i) - mu.points().row(j)).norm());
        EXPECT_LE(best, 1e-12);
    }
    EXPECT_NEAR(w2_distance(geo.support(4), mu), 0.0, 1e-10);
    EXPECT_THROW(geo.support(5), InputError);
}

TEST(Geodesic, ConstantSpeed) {
    const PointCloud nu = cloud(standard(2), 300, 3), mu = cloud(stretched(), 300, 4);
    const GeodesicDiscretization geo = build_geodesic(nu, mu, 8);
    const double total = w2_distance(nu, mu);
    for (int i : {0, 2, 5})
        for (int j : {6, 8}) {
            const double expect = (j - i) / 8.0 * total;
            EXPECT_NEAR(w2_distance(geo.support(i), geo.support(j)), expect, 0.05 * expect);
        }
}

TEST(Geodesic, RejectsZeroSubsteps) {
    const PointCloud nu = cloud(standard(2), 5, 1);
    EXPECT_THROW(build_geodesic(nu, nu, 0), InputError);
}

TEST(WptApprox, FinalOnlyCarriesTheVectorsUnchanged) {
    const PointCloud nu = cloud(standard(2), 80, 5), mu = cloud(stretched(), 80, 6);
    const TangentField v(nu, wpt::testing::random_points(80, 2, 7));
    const TangentField a = wpt_approx(nu, mu, v, 1, wide_rff(), ProjectEvery::final_only);
    const TangentField b = wpt_approx(nu, mu, v, 17, wide_rff(), ProjectEvery::final_only);
    EXPECT_EQ(a.vectors(), v.vectors());
    EXPECT_EQ(a.vectors(), b.vectors());
    EXPECT_EQ(a.anchor(), b.anchor());
}

TEST(WptApprox, SameMeasureOnlyProjects) {
    const PointCloud nu = cloud(standard(2), 200, 8);
    Matrix V = nu.points();
    V.col(0) *= 2.0;
    const TangentField v(nu, V);
    ProjectionConfig proj = wide_rff();
    proj.seed = 4;
    const TangentField out = wpt_approx(nu, nu, v, 1, proj);
    EXPECT_LE((out.anchor().points() - nu.points()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((out.vectors() - helmholtz_project(nu, v, proj).vectors()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(WptApprox, ConstantFieldIsPreserved) {
    const PointCloud nu = cloud(standard(2), 400, 9), mu = cloud(stretched(), 400, 10);
    Vector c(2);
    c << 0.7, -1.3;
    const TangentField v(nu, c.transpose().replicate(400, 1));
    for (int N : {1, 4, 16}) {
        const TangentField out = wpt_approx(nu, mu, v, N, wide_rff());
        EXPECT_EQ((out.vectors().rowwise() - c.transpose()).cwiseAbs().maxCoeff(), 0.0) << "N = " << N;
    }
}

TEST(WptApprox, FieldMustBeAnchoredAtTheBase) {
    const PointCloud nu = cloud(standard(2), 10, 1), mu = cloud(standard(2), 10, 2);
    const GeodesicDiscretization geo = build_geodesic(nu, mu, 2);
    EXPECT_THROW(wpt_approx(geo, TangentField::zero(mu), wide_rff()), InputError);
}

TEST(TransportToTarget, ReanchorsOnTheTargetSupport) {
    const PointCloud nu = cloud(standard(2), 50, 11), mu = cloud(stretched(), 50, 12);
    const GeodesicDiscretization geo = build_geodesic(nu, mu, 3);
    const TangentField v(nu, wpt::testing::random_points(50, 2, 13));
    const TangentField out = transport_to_target(geo, mu, v, wide_rff(), ProjectEvery::final_only);
    EXPECT_EQ(out.anchor(), mu);
    // final-only with a permutation plan just relabels the input vectors
    for (const auto& e : geo.plan.entries())
        EXPECT_LE((out.vectors().row(e.col) - v.vectors().row(e.row)).norm(), 1e-14);
}

TEST(ErrorCurve, SingleStepRowAndDeterminism) {
    TransportFixture fx = default_transport_fixture();
    fx.n_samples = 300;
    fx.oracle_steps = 200;
    const auto a = transport_error_curve(fx, {1, 4}, {0, 1});
    const auto b = transport_error_curve(fx, {1, 4}, {0, 1});
    ASSERT_EQ(a.size(), 2u);
    EXPECT_EQ(a[0].N, 1);
    EXPECT_GT(a[0].mean_l2_error, 0.0);
    EXPECT_GE(a[0].stddev, 0.0);
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].mean_l2_error, b[k].mean_l2_error);
        EXPECT_EQ(a[k].stddev, b[k].stddev);
    }
}

TEST(ErrorCurve, MoreSubstepsReduceTheError) {
    TransportFixture fx = default_transport_fixture();
    fx.n_samples = 600;
    const Matrix err = transport_errors(fx, {1, 16}, {3});
    EXPECT_LT(err(0, 1), 0.5 * err(0, 0));
}

TEST(ErrorCurve, FinalOnlyErrorDoesNotDependOnSubsteps) {
    TransportFixture fx = default_transport_fixture();
    fx.n_samples = 200;
    fx.oracle_steps = 100;
    fx.every = ProjectEvery::final_only;
    const Matrix err = transport_errors(fx, {1, 8, 32}, {5});
    EXPECT_EQ(err(0, 0), err(0, 1));
    EXPECT_EQ(err(0, 0), err(0, 2));
}
