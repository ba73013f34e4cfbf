#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "support.hpp"
#include "wpt/gaussian.hpp"
#include "wpt/helmholtz/projection.hpp"

using namespace wpt;

namespace {

const std::vector<KernelSpec> kKernels = {
    {KernelFamily::rbf, 0.8, 2.5},
    {KernelFamily::matern, 1.3, 1.5},
    {KernelFamily::matern, 0.7, 2.5},
};

Vector vec(std::initializer_list<double> v) {
    Vector x(static_cast<Index>(v.size()));
    Index k = 0;
    for (double e : v) x(k++) = e;
    return x;
}

// d/dy K by central differences of the kernel value.
Vector fd_grad2(const KernelSpec& s, const Vector& x, const Vector& y, double h = 1e-5) {
    Vector g(y.size());
    for (Index k = 0; k < y.size(); ++k) {
        Vector yp = y, ym = y;
        yp(k) += h;
        ym(k) -= h;
        g(k) = (kernel_value(s, x, yp) - kernel_value(s, x, ym)) / (2 * h);
    }
    return g;
}

// Rotation about the origin in the first two coordinates. For a rotationally
// symmetric density this field is divergence free, so it is L2-orthogonal to
// every gradient field.
Matrix rotation_field(const Matrix& X) {
    Matrix V = Matrix::Zero(X.rows(), X.cols());
    V.col(0) = -X.col(1);
    V.col(1) = X.col(0);
    return V;
}

double wnorm(const Matrix& V, const Vector& w) { return weighted_l2(V, w); }

double winner(const Matrix& A, const Matrix& B, const Vector& w) {
    return (A.cwiseProduct(B).rowwise().sum().transpose() * w)(0);
}

PointCloud gaussian_cloud(Index n, Index d, std::uint64_t seed) {
    return sample(GaussianMeasure(Vector::Zero(d), Matrix::Identity(d, d)), n, seed);
}

}  // namespace

TEST(Kernel, DerivativesMatchFiniteDifferences) {
    const Vector x = vec({0.3, -0.4, 0.9}), y = vec({-0.2, 0.5, 0.1});
    for (const auto& s : kKernels) {
        const KernelDerivatives kd = kernel_derivatives(s, x, y);
        EXPECT_NEAR(kd.K, kernel_value(s, x, y), 0.0);
        EXPECT_LE((kd.grad2 - fd_grad2(s, x, y)).cwiseAbs().maxCoeff(), 1e-8);
        const double h = 1e-5;
        for (Index k = 0; k < 3; ++k) {
            Vector yp = y, ym = y, xp = x, xm = x;
            yp(k) += h;
            ym(k) -= h;
            xp(k) += h;
            xm(k) -= h;
            const Vector hcol = (kernel_derivatives(s, x, yp).grad2 - kernel_derivatives(s, x, ym).grad2) / (2 * h);
            const Vector ccol = (kernel_derivatives(s, xp, y).grad2 - kernel_derivatives(s, xm, y).grad2) / (2 * h);
            EXPECT_LE((kd.hess2.col(k) - hcol).cwiseAbs().maxCoeff(), 1e-7);
            EXPECT_LE((kd.cross.row(k).transpose() - ccol).cwiseAbs().maxCoeff(), 1e-7);
        }
    }
}

TEST(Kernel, SymmetricWithUnitDiagonal) {
    const Vector x = vec({1.0, 2.0}), y = vec({-0.5, 0.25});
    for (const auto& s : kKernels) {
        EXPECT_DOUBLE_EQ(kernel_value(s, x, y), kernel_value(s, y, x));
        EXPECT_DOUBLE_EQ(kernel_value(s, x, x), 1.0);
        const KernelDerivatives kd = kernel_derivatives(s, x, x);
        EXPECT_LE(kd.grad2.norm(), 0.0);
        EXPECT_LE((kd.hess2 - kd.hess2.transpose()).norm(), 0.0);
    }
}

TEST(Kernel, KnownRbfValue) {
    const KernelSpec s{KernelFamily::rbf, 2.0, 2.5};
    EXPECT_NEAR(kernel_value(s, vec({0.0}), vec({2.0})), std::exp(-0.5), 1e-15);
}

TEST(Kernel, KnownMaternValues) {
    const double r = 0.9, a = 1.3;
    const double s3 = std::sqrt(3.0) * r / a, s5 = std::sqrt(5.0) * r / a;
    EXPECT_NEAR(kernel_value({KernelFamily::matern, a, 1.5}, vec({0.0}), vec({r})), (1 + s3) * std::exp(-s3), 1e-15);
    EXPECT_NEAR(kernel_value({KernelFamily::matern, a, 2.5}, vec({0.0}), vec({r})),
                (1 + s5 + s5 * s5 / 3.0) * std::exp(-s5), 1e-15);
}

TEST(Kernel, InvalidSpecsAreConfigErrors) {
    EXPECT_THROW((KernelSpec{KernelFamily::rbf, 0.0, 2.5}.validate()), ConfigError);
    EXPECT_THROW((KernelSpec{KernelFamily::matern, 1.0, 0.5}.validate()), ConfigError);
}

TEST(ExactProjection, ModelGradientIsMinusGramTimesCoefficients) {
    const Matrix X = wpt::testing::random_points(12, 2, 1);
    const Matrix V = wpt::testing::random_points(12, 2, 2);
    for (const auto& s : kKernels) {
        const auto model = fit_exact(X, V, s, 0.05);
        // Gram of gradient features from kernel_derivatives: cross(x_i, x_j)
        Matrix G(24, 24);
        for (Index i = 0; i < 12; ++i)
            for (Index j = 0; j < 12; ++j)
                G.block(i * 2, j * 2, 2, 2) = kernel_derivatives(s, X.row(i).transpose(), X.row(j).transpose()).cross;
        const Vector out = -G * model.coefficients;
        const Matrix grad = model.gradient(X);
        for (Index i = 0; i < 12; ++i)
            EXPECT_LE((grad.row(i).transpose() - model.offset - out.segment(i * 2, 2)).norm(), 1e-12);
    }
}

TEST(ExactProjection, CoefficientsMinimizeTheObjective) {
    const Matrix X = wpt::testing::random_points(10, 2, 3);
    const Matrix V = wpt::testing::random_points(10, 2, 4);
    Vector w(10);
    w << 0.05, 0.15, 0.1, 0.1, 0.05, 0.2, 0.05, 0.1, 0.1, 0.1;
    const KernelSpec s{KernelFamily::rbf, 1.0, 2.5};
    const double lambda = 0.01;
    const auto model = fit_exact(X, V, s, lambda, &w);
    Matrix G(20, 20);
    for (Index i = 0; i < 10; ++i)
        for (Index j = 0; j < 10; ++j)
            G.block(i * 2, j * 2, 2, 2) = kernel_derivatives(s, X.row(i).transpose(), X.row(j).transpose()).cross;
    Vector ws(20), v(20);
    for (Index i = 0; i < 10; ++i) {
        ws.segment(i * 2, 2).setConstant(w(i));
        v.segment(i * 2, 2) = V.row(i).transpose();
    }
    const auto J = [&](const Vector& c, const Vector& beta) {
        Vector r = -G * c - v;
        for (Index i = 0; i < 10; ++i) r.segment(i * 2, 2) += beta;
        return r.cwiseProduct(ws).dot(r) + lambda * c.dot(G * c);
    };
    const double j0 = J(model.coefficients, model.offset);
    EXPECT_NEAR(j0, exact_objective(G, model.coefficients, model.offset, v, ws, lambda), 1e-12);
    Rng rng(9);
    for (int k = 0; k < 50; ++k) {
        const Vector dir = rng.normal_matrix(20, 1), db = rng.normal_matrix(2, 1);
        for (double h : {1e-3, 1e-1}) {
            EXPECT_GE(J(model.coefficients + h * dir, model.offset), j0 - 1e-14);
            EXPECT_GE(J(model.coefficients, model.offset + h * db), j0 - 1e-14);
            EXPECT_GE(J(model.coefficients + h * dir, model.offset + h * db), j0 - 1e-14);
        }
    }
    EXPECT_LE(model.normal_residual, 1e-6);
}

TEST(ExactProjection, TinyRidgeInterpolatesTheSamples) {
    const Matrix X = wpt::testing::random_points(15, 2, 5);
    const Matrix V = wpt::testing::random_points(15, 2, 6);
    const auto model = fit_exact(X, V, {KernelFamily::rbf, 0.5, 2.5}, 1e-10);
    EXPECT_LE((model.gradient(X) - V).norm(), 1e-4 * V.norm());
}

TEST(ExactProjection, ConstantFieldIsReproducedExactly) {
    const Matrix X = wpt::testing::random_points(30, 3, 8);
    Vector w = Vector::LinSpaced(30, 1.0, 3.0);
    w /= w.sum();
    Matrix V(30, 3);
    V.rowwise() = Eigen::RowVector3d(0.7, -1.3, 1e-3);
    for (double lambda : {1e-12, 1e-3, 10.0}) {
        const auto model = fit_exact(X, V, KernelSpec{}, lambda, &w);
        EXPECT_EQ(model.gradient(X), V);
        EXPECT_EQ(model.gradient(wpt::testing::random_points(5, 3, 9)), V.topRows(5));
    }
}

TEST(ExactProjection, SystemSizeGuard) {
    const Matrix X = Matrix::Zero(11, 2);
    EXPECT_THROW(fit_exact(X, X, KernelSpec{}, 0.1, nullptr, 20), ConfigError);
    EXPECT_THROW(fit_exact(X, X, KernelSpec{}, 0.0), ConfigError);
}

TEST(ExactProjection, LargerRidgeShrinksTheOutput) {
    const PointCloud P = gaussian_cloud(80, 2, 7);
    const Matrix V = P.points().array().square().matrix() + rotation_field(P.points());
    double prev_norm = std::numeric_limits<double>::infinity(), prev_fit = -1.0;
    for (double lambda : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
        const auto model = fit_exact(P.points(), V, KernelSpec{}, lambda, &P.weights());
        const Matrix out = model.gradient(P.points());
        const double fit = wnorm(out - V, P.weights());
        const Matrix kernel_part = out.rowwise() - model.offset.transpose();
        const double rkhs = -model.coefficients.dot(detail::stack_rows(kernel_part));  // c^T G c
        EXPECT_LE(rkhs, prev_norm * (1 + 1e-9));
        EXPECT_GE(fit, prev_fit * (1 - 1e-9));
        prev_norm = rkhs;
        prev_fit = fit;
    }
}

TEST(RandomFeatures, ZeroWeightsGiveZeroField) {
    RFFModel m = draw_features(KernelSpec{}, 3, 64, 1);
    EXPECT_EQ(m.gradient(wpt::testing::random_points(5, 3, 2)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(RandomFeatures, GradientMatchesFiniteDifferenceOfPotential) {
    RFFModel m = draw_features(KernelSpec{}, 2, 32, 3);
    Rng rng(4);
    m.theta = rng.normal_matrix(32, 1);
    const Matrix X = wpt::testing::random_points(4, 2, 5);
    const double h = 1e-6;
    const Matrix g = m.gradient(X);
    for (Index k = 0; k < 2; ++k) {
        Matrix Xp = X, Xm = X;
        Xp.col(k).array() += h;
        Xm.col(k).array() -= h;
        const Vector fd = (m.features(Xp) * m.theta - m.features(Xm) * m.theta) / (2 * h);
        EXPECT_LE((g.col(k) - fd).cwiseAbs().maxCoeff(), 1e-7);
    }
}

TEST(RandomFeatures, InnerProductsApproximateTheKernel) {
    const Index D = 4096;
    const Matrix X = wpt::testing::random_points(6, 3, 11, 0.7);
    for (const auto& s : kKernels) {
        const RFFModel m = draw_features(s, 3, D, 12);
        const Matrix F = m.features(X);
        const Matrix approx = F * F.transpose();
        double worst = 0.0;
        for (Index i = 0; i < 6; ++i)
            for (Index j = 0; j < 6; ++j)
                worst = std::max(worst, std::abs(approx(i, j) - kernel_value(s, X.row(i).transpose(), X.row(j).transpose())));
        EXPECT_LE(worst, 5.0 / std::sqrt(static_cast<double>(D)));
    }
}

TEST(RandomFeatures, ConstantFieldIsReproducedExactly) {
    const Matrix X = wpt::testing::random_points(300, 2, 8);
    Matrix V(300, 2);
    V.rowwise() = Eigen::RowVector2d(-2.5, 0.1);
    for (double lambda : {1e-13, 1e-3, 10.0}) {
        const auto model = fit_rff(X, V, KernelSpec{}, lambda, 128, 4);
        EXPECT_EQ(model.gradient(X), V);
    }
}

TEST(RandomFeatures, SameSeedSameModel) {
    const PointCloud P = gaussian_cloud(50, 2, 1);
    const Matrix V = rotation_field(P.points());
    const auto a = fit_rff(P.points(), V, KernelSpec{}, 0.1, 64, 7);
    const auto b = fit_rff(P.points(), V, KernelSpec{}, 0.1, 64, 7);
    EXPECT_EQ(a.theta, b.theta);
}

TEST(Projection, GradientFieldsHaveZeroLoopIntegral) {
    const PointCloud P = gaussian_cloud(200, 2, 21);
    const Matrix V = P.points().array().square().matrix() + 2.0 * rotation_field(P.points());
    const auto exact = fit_exact(P.points(), V, KernelSpec{}, 1e-3, &P.weights());
    const auto rff = fit_rff(P.points(), V, KernelSpec{}, 1e-3, 256, 3, &P.weights());
    // trapezoid rule around the unit circle
    const int m = 4000;
    Matrix C(m, 2), T(m, 2);
    for (int k = 0; k < m; ++k) {
        const double t = 2.0 * std::numbers::pi * k / m;
        C.row(k) << std::cos(t), std::sin(t);
        T.row(k) << -std::sin(t), std::cos(t);
    }
    const double dt = 2.0 * std::numbers::pi / m;
    for (const Matrix& g : {Matrix(exact.gradient(C)), Matrix(rff.gradient(C))}) {
        const double loop = g.cwiseProduct(T).sum() * dt;
        const double scale = g.rowwise().norm().sum() * dt;
        EXPECT_LE(std::abs(loop), 1e-8 * scale);
    }
    // the input field itself circulates
    EXPECT_GT(std::abs(rotation_field(C).cwiseProduct(T).sum() * dt), 1.0);
}

TEST(Projection, QuadraticPotentialIsRecovered) {
    // v = grad(x^T A x / 2) = A x. A quadratic is not in the rbf kernel's native
    // space, so the default ridge shrinks it heavily; a light ridge recovers it.
    const Index n = 2000;
    const PointCloud P = gaussian_cloud(n, 2, 31);
    Matrix A(2, 2);
    A << 1.0, 0.4, 0.4, -0.5;
    const TangentField v(P, P.points() * A);
    ProjectionConfig cfg;
    cfg.lambda = 1e-8;
    ASSERT_EQ(cfg.resolved_method(n), ProjectionMethod::rff);
    const TangentField out = helmholtz_project(P, v, cfg);
    EXPECT_LE(wnorm(out.vectors() - v.vectors(), P.weights()), 0.05 * v.norm());
}

TEST(Projection, RotationFieldIsRemoved) {
    const PointCloud P = gaussian_cloud(1000, 2, 41);
    const TangentField v(P, rotation_field(P.points()));
    ProjectionConfig cfg;
    const TangentField out = helmholtz_project(P, v, cfg);
    EXPECT_LE(out.norm(), 0.1 * v.norm());
}

TEST(Projection, ResidualIsOrthogonalToGradients) {
    const PointCloud P = gaussian_cloud(1500, 2, 51);
    const Matrix& X = P.points();
    Matrix V = rotation_field(X);
    V.col(0) += X.col(0).array().cube().matrix();
    V.col(1) += X.col(0).array().sin().matrix();
    const TangentField v(P, V);
    ProjectionConfig cfg;
    cfg.lambda = 1e-6;
    const TangentField out = helmholtz_project(P, v, cfg);
    const Matrix R = V - out.vectors();
    // gradients of ten unrelated smooth functions
    std::vector<Matrix> tests;
    for (int k = 1; k <= 5; ++k) {
        Matrix g(X.rows(), 2);
        g.col(0) = (k * 0.5 * X.col(0).array()).cos() * k * 0.5;
        g.col(1).setZero();
        tests.push_back(g);
        Matrix h(X.rows(), 2);
        h.col(0) = X.col(1) * static_cast<double>(k) * 0.1;
        h.col(1) = X.col(0).array() * static_cast<double>(k) * 0.1 + X.col(1).array() * 0.2 * (k % 2);
        tests.push_back(h);
    }
    for (const Matrix& g : tests)
        EXPECT_LE(std::abs(winner(R, g, P.weights())), 1e-2 * v.norm() * wnorm(g, P.weights()));
}

TEST(Projection, NearlyIdempotentWithSmallRidge) {
    // gradient of sin(x0) + x0 x1 / 2. The ridge makes the operator a shrinkage,
    // so inputs with a large rotational part repeat only to about 1e-2.
    const PointCloud P = gaussian_cloud(1000, 2, 61);
    const Matrix& X = P.points();
    Matrix V(X.rows(), 2);
    V.col(0) = (X.col(0).array().cos() + 0.5 * X.col(1).array()).matrix();
    V.col(1) = 0.5 * X.col(0);
    const TangentField v(P, V);
    ProjectionConfig cfg;
    cfg.method = ProjectionMethod::rff;
    cfg.lambda = 1e-10;
    const TangentField once = helmholtz_project(P, v, cfg);
    const TangentField twice = helmholtz_project(P, once, cfg);
    EXPECT_LE(wnorm(twice.vectors() - once.vectors(), P.weights()), 1e-3 * once.norm());
}

TEST(Projection, RandomFeaturesTrackTheExactSolve) {
    const PointCloud P = gaussian_cloud(300, 2, 71);
    const Matrix& X = P.points();
    Matrix V = 0.5 * rotation_field(X);
    V.col(0) += X.col(0).array().tanh().matrix();
    V.col(1) += 0.3 * X.col(1);
    const TangentField v(P, V);
    ProjectionConfig ce, cr;
    ce.method = ProjectionMethod::exact;
    cr.method = ProjectionMethod::rff;
    ce.lambda = cr.lambda = 1e-3;
    const double err_exact = wnorm(helmholtz_project(P, v, ce).vectors() - V, P.weights());
    const double err_rff = wnorm(helmholtz_project(P, v, cr).vectors() - V, P.weights());
    EXPECT_LE(err_rff, 2.0 * err_exact);
    EXPECT_LE(err_exact, 2.0 * err_rff);
}

TEST(Projection, DefaultsResolveByProblemSize) {
    ProjectionConfig cfg;
    EXPECT_EQ(cfg.resolved_method(500), ProjectionMethod::exact);
    EXPECT_EQ(cfg.resolved_method(501), ProjectionMethod::rff);
    EXPECT_NEAR(cfg.resolved_lambda(1000), 0.1, 1e-15);
    EXPECT_EQ(cfg.kernel.family, KernelFamily::rbf);
    EXPECT_EQ(cfg.kernel.lengthscale, 1.0);
    EXPECT_EQ(cfg.n_features, 1024);
}

TEST(Projection, FieldMustBeAnchoredAtTheCloud) {
    const PointCloud P = gaussian_cloud(10, 2, 1), Q = gaussian_cloud(10, 2, 2);
    EXPECT_THROW(helmholtz_project(P, TangentField::zero(Q), ProjectionConfig{}), InputError);
}
