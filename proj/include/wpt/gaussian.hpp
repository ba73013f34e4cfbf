#pragma once

// Bures-Wasserstein geometry of nondegenerate Gaussians and the closed-form
// parallel transport of affine tangent fields along their geodesics.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "wpt/errors.hpp"
#include "wpt/log.hpp"
#include "wpt/random.hpp"
#include "wpt/types.hpp"

namespace wpt {

inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kEigenFloor = 1e-12;

namespace detail {

inline double asymmetry(const Matrix& A) { return (A - A.transpose()).cwiseAbs().maxCoeff(); }

inline Matrix symmetrize(const Matrix& A) { return 0.5 * (A + A.transpose()); }

// f applied to the spectrum of a symmetric PSD matrix; eigenvalues below
// kEigenFloor * lambda_max are clamped to that floor.
template <class F>
Matrix spectral_apply(const Matrix& S, F f) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(S));
    if (eig.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
    Vector lam = eig.eigenvalues();
    const double floor = kEigenFloor * std::max(lam.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    for (Index i = 0; i < lam.size(); ++i) lam(i) = f(std::max(lam(i), floor));
    const Matrix& U = eig.eigenvectors();
    return symmetrize(U * lam.asDiagonal() * U.transpose());
}

}  // namespace detail

inline Matrix sym_sqrt(const Matrix& S) {
    return detail::spectral_apply(S, [](double x) { return std::sqrt(x); });
}

inline Matrix sym_inv_sqrt(const Matrix& S) {
    return detail::spectral_apply(S, [](double x) { return 1.0 / std::sqrt(x); });
}

class GaussianMeasure {
public:
    GaussianMeasure() = default;

    GaussianMeasure(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
        const Index d = mean_.size();
        if (d < 1) throw InputError("gaussian needs dimension >= 1");
        if (cov_.rows() != d || cov_.cols() != d)
            throw InputError("gaussian covariance is " + std::to_string(cov_.rows()) + "x" +
                             std::to_string(cov_.cols()) + " for a mean of length " + std::to_string(d));
        if (!mean_.allFinite() || !cov_.allFinite()) throw InputError("gaussian parameters must be finite");
        const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
        if (detail::asymmetry(cov_) > kSymmetryTolerance * scale)
            throw InputError("gaussian covariance is not symmetric");
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(cov_, Eigen::EigenvaluesOnly);
        if (!(eig.eigenvalues().minCoeff() > 0.0)) throw InputError("gaussian covariance is not positive definite");
    }

    [[nodiscard]] const Vector& mean() const noexcept { return mean_; }
    [[nodiscard]] const Matrix& cov() const noexcept { return cov_; }
    [[nodiscard]] Index dim() const noexcept { return mean_.size(); }

private:
    Vector mean_;
    Matrix cov_;
};

/// Affine tangent field x -> a + A (x - m) at a Gaussian with mean m.
/// The linear part is kept symmetric.
class AffineTangent {
public:
    AffineTangent() = default;

    AffineTangent(Vector offset, const Matrix& linear) : offset_(std::move(offset)) {
        if (linear.rows() != offset_.size() || linear.cols() != offset_.size())
            throw InputError("affine tangent linear part does not match offset length");
        if (!offset_.allFinite() || !linear.allFinite()) throw InputError("affine tangent must be finite");
        const double asym = detail::asymmetry(linear);
        if (asym > 1e-8) log::warn("affine tangent linear part asymmetric by " + std::to_string(asym) + "; symmetrized");
        linear_ = detail::symmetrize(linear);
    }

    [[nodiscard]] const Vector& offset() const noexcept { return offset_; }
    [[nodiscard]] const Matrix& linear() const noexcept { return linear_; }

    /// Field values at the rows of X, for a base measure with mean m.
    [[nodiscard]] Matrix evaluate(const Matrix& X, const Vector& m) const {
        return (X.rowwise() - m.transpose()) * linear_ + offset_.transpose().replicate(X.rows(), 1);
    }

private:
    Vector offset_;
    Matrix linear_;
};

inline void check_same_dim(const GaussianMeasure& G0, const GaussianMeasure& G1) {
    if (G0.dim() != G1.dim())
        throw InputError("gaussians have dimensions " + std::to_string(G0.dim()) + " and " + std::to_string(G1.dim()));
}

/// Symmetric matrix B of the optimal map x -> m1 + B (x - m0) between centered
/// Gaussians with covariances S0 and S1.
inline Matrix brenier_matrix(const Matrix& S0, const Matrix& S1) {
    // routes validation through the measure type (square, symmetric, SPD)
    const GaussianMeasure g0(Vector::Zero(S0.rows()), S0);
    const GaussianMeasure g1(Vector::Zero(S1.rows()), S1);
    check_same_dim(g0, g1);
    if (S0 == S1) return Matrix::Identity(S0.rows(), S0.cols());
    const Matrix r0 = sym_sqrt(S0);
    const Matrix ir0 = sym_inv_sqrt(S0);
    return detail::symmetrize(ir0 * sym_sqrt(r0 * S1 * r0) * ir0);
}

/// W2 between Gaussians, evaluated as the cost of the optimal affine map:
/// |m0 - m1|^2 + tr((B - I) S0 (B - I)). Algebraically equal to the
/// trace-of-square-roots form but free of its cancellation near S0 = S1.
inline double gaussian_w2(const GaussianMeasure& G0, const GaussianMeasure& G1) {
    check_same_dim(G0, G1);
    const Matrix BmI = brenier_matrix(G0.cov(), G1.cov()) - Matrix::Identity(G0.dim(), G0.dim());
    const double cov_part = (BmI * G0.cov() * BmI).trace();
    return std::sqrt(std::max(0.0, (G0.mean() - G1.mean()).squaredNorm() + cov_part));
}

/// Point at time t of the W2 geodesic: N(m_t, M_t S0 M_t) with M_t = (1-t) I + t B.
inline GaussianMeasure geodesic_point(const GaussianMeasure& G0, const GaussianMeasure& G1, double t) {
    check_same_dim(G0, G1);
    if (!(t >= 0.0 && t <= 1.0)) throw InputError("geodesic time must lie in [0, 1]");
    const Index d = G0.dim();
    const Matrix M = (1.0 - t) * Matrix::Identity(d, d) + t * brenier_matrix(G0.cov(), G1.cov());
    return {(1.0 - t) * G0.mean() + t * G1.mean(), detail::symmetrize(M * G0.cov() * M)};
}

/// Symmetric X with X Q + Q X = R, in the eigenbasis of Q.
inline Matrix solve_lyapunov(const Matrix& Q, const Matrix& R) {
    if (Q.rows() != Q.cols() || R.rows() != Q.rows() || R.cols() != Q.cols())
        throw InputError("lyapunov operands must be square and of equal size");
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(detail::symmetrize(Q));
    if (eig.info() != Eigen::Success) throw NumericalError("lyapunov: eigendecomposition failed");
    const Vector& lam = eig.eigenvalues();
    if (!(lam.minCoeff() > 0.0)) throw NumericalError("lyapunov: Q is not positive definite, no unique solution");
    const Matrix& U = eig.eigenvectors();
    Matrix Rt = U.transpose() * detail::symmetrize(R) * U;
    for (Index i = 0; i < Rt.rows(); ++i)
        for (Index j = 0; j < Rt.cols(); ++j) Rt(i, j) /= lam(i) + lam(j);
    return detail::symmetrize(U * Rt * U.transpose());
}

namespace detail {

// Right-hand side of the linear-part ODE along the geodesic from S0 with Brenier
// matrix B:  dA Q + Q dA = S^T A Q + Q A S,  S = (I - B) M^{-1},  Q = M^{-1} S0^{-1} M^{-1}.
class TransportOde {
public:
    TransportOde(const Matrix& S0, Matrix B)
        : B_(std::move(B)), S0inv_(S0.llt().solve(Matrix::Identity(S0.rows(), S0.cols()))),
          I_(Matrix::Identity(S0.rows(), S0.cols())) {}

    [[nodiscard]] bool trivial() const { return B_ == I_; }

    [[nodiscard]] Matrix operator()(double t, const Matrix& A) const {
        const Matrix M = (1.0 - t) * I_ + t * B_;
        const Matrix Minv = symmetrize(M.llt().solve(I_));
        const Matrix S = (I_ - B_) * Minv;
        const Matrix Q = symmetrize(Minv * S0inv_ * Minv);
        return solve_lyapunov(Q, S.transpose() * A * Q + Q * A * S);
    }

private:
    Matrix B_;
    Matrix S0inv_;
    Matrix I_;
};

}  // namespace detail

/// Fixed-step RK4 integration of the linear part; `observe(k, A_k)` sees the
/// state after every step k = 0..steps.
inline AffineTangent gaussian_parallel_transport(const GaussianMeasure& G0, const GaussianMeasure& G1,
                                                 const AffineTangent& v0, int steps = 1000,
                                                 const std::function<void(int, const Matrix&)>& observe = {}) {
    check_same_dim(G0, G1);
    if (v0.offset().size() != G0.dim()) throw InputError("tangent dimension does not match the gaussians");
    if (steps < 1) throw InputError("transport needs steps >= 1");
    const detail::TransportOde f(G0.cov(), brenier_matrix(G0.cov(), G1.cov()));
    Matrix A = v0.linear();
    if (observe) observe(0, A);
    const double h = 1.0 / steps;
    for (int k = 0; k < steps; ++k) {
        if (!f.trivial()) {
            const double t = k * h;
            const Matrix k1 = f(t, A);
            const Matrix k2 = f(t + 0.5 * h, A + 0.5 * h * k1);
            const Matrix k3 = f(t + 0.5 * h, A + 0.5 * h * k2);
            const Matrix k4 = f(t + h, A + h * k3);
            A += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!A.allFinite()) throw NumericalError("transport integration became non-finite at t = " + std::to_string(t + h));
        }
        if (observe) observe(k + 1, A);
    }
    return {v0.offset(), A};
}

/// Affine log map between Gaussians: x -> (m1 - m0) + (B - I)(x - m0).
inline AffineTangent gaussian_log_map(const GaussianMeasure& G0, const GaussianMeasure& G1) {
    check_same_dim(G0, G1);
    const Index d = G0.dim();
    return {G1.mean() - G0.mean(), brenier_matrix(G0.cov(), G1.cov()) - Matrix::Identity(d, d)};
}

/// Image of G under x -> x + a + A (x - m).
inline GaussianMeasure gaussian_exp_map(const GaussianMeasure& G, const AffineTangent& v) {
    const Matrix F = Matrix::Identity(G.dim(), G.dim()) + v.linear();
    return {G.mean() + v.offset(), detail::symmetrize(F * G.cov() * F.transpose())};
}

/// n draws m + L z with L the Cholesky factor of the covariance; uniform weights.
inline PointCloud sample(const GaussianMeasure& G, Index n, std::uint64_t seed) {
    if (n < 1) throw InputError("sample size must be >= 1");
    const Eigen::LLT<Matrix> llt(G.cov());
    if (llt.info() != Eigen::Success) throw InputError("covariance is not positive definite (Cholesky failed)");
    Rng rng(seed);
    const Matrix Z = rng.normal_matrix(n, G.dim());
    Matrix X = Z * llt.matrixL().transpose();
    X.rowwise() += G.mean().transpose();
    return PointCloud::uniform(std::move(X));
}

/// Variance-reduced draw whose empirical moments (1/n normalization) equal the
/// target exactly: antithetic pairs (z, -z), whitened, then colored with the
/// Cholesky factor. An odd n gets one extra atom at the mean.
inline PointCloud sample_moment_matched(const GaussianMeasure& G, Index n, std::uint64_t seed) {
    const Index d = G.dim();
    if (n < 2 * d + 1) throw InputError("moment-matched sampling needs n >= 2 d + 1");
    const Eigen::LLT<Matrix> llt(G.cov());
    if (llt.info() != Eigen::Success) throw InputError("covariance is not positive definite (Cholesky failed)");
    Rng rng(seed);
    const Index half = n / 2;
    const Matrix H = rng.normal_matrix(half, d);
    Matrix Z = Matrix::Zero(n, d);
    Z.topRows(half) = H;
    Z.middleRows(half, half) = -H;
    const Matrix C = Z.transpose() * Z / static_cast<double>(n);
    Z = Z * sym_inv_sqrt(C);
    Matrix X = Z * llt.matrixL().transpose();
    X.rowwise() += G.mean().transpose();
    return PointCloud::uniform(std::move(X));
}

/// Moment fit with the unbiased covariance (reliability-weight correction for
/// non-uniform weights). A singular estimate gets jitter 1e-6 tr(S)/d on the
/// diagonal; `jitter` reports the amount added (0 when none was needed).
inline GaussianMeasure fit_gaussian(const PointCloud& P, double* jitter = nullptr) {
    const Vector m = P.mean();
    const Matrix Xc = P.points().rowwise() - m.transpose();
    const Vector& w = P.weights();
    const double denom = 1.0 - w.squaredNorm();
    Matrix S = Xc.transpose() * w.asDiagonal() * Xc;
    if (denom > 0.0) S /= denom;
    S = detail::symmetrize(S);
    const Index d = P.dim();
    double added = 0.0;
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
    const double lmax = eig.eigenvalues().maxCoeff();
    if (!(eig.eigenvalues().minCoeff() > 1e-12 * std::max(lmax, 0.0)) || !(lmax > 0.0)) {
        added = 1e-6 * std::max(S.trace(), 1e-300) / static_cast<double>(d);
        if (!(S.trace() > 0.0)) added = 1e-6;
        S.diagonal().array() += added;
        log::warn("sample covariance is singular; added jitter " + std::to_string(added));
    }
    if (jitter) *jitter = added;
    return {m, S};
}

enum class SystemMode { mean_only, mean_and_cov };

/// Parameters of the synthetic control / counterfactual generator.
struct GeneratorConfig {
    double mean_step = 1.5;   ///< control mean moves by mean_step * e1 per step
    double rotation = 0.15;   ///< covariance conjugated by exp(rotation * W) per step
    double scale = 1.1;       ///< and multiplied by this factor
    double cf_offset = 3.0;   ///< counterfactual starts shifted by cf_offset * e2
    int transport_steps = 1000;
};

struct ParallelSystem {
    std::vector<GaussianMeasure> control;
    std::vector<GaussianMeasure> counterfactual;
};

namespace detail {

// Fixed skew-symmetric generator: +1 above and -1 below the diagonal band.
inline Matrix band_skew(Index d) {
    Matrix W = Matrix::Zero(d, d);
    for (Index k = 0; k + 1 < d; ++k) {
        W(k, k + 1) = 1.0;
        W(k + 1, k) = -1.0;
    }
    return W;
}

}  // namespace detail

/// Control Gaussians and the counterfactual obtained by transporting every
/// control step along the geodesic to the current counterfactual state.
inline ParallelSystem simulate_parallel_system(Index d, int T, SystemMode mode, std::uint64_t seed,
                                               const GeneratorConfig& gen = {}) {
    if (d < 1) throw InputError("dimension must be >= 1");
    if (T < 2) throw InputError("system needs T >= 2 steps");
    // anisotropic control start so the rotation actually deforms it: spectrum 2 .. 1/2
    Vector spec(d);
    for (Index k = 0; k < d; ++k) spec(k) = d == 1 ? 1.0 : std::pow(2.0, 1.0 - 2.0 * static_cast<double>(k) / (d - 1));
    const Matrix R = (gen.rotation * detail::band_skew(d)).exp();

    Rng rng(mix_seed(seed, 0x5157u));
    const Matrix Z = rng.normal_matrix(d, d);
    const Matrix cf_cov = Z * Z.transpose() / static_cast<double>(d) + 0.5 * Matrix::Identity(d, d);
    Vector cf_mean = Vector::Zero(d);
    cf_mean(d >= 2 ? 1 : 0) = gen.cf_offset;

    ParallelSystem sys;
    sys.control.emplace_back(Vector::Zero(d), Matrix(spec.asDiagonal()));
    sys.counterfactual.emplace_back(cf_mean, cf_cov);
    Vector step = Vector::Zero(d);
    step(0) = gen.mean_step;
    for (int i = 0; i + 1 < T; ++i) {
        const GaussianMeasure& c = sys.control.back();
        Matrix next_cov = c.cov();
        if (mode == SystemMode::mean_and_cov) next_cov = detail::symmetrize(gen.scale * R * c.cov() * R.transpose());
        sys.control.emplace_back(c.mean() + step, next_cov);
        const AffineTangent v = gaussian_log_map(sys.control[i], sys.control[i + 1]);
        const AffineTangent w = gaussian_parallel_transport(sys.control[i], sys.counterfactual.back(), v, gen.transport_steps);
        sys.counterfactual.push_back(gaussian_exp_map(sys.counterfactual.back(), w));
    }
    return sys;
}

}  // namespace wpt
