#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "wpt/errors.hpp"
#include "wpt/helmholtz/kernel.hpp"
#include "wpt/random.hpp"
#include "wpt/types.hpp"

namespace wpt {

/// Random Fourier features phi_k(x) = sqrt(2/D) cos(w_k . x + b_k) and the
/// potential f(x) = theta . phi(x) + offset . x, whose gradient is the fitted
/// field. The linear part is unpenalized so constant fields fit exactly.
struct RFFModel {
    Matrix frequencies;  ///< D x d
    Vector phases;       ///< D
    Vector theta;        ///< D
    Vector offset;       ///< d
    KernelSpec spec;
    double ridge = 0.0;

    [[nodiscard]] Index n_features() const noexcept { return frequencies.rows(); }

    /// n x D feature matrix.
    [[nodiscard]] Matrix features(const Matrix& X) const {
        check_dim(X);
        const double s = std::sqrt(2.0 / static_cast<double>(n_features()));
        return s * ((X * frequencies.transpose()).rowwise() + phases.transpose()).array().cos().matrix();
    }

    /// grad f(x) = offset - sqrt(2/D) sum_k theta_k sin(w_k . x + b_k) w_k
    [[nodiscard]] Matrix gradient(const Matrix& X) const {
        check_dim(X);
        const double s = std::sqrt(2.0 / static_cast<double>(n_features()));
        const Matrix S = ((X * frequencies.transpose()).rowwise() + phases.transpose()).array().sin().matrix();
        Matrix out = -s * (S * theta.asDiagonal()) * frequencies;
        out.rowwise() += offset.transpose();
        return out;
    }

private:
    void check_dim(const Matrix& X) const {
        if (X.cols() != frequencies.cols())
            throw InputError("query points have dimension " + std::to_string(X.cols()) + ", model has " +
                             std::to_string(frequencies.cols()));
    }
};

/// Frequencies from the kernel's spectral density: Gaussian with scale 1/a for
/// rbf, multivariate Student-t with 2p degrees of freedom and scale 1/a for
/// matern (a Gaussian divided by an independent chi factor). Phases uniform.
inline RFFModel draw_features(const KernelSpec& spec, Index d, Index n_features, std::uint64_t seed) {
    spec.validate();
    if (n_features < 1) throw ConfigError("n_features must be >= 1");
    Rng rng(mix_seed(seed, 0xFF));
    RFFModel m;
    m.spec = spec;
    m.frequencies = rng.normal_matrix(n_features, d) / spec.lengthscale;
    if (spec.family == KernelFamily::matern) {
        const double dof = 2.0 * spec.smoothness;
        for (Index k = 0; k < n_features; ++k) m.frequencies.row(k) *= std::sqrt(dof / rng.chi_squared(dof));
    }
    m.phases.resize(n_features);
    for (Index k = 0; k < n_features; ++k) m.phases(k) = rng.uniform(0.0, 2.0 * std::numbers::pi);
    m.theta = Vector::Zero(n_features);
    m.offset = Vector::Zero(d);
    return m;
}

/// Ridge regression of the feature Jacobians onto the field, with an
/// unpenalized constant. Centering both sides by their weighted means removes
/// the constant:
///   (sum_i w_i Jc_i Jc_i^T + lambda I) theta = sum_i w_i Jc_i vc_i,   J_i = d phi / dx (x_i), D x d,
/// then offset = mean(v) - mean(J)^T theta.
inline RFFModel fit_rff(const Matrix& X, const Matrix& V, const KernelSpec& spec, double lambda, Index n_features,
                        std::uint64_t seed, const Vector* weights = nullptr) {
    const Index n = X.rows(), d = X.cols();
    if (V.rows() != n || V.cols() != d) throw InputError("field shape does not match the sample points");
    if (!(lambda > 0.0)) throw ConfigError("ridge lambda must be > 0");
    RFFModel m = draw_features(spec, d, n_features, seed);
    m.ridge = lambda;
    const Vector w = weights ? *weights : Vector::Constant(n, 1.0 / static_cast<double>(n));
    if (w.size() != n) throw InputError("weight vector length does not match the sample points");
    const double s = std::sqrt(2.0 / static_cast<double>(n_features));
    // coordinate a of the Jacobian row i is R(i, :) .* w_{.a} with R = -s sin(X w^T + b)
    Matrix R = -s * ((X * m.frequencies.transpose()).rowwise() + m.phases.transpose()).array().sin().matrix();
    const Vector r_mean = R.transpose() * w / w.sum();
    R.rowwise() -= r_mean.transpose();
    R = w.cwiseSqrt().asDiagonal() * R;
    const Vector v_mean = detail::shifted_mean(V, w);
    const Matrix Vc = (V.rowwise() - v_mean.transpose());

    Matrix M = Matrix::Zero(n_features, n_features);
    Vector rhs = Vector::Zero(n_features);
    for (Index a = 0; a < d; ++a) {
        const Matrix Phi = R * m.frequencies.col(a).asDiagonal();
        M.selfadjointView<Eigen::Lower>().rankUpdate(Phi.transpose());
        rhs.noalias() += Phi.transpose() * w.cwiseSqrt().cwiseProduct(Vc.col(a));
    }
    M.diagonal().array() += lambda;
    const Eigen::LLT<Matrix> llt(M.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success) throw NumericalError("random-feature normal equations failed; increase lambda");
    m.theta = llt.solve(rhs);
    if (!m.theta.allFinite()) throw NumericalError("random-feature solve produced non-finite weights");
    m.offset = v_mean - m.frequencies.transpose() * r_mean.cwiseProduct(m.theta);
    return m;
}

}  // namespace wpt
