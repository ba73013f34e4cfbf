#pragma once

#include <cmath>
#include <string>

#include "wpt/errors.hpp"
#include "wpt/helmholtz/kernel.hpp"
#include "wpt/types.hpp"

namespace wpt {

inline constexpr Index kDefaultMaxExactSystem = 20000;

/// Gradient of f(x) = sum_i <c_i, d/dy K(x_i, y)>|_{y=x} + <offset, x>, the
/// representer form of the kernel gradient regression plus an unpenalized
/// linear potential (kernels like rbf do not contain linear functions, and
/// constant fields must be reproduced exactly). Evaluating at a query x gives
/// sum_i hess2 K(x_i, x) c_i + offset.
struct ExactGradientModel {
    Matrix centers;        ///< n x d
    Vector coefficients;   ///< stacked c_1..c_n, length n d
    Vector offset;         ///< d
    KernelSpec spec;
    double ridge = 0.0;
    double normal_residual = 0.0;  ///< relative residual of the normal equations at fit time

    [[nodiscard]] Matrix gradient(const Matrix& Xq) const {
        if (Xq.cols() != centers.cols())
            throw InputError("query points have dimension " + std::to_string(Xq.cols()) + ", model has " +
                             std::to_string(centers.cols()));
        const Index n = centers.rows(), d = centers.cols();
        Matrix out(Xq.rows(), d);
        for (Index q = 0; q < Xq.rows(); ++q) {
            Vector acc = Vector::Zero(d);
            for (Index i = 0; i < n; ++i) {
                const Vector r = centers.row(i) - Xq.row(q);
                const auto p = detail::radial(spec, r.squaredNorm());
                const auto c = coefficients.segment(i * d, d);
                acc += p.g * c + (p.h * r.dot(c)) * r;
            }
            out.row(q) = (acc + offset).transpose();
        }
        return out;
    }
};

namespace detail {

// Gram matrix of the gradient features, G_ij = d/dx d/dy K(x_i, x_j) = -hess k(x_i - x_j),
// as a dense symmetric n d x n d matrix.
inline Matrix gradient_gram(const Matrix& X, const KernelSpec& spec) {
    const Index n = X.rows(), d = X.cols();
    Matrix G(n * d, n * d);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j) {
            const Vector r = X.row(i) - X.row(j);
            const auto p = radial(spec, r.squaredNorm());
            const Matrix blk = -(p.g * Matrix::Identity(d, d) + p.h * r * r.transpose());
            G.block(i * d, j * d, d, d) = blk;
            G.block(j * d, i * d, d, d) = blk;
        }
    }
    return G;
}

inline Vector stack_rows(const Matrix& V) {
    Vector s(V.size());
    for (Index i = 0; i < V.rows(); ++i) s.segment(i * V.cols(), V.cols()) = V.row(i).transpose();
    return s;
}

inline Matrix unstack_rows(const Vector& s, Index n, Index d) {
    Matrix V(n, d);
    for (Index i = 0; i < n; ++i) V.row(i) = s.segment(i * d, d).transpose();
    return V;
}

}  // namespace detail

/// Weighted objective  sum_i w_i |(D c)_i + beta - v_i|^2 + lambda c^T G c  with D = -G.
inline double exact_objective(const Matrix& G, const Vector& c, const Vector& beta, const Vector& v_stacked,
                              const Vector& w_stacked, double lambda) {
    const Vector Gc = G * c;
    const Vector res = -Gc + beta.replicate(c.size() / beta.size(), 1) - v_stacked;
    return res.cwiseProduct(w_stacked).dot(res) + lambda * c.dot(Gc);
}

/// Representer solve with an unpenalized constant term. Eliminating the
/// constant leaves  |Pi S (G c + v)|^2 + lambda c^T G c, where S = W^1/2 and Pi
/// removes each coordinate's component along sqrt(w). With A = Pi S the normal
/// equations are solved by c = A z, (A G A + lambda I) z = -A v, an SPD system.
/// The constant is then the weighted mean of v + G c.
inline ExactGradientModel fit_exact(const Matrix& X, const Matrix& V, const KernelSpec& spec, double lambda,
                                    const Vector* weights = nullptr, Index max_system = kDefaultMaxExactSystem) {
    spec.validate();
    const Index n = X.rows(), d = X.cols();
    if (V.rows() != n || V.cols() != d) throw InputError("field shape does not match the sample points");
    if (!(lambda > 0.0)) throw ConfigError("ridge lambda must be > 0");
    if (n * d > max_system)
        throw ConfigError("exact projection system n*d = " + std::to_string(n * d) + " exceeds the limit " +
                          std::to_string(max_system) + "; use the rff method");
    Vector w = weights ? *weights : Vector::Constant(n, 1.0 / static_cast<double>(n));
    if (w.size() != n) throw InputError("weight vector length does not match the sample points");
    const Index nd = n * d;
    Vector sw(nd);
    for (Index i = 0; i < n; ++i) sw.segment(i * d, d).setConstant(std::sqrt(w(i)));
    // columns of U: sqrt(w) (x) e_a, normalized; Pi = I - U U^T
    Matrix U = Matrix::Zero(nd, d);
    for (Index i = 0; i < n; ++i) U.block(i * d, 0, d, d).diagonal().setConstant(std::sqrt(w(i) / w.sum()));
    const auto apply_pi = [&](const Vector& x) -> Vector { return x - U * (U.transpose() * x); };

    const Vector v_mean = detail::shifted_mean(V, w);
    const Vector vc = detail::stack_rows(V.rowwise() - v_mean.transpose());

    const Matrix G = detail::gradient_gram(X, spec);
    Matrix A = sw.asDiagonal() * G * sw.asDiagonal();
    const Matrix AU = A * U;
    A -= U * AU.transpose() + AU * U.transpose();
    A += U * (U.transpose() * AU) * U.transpose();
    A = 0.5 * (A + A.transpose()).eval();
    A.diagonal().array() += lambda;
    const Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success)
        throw NumericalError("regularized gradient system is not positive definite; increase lambda");
    const Vector rhs = -apply_pi(sw.cwiseProduct(vc));
    Vector z = llt.solve(rhs);
    // one step of refinement on the reduced system
    z += llt.solve(rhs - A * z);
    const Vector c = sw.cwiseProduct(apply_pi(z));
    if (!c.allFinite()) throw NumericalError("gradient regression produced non-finite coefficients; increase lambda");

    const Vector Gc = G * c;
    const Vector offset = v_mean + detail::shifted_mean(detail::unstack_rows(Gc, n, d), w);

    // normal-equation residual: G (W_c (G c + v) + lambda c) against |G W_c v|,
    // with W_c = S Pi S the centered weighting
    const auto wc = [&](const Vector& x) -> Vector { return sw.cwiseProduct(apply_pi(sw.cwiseProduct(x))); };
    const Vector inner = wc(Gc + vc) + lambda * c;
    const double scale = (G * wc(vc)).norm();
    const double residual = scale > 0.0 ? (G * inner).norm() / scale : (G * inner).norm();
    if (residual > 1e-6)
        throw NumericalError("normal equations not met (relative residual " + std::to_string(residual) +
                             "); increase lambda");
    return {X, c, offset, spec, lambda, residual};
}

}  // namespace wpt
