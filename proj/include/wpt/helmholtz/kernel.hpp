#pragma once

#include <cmath>
#include <string>

#include "wpt/errors.hpp"
#include "wpt/types.hpp"

namespace wpt {

enum class KernelFamily { rbf, matern };

/// Translation-invariant kernel K(x, y) = k(x - y).
///   rbf:     k(r) = exp(-|r|^2 / (2 a^2))
///   matern:  p = 3/2: (1 + s|r|) exp(-s|r|),                 s = sqrt(3)/a
///            p = 5/2: (1 + s|r| + s^2 |r|^2 / 3) exp(-s|r|),  s = sqrt(5)/a
struct KernelSpec {
    KernelFamily family = KernelFamily::rbf;
    double lengthscale = 1.0;
    double smoothness = 2.5;  ///< matern only

    void validate() const {
        if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) throw ConfigError("kernel lengthscale must be > 0");
        if (family == KernelFamily::matern && smoothness != 1.5 && smoothness != 2.5)
            throw ConfigError("matern smoothness must be 1.5 or 2.5");
    }
};

/// K and its derivatives in the second argument at one pair (x, y).
struct KernelDerivatives {
    double K = 0.0;
    Vector grad2;  ///< d/dy K
    Matrix hess2;  ///< d^2/dy^2 K
    Matrix cross;  ///< d/dx d/dy K (= -hess2 for these kernels)
};

namespace detail {

// Radial profile: k(r) = value, grad k(r) = g * r, hess k(r) = g I + h r r^T.
struct Radial {
    double value, g, h;
};

inline Radial radial(const KernelSpec& spec, double rho2) {
    const double a = spec.lengthscale;
    if (spec.family == KernelFamily::rbf) {
        const double k = std::exp(-0.5 * rho2 / (a * a));
        return {k, -k / (a * a), k / (a * a * a * a)};
    }
    const double rho = std::sqrt(rho2);
    if (spec.smoothness == 1.5) {
        const double s = std::sqrt(3.0) / a;
        const double e = std::exp(-s * rho);
        // h = s^3 e / rho; bounded since the r r^T it multiplies is O(rho^2)
        return {(1.0 + s * rho) * e, -s * s * e, rho > 0.0 ? s * s * s * e / rho : 0.0};
    }
    const double s = std::sqrt(5.0) / a;
    const double e = std::exp(-s * rho);
    return {(1.0 + s * rho + s * s * rho2 / 3.0) * e, -(s * s / 3.0) * (1.0 + s * rho) * e, (s * s * s * s / 3.0) * e};
}

}  // namespace detail

namespace detail {

// Weighted column means, accumulated as offsets from the first row so that a
// constant column comes back bit-exact.
inline Vector shifted_mean(const Matrix& V, const Vector& w) {
    const Vector ref = V.row(0).transpose();
    return ref + (V.rowwise() - ref.transpose()).transpose() * w / w.sum();
}

}  // namespace detail

inline double kernel_value(const KernelSpec& spec, const Vector& x, const Vector& y) {
    return detail::radial(spec, (x - y).squaredNorm()).value;
}

inline KernelDerivatives kernel_derivatives(const KernelSpec& spec, const Vector& x, const Vector& y) {
    spec.validate();
    if (x.size() != y.size()) throw InputError("kernel arguments differ in dimension");
    const Vector r = x - y;
    const auto p = detail::radial(spec, r.squaredNorm());
    const Index d = x.size();
    KernelDerivatives out;
    out.K = p.value;
    // K(x, y) = k(x - y): d/dy brings a sign, d^2/dy^2 does not
    out.grad2 = -p.g * r;
    out.hess2 = p.g * Matrix::Identity(d, d) + p.h * r * r.transpose();
    out.cross = -out.hess2;
    return out;
}

}  // namespace wpt
