#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "wpt/errors.hpp"

namespace wpt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kWeightSumTolerance = 1e-9;

/// Weighted empirical measure on R^d: one support point per row of `points`,
/// with probability mass `weights`.
class PointCloud {
public:
    PointCloud() = default;

    PointCloud(Matrix points, Vector weights) : points_(std::move(points)), weights_(std::move(weights)) {
        validate();
    }

    /// Uniform weights 1/n.
    static PointCloud uniform(Matrix points) {
        const Index n = points.rows();
        if (n < 1) throw InputError("point cloud needs at least one point");
        Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
        return {std::move(points), std::move(w)};
    }

    [[nodiscard]] const Matrix& points() const noexcept { return points_; }
    [[nodiscard]] const Vector& weights() const noexcept { return weights_; }
    [[nodiscard]] Index size() const noexcept { return points_.rows(); }
    [[nodiscard]] Index dim() const noexcept { return points_.cols(); }

    [[nodiscard]] bool has_uniform_weights() const {
        const double u = 1.0 / static_cast<double>(size());
        return (weights_.array() - u).abs().maxCoeff() <= 1e-15;
    }

    /// Weighted mean of the support.
    [[nodiscard]] Vector mean() const { return points_.transpose() * weights_; }

    /// Same weights, new support (row-aligned).
    [[nodiscard]] PointCloud with_points(Matrix points) const { return {std::move(points), weights_}; }

    friend bool operator==(const PointCloud& a, const PointCloud& b) {
        return a.points_.rows() == b.points_.rows() && a.points_.cols() == b.points_.cols() &&
               a.points_ == b.points_ && a.weights_ == b.weights_;
    }

private:
    void validate() const {
        if (points_.rows() < 1 || points_.cols() < 1) throw InputError("point cloud must have n >= 1 and d >= 1");
        if (weights_.size() != points_.rows())
            throw InputError("point cloud has " + std::to_string(points_.rows()) + " points but " +
                             std::to_string(weights_.size()) + " weights");
        if (!points_.allFinite()) throw InputError("point cloud contains non-finite coordinates");
        if (!weights_.allFinite()) throw InputError("point cloud contains non-finite weights");
        if ((weights_.array() < 0.0).any()) throw InputError("point cloud weights must be nonnegative");
        if (std::abs(weights_.sum() - 1.0) > kWeightSumTolerance)
            throw InputError("point cloud weights must sum to 1 (got " + std::to_string(weights_.sum()) + ")");
    }

    Matrix points_;
    Vector weights_;
};

/// A tangent vector at a point cloud: one R^d vector per support point of the anchor.
class TangentField {
public:
    TangentField() = default;

    TangentField(PointCloud anchor, Matrix vectors) : anchor_(std::move(anchor)), vectors_(std::move(vectors)) {
        if (vectors_.rows() != anchor_.size() || vectors_.cols() != anchor_.dim())
            throw InputError("tangent field shape " + std::to_string(vectors_.rows()) + "x" +
                             std::to_string(vectors_.cols()) + " does not match anchor " +
                             std::to_string(anchor_.size()) + "x" + std::to_string(anchor_.dim()));
        if (!vectors_.allFinite()) throw InputError("tangent field contains non-finite entries");
    }

    static TangentField zero(const PointCloud& anchor) {
        return {anchor, Matrix::Zero(anchor.size(), anchor.dim())};
    }

    [[nodiscard]] const PointCloud& anchor() const noexcept { return anchor_; }
    [[nodiscard]] const Matrix& vectors() const noexcept { return vectors_; }
    [[nodiscard]] Index size() const noexcept { return vectors_.rows(); }
    [[nodiscard]] Index dim() const noexcept { return vectors_.cols(); }

    /// Squared L2(anchor) norm.
    [[nodiscard]] double squared_norm() const {
        return (vectors_.rowwise().squaredNorm().transpose() * anchor_.weights())(0);
    }
    [[nodiscard]] double norm() const { return std::sqrt(squared_norm()); }

    /// L2(anchor) inner product with a row-aligned field.
    [[nodiscard]] double dot(const Matrix& other) const {
        return (vectors_.cwiseProduct(other).rowwise().sum().transpose() * anchor_.weights())(0);
    }

    /// Mass-weighted average vector.
    [[nodiscard]] Vector mean() const { return vectors_.transpose() * anchor_.weights(); }

private:
    PointCloud anchor_;
    Matrix vectors_;
};

/// Weighted L2 norm of a row-aligned vector field.
inline double weighted_l2(const Matrix& field, const Vector& weights) {
    return std::sqrt((field.rowwise().squaredNorm().transpose() * weights)(0));
}

}  // namespace wpt
