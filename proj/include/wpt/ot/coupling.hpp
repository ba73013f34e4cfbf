#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "wpt/ot/network_simplex.hpp"
#include "wpt/types.hpp"

namespace wpt {

using ot::PlanEntry;

inline constexpr double kMarginalTolerance = 1e-7;

/// Sparse transport plan between weight vectors a (rows) and b (columns).
/// Entries are kept in row-major order; absent entries carry zero mass.
class Coupling {
public:
    Coupling() = default;

    Coupling(std::vector<PlanEntry> entries, Vector source_weights, Vector target_weights, double cost)
        : entries_(std::move(entries)),
          a_(std::move(source_weights)),
          b_(std::move(target_weights)),
          cost_(cost) {
        validate();
    }

    [[nodiscard]] const std::vector<PlanEntry>& entries() const noexcept { return entries_; }
    [[nodiscard]] const Vector& source_weights() const noexcept { return a_; }
    [[nodiscard]] const Vector& target_weights() const noexcept { return b_; }
    [[nodiscard]] Index rows() const noexcept { return a_.size(); }
    [[nodiscard]] Index cols() const noexcept { return b_.size(); }

    /// Objective <P, C> for the cost the plan was solved against.
    [[nodiscard]] double cost() const noexcept { return cost_; }

    [[nodiscard]] Vector row_mass() const {
        Vector r = Vector::Zero(rows());
        for (const auto& e : entries_) r(e.row) += e.mass;
        return r;
    }

    [[nodiscard]] Vector col_mass() const {
        Vector c = Vector::Zero(cols());
        for (const auto& e : entries_) c(e.col) += e.mass;
        return c;
    }

    [[nodiscard]] Matrix dense() const {
        Matrix P = Matrix::Zero(rows(), cols());
        for (const auto& e : entries_) P(e.row, e.col) += e.mass;
        return P;
    }

    /// <P, C> recomputed against an arbitrary cost of matching shape.
    template <class Cost>
    [[nodiscard]] double objective(const Cost& C) const {
        double s = 0.0;
        for (const auto& e : entries_) s += e.mass * C(e.row, e.col);
        return s;
    }

    /// Same plan with source and target exchanged.
    [[nodiscard]] Coupling transposed() const {
        std::vector<PlanEntry> t;
        t.reserve(entries_.size());
        for (const auto& e : entries_) t.push_back({e.col, e.row, e.mass});
        std::sort(t.begin(), t.end(), [](const PlanEntry& x, const PlanEntry& y) {
            return x.row != y.row ? x.row < y.row : x.col < y.col;
        });
        return {std::move(t), b_, a_, cost_};
    }

private:
    void validate() const {
        for (const auto& e : entries_) {
            if (e.row < 0 || e.row >= rows() || e.col < 0 || e.col >= cols())
                throw InputError("coupling entry (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                                 ") outside a " + std::to_string(rows()) + "x" + std::to_string(cols()) + " plan");
            if (!(e.mass >= 0.0) || !std::isfinite(e.mass)) throw InputError("coupling entries must be finite and >= 0");
        }
        const double row_err = (row_mass() - a_).cwiseAbs().maxCoeff();
        const double col_err = (col_mass() - b_).cwiseAbs().maxCoeff();
        if (row_err > kMarginalTolerance || col_err > kMarginalTolerance)
            throw SolverError("coupling marginals off by " + std::to_string(std::max(row_err, col_err)));
    }

    std::vector<PlanEntry> entries_;
    Vector a_;
    Vector b_;
    double cost_ = 0.0;
};

/// Plan that sends source i to target perm[i] with mass 1/n.
inline Coupling permutation_coupling(const std::vector<Index>& perm) {
    const auto n = static_cast<Index>(perm.size());
    std::vector<PlanEntry> entries;
    entries.reserve(perm.size());
    for (Index i = 0; i < n; ++i) entries.push_back({i, perm[static_cast<std::size_t>(i)], 1.0 / static_cast<double>(n)});
    const Vector u = Vector::Constant(n, 1.0 / static_cast<double>(n));
    return {std::move(entries), u, u, 0.0};
}

}  // namespace wpt
