#pragma once

#include <string>

#include "wpt/ot/network_simplex.hpp"
#include "wpt/types.hpp"

namespace wpt {

using CostMatrix = ot::RowMatrix;

/// C(i, j) = |x_i - y_j|^2, accumulated coordinate by coordinate so that equal
/// rows give an exact zero.
inline CostMatrix pairwise_sq_cost(const Matrix& X, const Matrix& Y) {
    if (X.cols() != Y.cols())
        throw InputError("cost between clouds of dimension " + std::to_string(X.cols()) + " and " +
                         std::to_string(Y.cols()));
    const Index n = X.rows(), m = Y.rows(), d = X.cols();
    CostMatrix C = CostMatrix::Zero(n, m);
    // column-major Y gives contiguous access per coordinate
    for (Index k = 0; k < d; ++k) {
        const auto y = Y.col(k).transpose().array();
        for (Index i = 0; i < n; ++i) C.row(i).array() += (y - X(i, k)).square();
    }
    return C;
}

}  // namespace wpt
