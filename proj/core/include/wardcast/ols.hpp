#pragma once

#include <cstddef>
#include <vector>

namespace wardcast::ols {

struct LeastSquaresFit {
    std::vector<double> coefficients;  // one per design column
    double residual_sse = 0.0;
    bool rank_deficient = false;
};

/**
 * Dense least squares for the small regressions used by the forecasters
 * (at most a handful of columns over one rolling window).
 *
 * Solves min ||y - X b|| via the normal equations after scaling each column
 * to unit norm; a symmetric eigendecomposition of X'X yields the
 * pseudoinverse, so rank-deficient designs get the minimum-norm solution
 * deterministically. Eigenvalues below `rank_tol` times the largest are
 * treated as zero.
 */
LeastSquaresFit solve_least_squares(const std::vector<std::vector<double>>& design_rows,
                                    const std::vector<double>& targets,
                                    double rank_tol = 1e-10);

namespace detail {
// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major n*n).
// Fills `eigenvalues` (size n) and `eigenvectors` (column j = vector j,
// row-major n*n).
void symmetric_eigen(std::vector<double> matrix, std::size_t n, std::vector<double>& eigenvalues,
                     std::vector<double>& eigenvectors);
}  // namespace detail

}  // namespace wardcast::ols
