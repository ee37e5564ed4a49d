#include "wardcast/ols.hpp"

#include <cmath>
#include <stdexcept>

namespace wardcast::ols {

namespace detail {

void symmetric_eigen(std::vector<double> a, std::size_t n, std::vector<double>& eigenvalues,
                     std::vector<double>& eigenvectors) {
    eigenvectors.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) eigenvectors[i * n + i] = 1.0;

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
    if (scale == 0.0) scale = 1.0;

    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += std::abs(a[p * n + q]);
        if (off <= scale * 1e-15) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a[p * n + q];
                if (std::abs(apq) <= scale * 1e-18) continue;
                double app = a[p * n + p];
                double aqq = a[q * n + q];
                double theta = (aqq - app) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a[k * n + p];
                    double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a[p * n + k];
                    double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = eigenvectors[k * n + p];
                    double vkq = eigenvectors[k * n + q];
                    eigenvectors[k * n + p] = c * vkp - s * vkq;
                    eigenvectors[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = a[i * n + i];
}

}  // namespace detail

LeastSquaresFit solve_least_squares(const std::vector<std::vector<double>>& design_rows,
                                    const std::vector<double>& targets, double rank_tol) {
    const std::size_t m = design_rows.size();
    if (m == 0 || m != targets.size())
        throw std::invalid_argument("ols: design/target size mismatch");
    const std::size_t k = design_rows.front().size();
    for (const auto& row : design_rows)
        if (row.size() != k) throw std::invalid_argument("ols: ragged design matrix");

    // Column equilibration keeps the rank test about collinearity, not units.
    std::vector<double> col_scale(k, 1.0);
    for (std::size_t j = 0; j < k; ++j) {
        double norm = 0.0;
        for (std::size_t i = 0; i < m; ++i) norm += design_rows[i][j] * design_rows[i][j];
        norm = std::sqrt(norm);
        if (norm > 0.0) col_scale[j] = norm;
    }

    std::vector<double> gram(k * k, 0.0);
    std::vector<double> rhs(k, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            double xp = design_rows[i][p] / col_scale[p];
            rhs[p] += xp * targets[i];
            for (std::size_t q = p; q < k; ++q) {
                gram[p * k + q] += xp * design_rows[i][q] / col_scale[q];
            }
        }
    }
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t q = 0; q < p; ++q) gram[p * k + q] = gram[q * k + p];

    std::vector<double> eigenvalues, eigenvectors;
    detail::symmetric_eigen(gram, k, eigenvalues, eigenvectors);

    double max_eig = 0.0;
    for (double ev : eigenvalues) max_eig = std::max(max_eig, ev);
    const double cutoff = max_eig * rank_tol;

    LeastSquaresFit fit;
    fit.coefficients.assign(k, 0.0);

    // b = V diag(1/lambda) V' rhs, dropping near-null directions.
    for (std::size_t j = 0; j < k; ++j) {
        if (eigenvalues[j] <= cutoff) {
            fit.rank_deficient = true;
            continue;
        }
        double proj = 0.0;
        for (std::size_t p = 0; p < k; ++p) proj += eigenvectors[p * k + j] * rhs[p];
        proj /= eigenvalues[j];
        for (std::size_t p = 0; p < k; ++p) fit.coefficients[p] += eigenvectors[p * k + j] * proj;
    }
    for (std::size_t p = 0; p < k; ++p) fit.coefficients[p] /= col_scale[p];

    for (std::size_t i = 0; i < m; ++i) {
        double pred = 0.0;
        for (std::size_t p = 0; p < k; ++p) pred += design_rows[i][p] * fit.coefficients[p];
        double resid = targets[i] - pred;
        fit.residual_sse += resid * resid;
    }
    return fit;
}

}  // namespace wardcast::ols
