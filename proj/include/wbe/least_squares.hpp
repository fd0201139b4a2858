#pragma once

#include <Eigen/Dense>

namespace wbe {

/// Ordinary least-squares solution of A·beta ≈ b.
struct LeastSquaresSolution {
    Eigen::VectorXd beta;
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
    /// (AᵀA)⁻¹, the coefficient covariance before scaling by the residual variance.
    Eigen::MatrixXd unscaled_covariance;
    /// Diagonal of the hat matrix A(AᵀA)⁻¹Aᵀ.
    Eigen::VectorXd leverage;
    double sse = 0.0;
};

/// Column-equilibrated, column-pivoted Householder QR. Throws NumericError("singular design")
/// when A is rank deficient and DataError when rows <= columns. Without `diagnostics` the covariance
/// and leverage are left empty.
LeastSquaresSolution solve_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                         bool diagnostics = true);

}  // namespace wbe
