#include "wbe/least_squares.hpp"

#include <cmath>
#include <string>

#include "wbe/error.hpp"

namespace wbe {

LeastSquaresSolution solve_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, bool diagnostics) {
    const Eigen::Index n = a.rows();
    const Eigen::Index p = a.cols();
    if (b.size() != n) {
        throw DataError("target length does not match design rows");
    }
    if (n <= p) {
        throw DataError("need more observations (" + std::to_string(n) + ") than coefficients (" +
                        std::to_string(p) + ")");
    }
    if (!a.allFinite() || !b.allFinite()) {
        throw DataError("design or target contains non-finite values");
    }

    // Scale columns to unit max-abs so rank detection is insensitive to units (x vs x^3).
    Eigen::VectorXd scale(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double m = a.col(j).cwiseAbs().maxCoeff();
        if (m == 0.0) {
            throw NumericError("singular design: column " + std::to_string(j) + " is all zeros");
        }
        scale(j) = m;
    }
    const Eigen::MatrixXd as = a * scale.cwiseInverse().asDiagonal();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(as);
    qr.setThreshold(1e-12);
    if (qr.rank() < p) {
        throw NumericError("singular design");
    }

    LeastSquaresSolution out;
    out.beta = qr.solve(b).cwiseQuotient(scale);
    out.fitted = a * out.beta;
    out.residuals = b - out.fitted;
    out.sse = out.residuals.squaredNorm();
    if (!diagnostics) {
        return out;
    }

    // (AsᵀAs)⁻¹ = P R⁻¹ R⁻ᵀ Pᵀ, then undo the column scaling.
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd inner = r_inv * r_inv.transpose();
    const auto& perm = qr.colsPermutation();
    const Eigen::MatrixXd cov_scaled = perm * inner * perm.transpose();
    out.unscaled_covariance = scale.cwiseInverse().asDiagonal() * cov_scaled * scale.cwiseInverse().asDiagonal();

    out.leverage.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd row = as.row(i).transpose();
        out.leverage(i) = row.dot(cov_scaled * row);
    }
    return out;
}

}  // namespace wbe
