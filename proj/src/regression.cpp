#include "wbe/regression.hpp"

#include <cmath>
#include <vector>

#include "wbe/distributions.hpp"
#include "wbe/error.hpp"
#include "wbe/least_squares.hpp"
#include "wbe/metrics.hpp"

namespace wbe::regression {

namespace {

constexpr std::size_t kMinOverlap = 10;

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& features, bool intercept) {
    if (!intercept) {
        return features;
    }
    Eigen::MatrixXd a(features.rows(), features.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(features.cols()) = features;
    return a;
}

Eigen::MatrixXd polynomial_features(const Eigen::MatrixXd& x, int order) {
    if (x.cols() != 1) {
        throw DataError("polynomial model expects a single feature column");
    }
    Eigen::MatrixXd out(x.rows(), order);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double p = 1.0;
        for (int k = 0; k < order; ++k) {
            p *= x(i, 0);
            out(i, k) = p;
        }
    }
    return out;
}

Eigen::MatrixXd expand(const RegressionFit& fit, const Eigen::MatrixXd& features) {
    const auto expected = static_cast<Eigen::Index>(fit.polynomial_order > 0 ? 1 : fit.feature_count);
    if (features.cols() != expected) {
        throw DataError("feature dimension mismatch: expected " + std::to_string(expected) + ", got " +
                        std::to_string(features.cols()));
    }
    const Eigen::MatrixXd f = fit.polynomial_order > 0 ? polynomial_features(features, fit.polynomial_order)
                                                       : features;
    return with_intercept(f, fit.intercept);
}

RegressionFit fit_design(const Eigen::MatrixXd& features, const Eigen::VectorXd& target, bool intercept,
                         const std::vector<std::string>& names) {
    const Eigen::MatrixXd a = with_intercept(features, intercept);
    const auto n = static_cast<std::size_t>(a.rows());
    const auto p = static_cast<std::size_t>(a.cols());
    if (n <= p) {
        throw DataError("dof <= 0: " + std::to_string(n) + " observations for " + std::to_string(p) +
                        " coefficients");
    }
    const LeastSquaresSolution ls = solve_least_squares(a, target);

    RegressionFit fit;
    fit.coefficients = ls.beta;
    fit.intercept = intercept;
    fit.feature_count = static_cast<std::size_t>(features.cols());
    fit.n = n;
    fit.dof = static_cast<int>(n - p);
    fit.residual_sd = std::sqrt(ls.sse / fit.dof);
    fit.fitted = ls.fitted;
    fit.residuals = ls.residuals;
    fit.unscaled_covariance = ls.unscaled_covariance;

    const std::span<const double> obs(target.data(), n);
    const std::span<const double> fitted(ls.fitted.data(), n);
    fit.r_squared = metrics::r_squared(obs, fitted);
    fit.rmse = metrics::rmse(obs, fitted);

    // Closed-form leave-one-out residuals e_i / (1 - h_ii).
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double denom = 1.0 - ls.leverage(static_cast<Eigen::Index>(i));
        if (denom <= 1e-12) {
            throw NumericError("LOOCV undefined: observation " + std::to_string(i) + " has leverage 1");
        }
        const double e = ls.residuals(static_cast<Eigen::Index>(i)) / denom;
        ss += e * e;
    }
    fit.loocv = std::sqrt(ss / static_cast<double>(n));

    const double sigma2 = ls.sse / fit.dof;
    for (std::size_t j = 0; j < p; ++j) {
        CoefficientTest t;
        if (intercept && j == 0) {
            t.name = "intercept";
        } else {
            const std::size_t f = intercept ? j - 1 : j;
            t.name = f < names.size() ? names[f] : "x" + std::to_string(f + 1);
        }
        const auto jj = static_cast<Eigen::Index>(j);
        t.estimate = ls.beta(jj);
        t.std_error = std::sqrt(sigma2 * ls.unscaled_covariance(jj, jj));
        if (t.std_error > 0.0) {
            t.t = t.estimate / t.std_error;
            t.p_value = dist::student_t_two_sided_p(t.t, fit.dof);
        } else {
            t.t = std::copysign(std::numeric_limits<double>::infinity(), t.estimate);
            t.p_value = t.estimate == 0.0 ? 1.0 : 0.0;
        }
        t.significant = t.p_value < 0.05;
        fit.tests.push_back(std::move(t));
    }
    return fit;
}

}  // namespace

LagTable cross_correlate(const RegularSeries& x, const RegularSeries& y, int max_lag) {
    if (x.step_days() != y.step_days()) {
        throw DataError("cross-correlation needs series on the same grid step");
    }
    if (max_lag < 0) {
        throw ConfigError("max_lag must be >= 0");
    }
    LagTable table;
    for (int lag = 0; lag <= max_lag; ++lag) {
        std::vector<double> xs;
        std::vector<double> ys;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!x[i]) {
                continue;
            }
            const TimePoint t = x.date_at(i).plus_days(static_cast<long>(lag) * x.step_days());
            if (auto v = y.value_at(t)) {
                xs.push_back(*x[i]);
                ys.push_back(*v);
            }
        }
        if (xs.size() < kMinOverlap) {
            throw DataError("insufficient overlap at lag " + std::to_string(lag) + ": " + std::to_string(xs.size()) +
                            " pairs (need " + std::to_string(kMinOverlap) + ")");
        }
        table.lags.push_back(lag);
        table.r.push_back(metrics::pearson_r(xs, ys));
        table.overlap.push_back(xs.size());
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < table.r.size(); ++i) {
        if (table.r[i] > table.r[best]) {
            best = i;
        }
    }
    table.best_lag = table.lags[best];
    table.best_r = table.r[best];
    table.threshold = metrics::significance_threshold(table.overlap[best]);
    return table;
}

RegressionFit fit_linear(const DesignMatrix& design) {
    if (design.features.rows() != design.target.size()) {
        throw DataError("design rows and target length differ");
    }
    return fit_design(design.features, design.target, design.intercept, design.names);
}

RegressionFit fit_polynomial(std::span<const double> x, std::span<const double> y, int order) {
    if (order < 1) {
        throw ConfigError("polynomial order must be >= 1");
    }
    if (x.size() != y.size()) {
        throw DataError("x and y lengths differ");
    }
    if (x.size() <= static_cast<std::size_t>(order) + 1) {
        throw DataError("polynomial of order " + std::to_string(order) + " needs more than " +
                        std::to_string(order + 1) + " points");
    }
    const auto n = static_cast<Eigen::Index>(x.size());
    const Eigen::MatrixXd xm = Eigen::Map<const Eigen::VectorXd>(x.data(), n);
    const Eigen::VectorXd ym = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    std::vector<std::string> names;
    for (int k = 1; k <= order; ++k) {
        names.push_back(k == 1 ? "x" : "x^" + std::to_string(k));
    }
    RegressionFit fit = fit_design(polynomial_features(xm, order), ym, true, names);
    fit.polynomial_order = order;
    fit.feature_count = 1;
    return fit;
}

Eigen::VectorXd predict(const RegressionFit& fit, const Eigen::MatrixXd& features) {
    return expand(fit, features) * fit.coefficients;
}

Band confidence_band(const RegressionFit& fit, const Eigen::MatrixXd& features, double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw ConfigError("confidence level must be in (0, 1)");
    }
    if (fit.dof <= 0) {
        throw DataError("confidence band needs dof > 0");
    }
    const Eigen::MatrixXd a = expand(fit, features);
    const Eigen::VectorXd pred = a * fit.coefficients;
    const double tq = dist::student_t_quantile(0.5 * (1.0 + level), fit.dof);
    Band band;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const Eigen::VectorXd row = a.row(i).transpose();
        const double se = fit.residual_sd * std::sqrt(std::max(0.0, row.dot(fit.unscaled_covariance * row)));
        band.lower.push_back(pred(i) - tq * se);
        band.fit.push_back(pred(i));
        band.upper.push_back(pred(i) + tq * se);
    }
    return band;
}

LaggedDesign join_lagged(const RegularSeries& target, std::span<const RegularSeries> features,
                         std::span<const std::string> names, int lag) {
    if (features.empty()) {
        throw DataError("regression needs at least one feature series");
    }
    const int step = features.front().step_days();
    for (const auto& f : features) {
        if (f.step_days() != step) {
            throw DataError("feature series use different grid steps");
        }
    }
    if (target.step_days() != step) {
        throw DataError("target and features use different grid steps");
    }
    std::vector<std::vector<double>> rows;
    std::vector<double> ys;
    LaggedDesign out;
    const RegularSeries& base = features.front();
    for (std::size_t i = 0; i < base.size(); ++i) {
        const TimePoint t = base.date_at(i);
        auto y = target.value_at(t.plus_days(static_cast<long>(lag) * step));
        if (!y) {
            continue;
        }
        std::vector<double> row;
        bool complete = true;
        for (const auto& f : features) {
            auto v = f.value_at(t);
            if (!v) {
                complete = false;
                break;
            }
            row.push_back(*v);
        }
        if (!complete) {
            continue;
        }
        rows.push_back(std::move(row));
        ys.push_back(*y);
        out.feature_dates.push_back(t);
    }
    out.design.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(features.size()));
    out.design.target.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < features.size(); ++c) {
            out.design.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
        out.design.target(static_cast<Eigen::Index>(r)) = ys[r];
    }
    out.design.names.assign(names.begin(), names.end());
    return out;
}

}  // namespace wbe::regression
