#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wbe/date.hpp"
#include "wbe/series.hpp"

namespace wbe::regression {

/// n observations of d features (no intercept column) plus the target.
struct DesignMatrix {
    Eigen::MatrixXd features;
    Eigen::VectorXd target;
    bool intercept = true;
    std::vector<std::string> names;  // optional, one per feature
};

struct CoefficientTest {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    double t = 0.0;
    double p_value = 1.0;
    bool significant = false;  // two-sided, 5 %
};

struct RegressionFit {
    /// Intercept first (when fitted), then one coefficient per feature column.
    Eigen::VectorXd coefficients;
    bool intercept = true;
    /// 0 for a plain linear model; otherwise the single feature is expanded to x, x², ..., x^order.
    int polynomial_order = 0;
    std::size_t feature_count = 0;

    std::size_t n = 0;
    int dof = 0;
    double residual_sd = 0.0;
    double r_squared = 0.0;
    double rmse = 0.0;
    double loocv = 0.0;
    std::vector<CoefficientTest> tests;

    Eigen::MatrixXd unscaled_covariance;
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
};

struct LagTable {
    std::vector<int> lags;
    std::vector<double> r;
    std::vector<std::size_t> overlap;
    int best_lag = 0;
    double best_r = 0.0;
    /// 1.96/sqrt(n) at the best lag's overlap.
    double threshold = 0.0;
};

struct Band {
    std::vector<double> lower;
    std::vector<double> fit;
    std::vector<double> upper;
};

/// Pearson r between x(t) and y(t + lag·step) for lag in [0, max_lag]; series are joined on dates.
/// Ties resolve to the smallest lag. Every lag needs at least 10 overlapping pairs.
LagTable cross_correlate(const RegularSeries& x, const RegularSeries& y, int max_lag);

RegressionFit fit_linear(const DesignMatrix& design);

/// Univariate least-squares polynomial y ≈ b0 + b1 x + ... + b_order x^order.
RegressionFit fit_polynomial(std::span<const double> x, std::span<const double> y, int order);

/// Rows of `features` are raw feature vectors (for polynomial fits: one column holding x).
Eigen::VectorXd predict(const RegressionFit& fit, const Eigen::MatrixXd& features);

/// Two-sided band for the mean response using the t quantile at (1 + level)/2.
Band confidence_band(const RegressionFit& fit, const Eigen::MatrixXd& features, double level = 0.90);

/// Joined regression rows after shifting the target by `lag` steps (target at t + lag, features at t).
struct LaggedDesign {
    DesignMatrix design;
    std::vector<TimePoint> feature_dates;
};

/// Rows where any feature or the target is missing are dropped. All series must share the step.
LaggedDesign join_lagged(const RegularSeries& target, std::span<const RegularSeries> features,
                         std::span<const std::string> names, int lag);

}  // namespace wbe::regression
