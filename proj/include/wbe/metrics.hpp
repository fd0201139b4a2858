#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace wbe::metrics {

// Conventions: x = observations, y = model values, equal length.

double rmse(std::span<const double> x, std::span<const double> y);

/// 1 - SSres/SStot with SStot about mean(x). Throws DataError for constant x.
double r_squared(std::span<const double> x, std::span<const double> y);

/// Mean of 1 - |y-x|/(|y|+|x|). A pair with |x|+|y| = 0 is an error, not skipped.
double msim(std::span<const double> x, std::span<const double> y);

double pearson_r(std::span<const double> x, std::span<const double> y);

/// |r| above 1.96/sqrt(n) is significant at p < 0.05.
double significance_threshold(std::size_t n);

/// Least-squares AIC, n*ln(sse/n) + 2k.
double aic_ls(std::size_t n, double sse, std::size_t k);

/// Fits on `train` (all indices except `held_out`) and returns the prediction for `held_out`.
using FoldPredictor = std::function<double(std::span<const std::size_t> train, std::size_t held_out)>;

/// RMSE of leave-one-out predictions against `observed`. Fold failures are rethrown naming the fold.
double loocv_score(std::span<const double> observed, const FoldPredictor& fit_predict);

double mean(std::span<const double> v);

/// Linear interpolation between closest ranks (R type 7); p in [0, 1].
double percentile(std::span<const double> values, double p);

}  // namespace wbe::metrics
