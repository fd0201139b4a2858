#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wbe/series.hpp"

namespace wbe::forecast {

// ---------------------------------------------------------------------------
// Box-Cox

/// (y^λ - 1)/λ, or ln y for λ = 0. Throws DataError("Box-Cox requires positive data").
std::vector<double> boxcox(std::span<const double> y, double lambda);

/// Inverse transform. For λ > 0 a base λz+1 below zero is clamped to zero; for λ < 0 it throws NumericError.
std::vector<double> inverse_boxcox(std::span<const double> z, double lambda);

/// l(λ) = -n/2 · ln(σ̂²(λ)) + (λ - 1) Σ ln y.
double boxcox_log_likelihood(std::span<const double> y, double lambda);

/// Grid search over [-2, 2] with step 0.001; ties go to the smallest |λ|. Needs n >= 20.
double boxcox_mle(std::span<const double> y);

// ---------------------------------------------------------------------------
// Stationarity

enum class AdfDecision {
    DickeyFuller,  // stationary iff t < critical value (default -2.86)
    PlainT,        // stationary iff β is not significant in a two-sided 5 % t-test
};

struct AdfResult {
    double alpha = 0.0;
    double beta_hat = 0.0;
    double gamma = 0.0;
    double std_error = 0.0;
    double t_stat = 0.0;
    double critical_value = 0.0;
    std::size_t n_obs = 0;
    bool stationary = false;
};

inline constexpr double kDickeyFuller5pct = -2.86;

/// OLS fit of Δy_t = α + β·y_{t-1} + γ·Δy_{t-1}.
AdfResult adf_test(std::span<const double> y, AdfDecision decision = AdfDecision::DickeyFuller,
                   double critical_value = kDickeyFuller5pct);
AdfResult adf_test(const RegularSeries& y, AdfDecision decision = AdfDecision::DickeyFuller,
                   double critical_value = kDickeyFuller5pct);

// ---------------------------------------------------------------------------
// Models

/// ŷ_{t+1} = α·y_t + (1-α)·ŷ_t with ŷ_0 = y_0; forecasts feed back as observations, so every
/// horizon step equals the one-step forecast.
std::vector<double> ses_forecast(std::span<const double> y, double alpha, int horizon);

struct ArFit {
    double c = 0.0;
    std::vector<double> phi;  // phi[j-1] multiplies y_{t-j}
    double residual_sse = 0.0;
    std::size_t n_obs = 0;    // rows in the lag regression
    int order() const { return static_cast<int>(phi.size()); }
};

/// OLS on the lag matrix; needs n > 2p + 2.
ArFit ar_fit(std::span<const double> y, int p);

/// Iterated one-step predictions with ε = 0.
std::vector<double> ar_forecast(const ArFit& model, std::span<const double> y, int horizon);

// ---------------------------------------------------------------------------
// Transform chain and composition

enum class Method { Ses, Ar };
enum class TransformKind { None, Difference, BoxCoxDifference };

std::string_view to_string(Method m);
std::string_view to_string(TransformKind t);
Method parse_method(std::string_view s);
TransformKind parse_transform(std::string_view s);

class TransformChain {
public:
    /// Estimates λ by boxcox_mle when the chain needs one and `lambda` is empty.
    static TransformChain fit(TransformKind kind, std::span<const double> y, std::optional<double> lambda = {});

    TransformKind kind() const { return kind_; }
    std::optional<double> lambda() const { return lambda_; }

    /// The working series a model is fitted on.
    std::vector<double> apply(std::span<const double> y) const;
    /// Maps forecasts of the working series back to the original scale, continuing from the last observation.
    std::vector<double> invert_forecast(std::span<const double> f) const;
    /// Reconstructs the observed window from its working series.
    std::vector<double> invert_observed(std::span<const double> w) const;

private:
    TransformKind kind_ = TransformKind::None;
    std::optional<double> lambda_;
    double first_level_ = 0.0;  // transformed y_0
    double last_level_ = 0.0;   // transformed y_{n-1}
};

struct ForecastParams {
    double alpha = 0.7;
    int order = 3;
    std::optional<double> lambda;
};

struct ForecastModel {
    Method method = Method::Ses;
    double alpha = 0.0;
    ArFit ar;
    TransformChain transform;
};

struct ForecastResult {
    std::vector<double> values;  // original scale
    ForecastModel model;
};

/// Transform, fit, iterate, undo differencing, undo Box-Cox (naive back-transform).
ForecastResult fit_and_forecast(std::span<const double> y, Method method, TransformKind transform,
                                const ForecastParams& params, int horizon);
ForecastResult fit_and_forecast(const RegularSeries& y, Method method, TransformKind transform,
                                const ForecastParams& params, int horizon);

// ---------------------------------------------------------------------------
// Post-sample (walk-forward) evaluation

enum class Scoring {
    Endpoint,  // error at the horizon endpoint only
    Average,   // mean squared error over steps 1..horizon
};

struct EvaluationGrid {
    std::vector<Method> methods{Method::Ses, Method::Ar};
    std::vector<TransformKind> transforms{TransformKind::None, TransformKind::Difference,
                                          TransformKind::BoxCoxDifference};
    std::vector<double> alphas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<int> orders{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<int> horizons{7, 14};  // in steps of the series
    int p_max = 10;
    Scoring scoring = Scoring::Endpoint;
    /// Fixed λ for Box-Cox cells; estimated once on the full series when empty.
    std::optional<double> lambda;
    /// First origin (training length); defaults to the smallest length that fits AR(p_max) in every transform.
    std::optional<std::size_t> first_origin;
};

struct OriginForecast {
    std::size_t origin = 0;  // number of training observations
    double forecast = 0.0;   // at the horizon endpoint
    double observed = 0.0;
};

struct CellResult {
    Method method = Method::Ses;
    TransformKind transform = TransformKind::None;
    double parameter = 0.0;  // α or p
    int horizon = 0;
    double rmse = 0.0;       // NaN when any origin failed
    double aic = 0.0;
    std::size_t n_origins = 0;
    std::size_t failed_origins = 0;
    std::vector<OriginForecast> origins;
};

struct EvaluationReport {
    std::vector<CellResult> cells;
    std::size_t series_length = 0;
    std::size_t first_origin = 0;
    std::optional<double> lambda;
    std::string lambda_scope;  // "fixed", "full_series" or "unavailable"

    /// Lowest-RMSE cell for a method and horizon (optionally restricted to one transform).
    const CellResult* best(Method method, int horizon, std::optional<TransformKind> transform = {}) const;
    /// Lowest-AIC cell for a method and horizon.
    const CellResult* best_by_aic(Method method, int horizon) const;
};

/// Minimum training length used when EvaluationGrid::first_origin is empty.
std::size_t default_first_origin(const EvaluationGrid& grid);

EvaluationReport post_sample_evaluate(std::span<const double> y, const EvaluationGrid& grid);
EvaluationReport post_sample_evaluate(const RegularSeries& y, const EvaluationGrid& grid);

/// Theoretical normal quantiles vs sorted sample values (Q-Q plot data).
struct QQPoint {
    double theoretical = 0.0;
    double sample = 0.0;
};
std::vector<QQPoint> qq_normal(std::span<const double> y);

}  // namespace wbe::forecast
