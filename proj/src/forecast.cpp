#include "wbe/forecast.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "wbe/distributions.hpp"
#include "wbe/error.hpp"
#include "wbe/least_squares.hpp"
#include "wbe/metrics.hpp"

namespace wbe::forecast {

namespace {

void require_positive(std::span<const double> y) {
    for (double v : y) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw DataError("Box-Cox requires positive data");
        }
    }
}

double boxcox_one(double log_y, double lambda) {
    return lambda == 0.0 ? log_y : std::expm1(lambda * log_y) / lambda;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

std::vector<double> boxcox(std::span<const double> y, double lambda) {
    require_positive(y);
    std::vector<double> z;
    z.reserve(y.size());
    for (double v : y) {
        z.push_back(boxcox_one(std::log(v), lambda));
    }
    return z;
}

std::vector<double> inverse_boxcox(std::span<const double> z, double lambda) {
    std::vector<double> y;
    y.reserve(z.size());
    for (double v : z) {
        if (lambda == 0.0) {
            y.push_back(std::exp(v));
            continue;
        }
        const double base = lambda * v + 1.0;
        if (base <= 0.0) {
            if (lambda > 0.0) {
                y.push_back(0.0);
                continue;
            }
            throw NumericError("value outside the inverse Box-Cox domain");
        }
        y.push_back(std::exp(std::log1p(lambda * v) / lambda));
    }
    return y;
}

double boxcox_log_likelihood(std::span<const double> y, double lambda) {
    require_positive(y);
    const auto n = static_cast<double>(y.size());
    double sum_log = 0.0;
    double mean = 0.0;
    std::vector<double> z(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double ly = std::log(y[i]);
        sum_log += ly;
        z[i] = boxcox_one(ly, lambda);
        mean += z[i];
    }
    mean /= n;
    double var = 0.0;
    for (double v : z) {
        var += (v - mean) * (v - mean);
    }
    var /= n;
    if (!(var > 0.0)) {
        throw NumericError("Box-Cox likelihood undefined for constant data");
    }
    return -0.5 * n * std::log(var) + (lambda - 1.0) * sum_log;
}

double boxcox_mle(std::span<const double> y) {
    if (y.size() < 20) {
        throw DataError("Box-Cox estimation needs at least 20 values");
    }
    require_positive(y);
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); })) {
        throw NumericError("Box-Cox likelihood undefined for constant data");
    }
    std::vector<double> log_y(y.size());
    double sum_log = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        log_y[i] = std::log(y[i]);
        sum_log += log_y[i];
    }
    const auto n = static_cast<double>(y.size());
    double best_lambda = 0.0;
    double best_ll = -std::numeric_limits<double>::infinity();
    std::vector<double> z(y.size());
    for (int i = -2000; i <= 2000; ++i) {
        const double lambda = i / 1000.0;
        // Two-pass variance of the transformed values.
        double mean = 0.0;
        for (std::size_t j = 0; j < log_y.size(); ++j) {
            z[j] = boxcox_one(log_y[j], lambda);
            mean += z[j];
        }
        mean /= n;
        double var = 0.0;
        for (double v : z) {
            var += (v - mean) * (v - mean);
        }
        var /= n;
        if (!(var > 0.0) || !std::isfinite(var)) {
            continue;
        }
        const double ll = -0.5 * n * std::log(var) + (lambda - 1.0) * sum_log;
        if (ll > best_ll || (ll == best_ll && std::abs(lambda) < std::abs(best_lambda))) {
            best_ll = ll;
            best_lambda = lambda;
        }
    }
    if (!std::isfinite(best_ll)) {
        throw NumericError("Box-Cox likelihood undefined for constant data");
    }
    return best_lambda;
}

AdfResult adf_test(std::span<const double> y, AdfDecision decision, double critical_value) {
    if (y.size() < 20) {
        throw DataError("ADF test needs at least 20 values, got " + std::to_string(y.size()));
    }
    // Rows t = 2..n-1: Δy_t on [1, y_{t-1}, Δy_{t-1}].
    const auto rows = static_cast<Eigen::Index>(y.size() - 2);
    Eigen::MatrixXd a(rows, 3);
    Eigen::VectorXd b(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto t = static_cast<std::size_t>(r) + 2;
        a(r, 0) = 1.0;
        a(r, 1) = y[t - 1];
        a(r, 2) = y[t - 1] - y[t - 2];
        b(r) = y[t] - y[t - 1];
    }
    const auto ls = solve_least_squares(a, b);
    const double dof = static_cast<double>(rows - 3);
    const double sigma2 = ls.sse / dof;

    AdfResult res;
    res.alpha = ls.beta(0);
    res.beta_hat = ls.beta(1);
    res.gamma = ls.beta(2);
    res.std_error = std::sqrt(sigma2 * ls.unscaled_covariance(1, 1));
    res.t_stat = res.std_error > 0.0 ? res.beta_hat / res.std_error : -std::numeric_limits<double>::infinity();
    res.n_obs = static_cast<std::size_t>(rows);
    if (decision == AdfDecision::DickeyFuller) {
        res.critical_value = critical_value;
        res.stationary = res.t_stat < critical_value;
    } else {
        res.critical_value = dist::student_t_quantile(0.975, dof);
        res.stationary = std::abs(res.t_stat) < res.critical_value;
    }
    return res;
}

AdfResult adf_test(const RegularSeries& y, AdfDecision decision, double critical_value) {
    return adf_test(y.dense_values("the ADF test"), decision, critical_value);
}

std::vector<double> ses_forecast(std::span<const double> y, double alpha, int horizon) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ConfigError("SES alpha must be in (0, 1]");
    }
    if (y.empty()) {
        throw DataError("SES needs at least one observation");
    }
    if (horizon < 1) {
        throw ConfigError("horizon must be >= 1");
    }
    double level = y[0];
    for (double v : y) {
        level = alpha * v + (1.0 - alpha) * level;
    }
    // Feeding ŷ back as the observation leaves the level unchanged: α·ŷ + (1-α)·ŷ = ŷ.
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(horizon));
    for (int h = 0; h < horizon; ++h) {
        out.push_back(level);
        level = alpha * level + (1.0 - alpha) * level;
    }
    return out;
}

ArFit ar_fit(std::span<const double> y, int p) {
    if (p < 1) {
        throw ConfigError("AR order must be >= 1");
    }
    const auto up = static_cast<std::size_t>(p);
    if (y.size() <= 2 * up + 2) {
        throw DataError("AR(" + std::to_string(p) + ") needs more than " + std::to_string(2 * up + 2) +
                        " observations, got " + std::to_string(y.size()));
    }
    const auto rows = static_cast<Eigen::Index>(y.size() - up);
    Eigen::MatrixXd a(rows, p + 1);
    Eigen::VectorXd b(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto t = static_cast<std::size_t>(r) + up;
        a(r, 0) = 1.0;
        for (int j = 1; j <= p; ++j) {
            a(r, j) = y[t - static_cast<std::size_t>(j)];
        }
        b(r) = y[t];
    }
    LeastSquaresSolution ls;
    try {
        ls = solve_least_squares(a, b, false);
    } catch (const NumericError&) {
        throw NumericError("singular lag matrix for AR(" + std::to_string(p) + ")");
    }
    ArFit fit;
    fit.c = ls.beta(0);
    fit.phi.assign(ls.beta.data() + 1, ls.beta.data() + 1 + p);
    fit.residual_sse = ls.sse;
    fit.n_obs = static_cast<std::size_t>(rows);
    return fit;
}

std::vector<double> ar_forecast(const ArFit& model, std::span<const double> y, int horizon) {
    const auto p = model.phi.size();
    if (y.size() < p) {
        throw DataError("AR forecast needs at least p = " + std::to_string(p) + " observations");
    }
    if (horizon < 1) {
        throw ConfigError("horizon must be >= 1");
    }
    std::vector<double> hist(y.end() - static_cast<long>(p), y.end());
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(horizon));
    for (int h = 0; h < horizon; ++h) {
        double v = model.c;
        for (std::size_t j = 1; j <= p; ++j) {
            v += model.phi[j - 1] * hist[hist.size() - j];
        }
        out.push_back(v);
        hist.push_back(v);
    }
    return out;
}

std::string_view to_string(Method m) { return m == Method::Ses ? "ses" : "ar"; }

std::string_view to_string(TransformKind t) {
    switch (t) {
        case TransformKind::None:
            return "none";
        case TransformKind::Difference:
            return "difference";
        case TransformKind::BoxCoxDifference:
            return "boxcox_difference";
    }
    return "?";
}

Method parse_method(std::string_view s) {
    const auto v = lower(s);
    if (v == "ses") {
        return Method::Ses;
    }
    if (v == "ar") {
        return Method::Ar;
    }
    throw ConfigError("unknown forecast method '" + std::string(s) + "'");
}

TransformKind parse_transform(std::string_view s) {
    const auto v = lower(s);
    if (v == "none") {
        return TransformKind::None;
    }
    if (v == "difference" || v == "diff") {
        return TransformKind::Difference;
    }
    if (v == "boxcox_difference" || v == "boxcox_then_difference" || v == "boxcox+difference") {
        return TransformKind::BoxCoxDifference;
    }
    throw ConfigError("unknown transform '" + std::string(s) + "'");
}

TransformChain TransformChain::fit(TransformKind kind, std::span<const double> y, std::optional<double> lambda) {
    if (y.empty()) {
        throw DataError("transform needs at least one observation");
    }
    TransformChain chain;
    chain.kind_ = kind;
    if (kind == TransformKind::BoxCoxDifference) {
        chain.lambda_ = lambda ? *lambda : boxcox_mle(y);
        const auto z = boxcox(y, *chain.lambda_);
        chain.first_level_ = z.front();
        chain.last_level_ = z.back();
    } else {
        chain.first_level_ = y.front();
        chain.last_level_ = y.back();
    }
    return chain;
}

std::vector<double> TransformChain::apply(std::span<const double> y) const {
    switch (kind_) {
        case TransformKind::None:
            return {y.begin(), y.end()};
        case TransformKind::Difference:
            return difference(y);
        case TransformKind::BoxCoxDifference:
            return difference(boxcox(y, *lambda_));
    }
    return {};
}

std::vector<double> TransformChain::invert_forecast(std::span<const double> f) const {
    if (kind_ == TransformKind::None) {
        return {f.begin(), f.end()};
    }
    std::vector<double> levels;
    levels.reserve(f.size());
    double level = last_level_;
    for (double d : f) {
        level += d;
        levels.push_back(level);
    }
    if (kind_ == TransformKind::Difference) {
        return levels;
    }
    return inverse_boxcox(levels, *lambda_);
}

std::vector<double> TransformChain::invert_observed(std::span<const double> w) const {
    if (kind_ == TransformKind::None) {
        return {w.begin(), w.end()};
    }
    auto levels = undifference(w, first_level_);
    if (kind_ == TransformKind::Difference) {
        return levels;
    }
    return inverse_boxcox(levels, *lambda_);
}

ForecastResult fit_and_forecast(std::span<const double> y, Method method, TransformKind transform,
                                const ForecastParams& params, int horizon) {
    ForecastResult res;
    res.model.method = method;
    res.model.transform = TransformChain::fit(transform, y, params.lambda);
    const auto w = res.model.transform.apply(y);
    std::vector<double> f;
    if (method == Method::Ses) {
        res.model.alpha = params.alpha;
        f = ses_forecast(w, params.alpha, horizon);
    } else {
        res.model.ar = ar_fit(w, params.order);
        f = ar_forecast(res.model.ar, w, horizon);
    }
    res.values = res.model.transform.invert_forecast(f);
    return res;
}

ForecastResult fit_and_forecast(const RegularSeries& y, Method method, TransformKind transform,
                                const ForecastParams& params, int horizon) {
    return fit_and_forecast(y.dense_values("forecasting"), method, transform, params, horizon);
}

const CellResult* EvaluationReport::best(Method method, int horizon, std::optional<TransformKind> transform) const {
    const CellResult* out = nullptr;
    for (const auto& c : cells) {
        if (c.method != method || c.horizon != horizon || (transform && c.transform != *transform) ||
            !std::isfinite(c.rmse)) {
            continue;
        }
        if (!out || c.rmse < out->rmse) {
            out = &c;
        }
    }
    return out;
}

const CellResult* EvaluationReport::best_by_aic(Method method, int horizon) const {
    const CellResult* out = nullptr;
    for (const auto& c : cells) {
        if (c.method != method || c.horizon != horizon || !std::isfinite(c.aic)) {
            continue;
        }
        if (!out || c.aic < out->aic) {
            out = &c;
        }
    }
    return out;
}

std::size_t default_first_origin(const EvaluationGrid& grid) {
    auto first = static_cast<std::size_t>(std::max(grid.p_max, 1));
    const bool differencing = std::any_of(grid.transforms.begin(), grid.transforms.end(),
                                          [](TransformKind t) { return t != TransformKind::None; });
    if (std::find(grid.methods.begin(), grid.methods.end(), Method::Ar) != grid.methods.end() &&
        !grid.orders.empty()) {
        const auto max_p = static_cast<std::size_t>(*std::max_element(grid.orders.begin(), grid.orders.end()));
        first = std::max(first, 2 * max_p + 3 + (differencing ? 1 : 0));
    }
    return std::max<std::size_t>(first, differencing ? 2 : 1);
}

EvaluationReport post_sample_evaluate(std::span<const double> y, const EvaluationGrid& grid) {
    if (grid.horizons.empty() || grid.methods.empty() || grid.transforms.empty()) {
        throw ConfigError("evaluation grid needs methods, transforms and horizons");
    }
    const int max_h = *std::max_element(grid.horizons.begin(), grid.horizons.end());
    if (*std::min_element(grid.horizons.begin(), grid.horizons.end()) < 1) {
        throw ConfigError("horizons must be >= 1");
    }
    const std::size_t n = y.size();
    EvaluationReport report;
    report.series_length = n;
    report.first_origin = grid.first_origin ? *grid.first_origin : default_first_origin(grid);
    const std::size_t min_len =
        std::max(static_cast<std::size_t>(grid.p_max), report.first_origin) + static_cast<std::size_t>(max_h) + 10;
    if (n < min_len) {
        throw DataError("series too short for post-sample evaluation: " + std::to_string(n) +
                        " values, need at least " + std::to_string(min_len));
    }

    const bool needs_lambda = std::find(grid.transforms.begin(), grid.transforms.end(),
                                        TransformKind::BoxCoxDifference) != grid.transforms.end();
    if (grid.lambda) {
        report.lambda = grid.lambda;
        report.lambda_scope = "fixed";
    } else if (needs_lambda) {
        try {
            report.lambda = boxcox_mle(y);
            report.lambda_scope = "full_series";
        } catch (const std::exception&) {
            report.lambda_scope = "unavailable";
        }
    }

    for (Method method : grid.methods) {
        for (TransformKind transform : grid.transforms) {
            std::vector<double> params;
            if (method == Method::Ses) {
                params = grid.alphas;
            } else {
                params.assign(grid.orders.begin(), grid.orders.end());
            }
            for (double param : params) {
                ForecastParams fp;
                fp.alpha = param;
                fp.order = static_cast<int>(param);
                fp.lambda = report.lambda;

                // One fit per origin serves every horizon.
                std::vector<CellResult> cells(grid.horizons.size());
                std::vector<double> sse(grid.horizons.size(), 0.0);
                for (std::size_t c = 0; c < cells.size(); ++c) {
                    cells[c].method = method;
                    cells[c].transform = transform;
                    cells[c].parameter = param;
                    cells[c].horizon = grid.horizons[c];
                }
                for (std::size_t origin = report.first_origin; origin + 1 <= n; ++origin) {
                    const std::size_t room = n - origin;
                    const int reach = static_cast<int>(std::min<std::size_t>(room, static_cast<std::size_t>(max_h)));
                    bool any = false;
                    for (std::size_t c = 0; c < cells.size(); ++c) {
                        if (static_cast<std::size_t>(grid.horizons[c]) <= room) {
                            ++cells[c].n_origins;
                            any = true;
                        }
                    }
                    if (!any) {
                        break;
                    }
                    std::vector<double> values;
                    bool ok = transform != TransformKind::BoxCoxDifference || report.lambda.has_value();
                    if (ok) {
                        try {
                            // Only y[0, origin) is visible to the model.
                            values = fit_and_forecast(y.first(origin), method, transform, fp, reach).values;
                        } catch (const std::exception&) {
                            ok = false;
                        }
                    }
                    for (std::size_t c = 0; c < cells.size(); ++c) {
                        const auto h = static_cast<std::size_t>(grid.horizons[c]);
                        if (h > room) {
                            continue;
                        }
                        if (!ok) {
                            ++cells[c].failed_origins;
                            continue;
                        }
                        const double observed = y[origin + h - 1];
                        const double e_end = values[h - 1] - observed;
                        if (grid.scoring == Scoring::Endpoint) {
                            sse[c] += e_end * e_end;
                        } else {
                            double acc = 0.0;
                            for (std::size_t s = 0; s < h; ++s) {
                                const double e = values[s] - y[origin + s];
                                acc += e * e;
                            }
                            sse[c] += acc / static_cast<double>(h);
                        }
                        cells[c].origins.push_back({origin, values[h - 1], observed});
                    }
                }
                const std::size_t k = method == Method::Ses ? 1 : static_cast<std::size_t>(param) + 1;
                for (std::size_t c = 0; c < cells.size(); ++c) {
                    auto& cell = cells[c];
                    if (cell.failed_origins == 0 && std::isfinite(sse[c])) {
                        cell.rmse = std::sqrt(sse[c] / static_cast<double>(cell.n_origins));
                        cell.aic = sse[c] > 0.0 ? metrics::aic_ls(cell.n_origins, sse[c], k)
                                                : -std::numeric_limits<double>::infinity();
                    } else {
                        cell.rmse = std::numeric_limits<double>::quiet_NaN();
                        cell.aic = std::numeric_limits<double>::quiet_NaN();
                    }
                    report.cells.push_back(std::move(cell));
                }
            }
        }
    }
    return report;
}

EvaluationReport post_sample_evaluate(const RegularSeries& y, const EvaluationGrid& grid) {
    return post_sample_evaluate(y.dense_values("post-sample evaluation"), grid);
}

std::vector<QQPoint> qq_normal(std::span<const double> y) {
    if (y.empty()) {
        throw DataError("Q-Q data needs at least one value");
    }
    std::vector<double> sorted(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    std::vector<QQPoint> out;
    out.reserve(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        // Blom plotting positions.
        const double p = (static_cast<double>(i + 1) - 0.375) / (n + 0.25);
        out.push_back({dist::normal_quantile(p), sorted[i]});
    }
    return out;
}

}  // namespace wbe::forecast
