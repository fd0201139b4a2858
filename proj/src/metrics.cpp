#include "wbe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wbe/error.hpp"

namespace wbe::metrics {

namespace {

void check_paired(std::span<const double> x, std::span<const double> y, std::size_t min_len) {
    if (x.size() != y.size()) {
        throw DataError("length mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    }
    if (x.size() < min_len) {
        throw DataError("need at least " + std::to_string(min_len) + " pairs");
    }
}

}  // namespace

double mean(std::span<const double> v) {
    if (v.empty()) {
        throw DataError("mean of empty sequence");
    }
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double rmse(std::span<const double> x, std::span<const double> y) {
    check_paired(x, y, 1);
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(x.size()));
}

double r_squared(std::span<const double> x, std::span<const double> y) {
    check_paired(x, y, 1);
    const double mx = mean(x);
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        ss_res += (x[i] - y[i]) * (x[i] - y[i]);
        ss_tot += (x[i] - mx) * (x[i] - mx);
    }
    if (ss_tot == 0.0) {
        throw DataError("undefined R²: observations are constant");
    }
    return 1.0 - ss_res / ss_tot;
}

double msim(std::span<const double> x, std::span<const double> y) {
    check_paired(x, y, 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double den = std::abs(x[i]) + std::abs(y[i]);
        if (den == 0.0) {
            throw DataError("MSIM undefined: pair " + std::to_string(i) + " has |x|+|y| = 0");
        }
        acc += 1.0 - std::abs(y[i] - x[i]) / den;
    }
    return acc / static_cast<double>(x.size());
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    check_paired(x, y, 2);
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw DataError("Pearson r undefined for a constant series");
    }
    return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

double significance_threshold(std::size_t n) {
    if (n < 2) {
        throw DataError("significance threshold needs n >= 2");
    }
    return 1.96 / std::sqrt(static_cast<double>(n));
}

double aic_ls(std::size_t n, double sse, std::size_t k) {
    if (n < 1) {
        throw DataError("AIC needs n >= 1");
    }
    if (!(sse > 0.0)) {
        throw NumericError("perfect fit, AIC undefined in this form");
    }
    const double nn = static_cast<double>(n);
    return nn * std::log(sse / nn) + 2.0 * static_cast<double>(k);
}

double loocv_score(std::span<const double> observed, const FoldPredictor& fit_predict) {
    const std::size_t n = observed.size();
    if (n < 2) {
        throw DataError("LOOCV needs at least 2 observations");
    }
    std::vector<std::size_t> train(n - 1);
    double ss = 0.0;
    for (std::size_t held = 0; held < n; ++held) {
        std::size_t k = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i != held) {
                train[k++] = i;
            }
        }
        double pred = 0.0;
        try {
            pred = fit_predict(train, held);
        } catch (const std::exception& e) {
            throw NumericError("LOOCV fold " + std::to_string(held) + " failed: " + e.what());
        }
        const double e = observed[held] - pred;
        ss += e * e;
    }
    return std::sqrt(ss / static_cast<double>(n));
}

double percentile(std::span<const double> values, double p) {
    if (values.empty()) {
        throw DataError("percentile of empty sequence");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError("percentile level must be in [0, 1]");
    }
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace wbe::metrics
