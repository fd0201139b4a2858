#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "support.hpp"
#include "wbe/distributions.hpp"
#include "wbe/error.hpp"
#include "wbe/forecast.hpp"
#include "wbe/smoothing.hpp"

using namespace wbe;
using namespace wbe::forecast;

using V = std::vector<double>;

namespace {

V lognormals(std::mt19937_64& rng, std::size_t n) {
    auto z = testing::normals(rng, n);
    for (auto& v : z) {
        v = std::exp(v);
    }
    return z;
}

// Normal-equation OLS of Δy_t on (1, y_{t-1}, Δy_{t-1}).
std::pair<double, double> naive_adf(const V& y) {
    const std::size_t n = y.size();
    Eigen::MatrixXd x(static_cast<long>(n - 2), 3);
    Eigen::VectorXd d(static_cast<long>(n - 2));
    for (std::size_t t = 2; t < n; ++t) {
        const long r = static_cast<long>(t - 2);
        x(r, 0) = 1.0;
        x(r, 1) = y[t - 1];
        x(r, 2) = y[t - 1] - y[t - 2];
        d(r) = y[t] - y[t - 1];
    }
    const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
    const Eigen::VectorXd b = xtx_inv * x.transpose() * d;
    const double s2 = (d - x * b).squaredNorm() / static_cast<double>(x.rows() - 3);
    return {b(1), b(1) / std::sqrt(s2 * xtx_inv(1, 1))};
}

}  // namespace

TEST_CASE("box-cox transform") {
    const V y{0.5, 1.0, 2.0, 7.5};
    const auto one = boxcox(y, 1.0);
    const auto zero = boxcox(y, 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(one[i] == doctest::Approx(y[i] - 1.0).epsilon(1e-15));
        CHECK(zero[i] == doctest::Approx(std::log(y[i])).epsilon(1e-15));
    }
    CHECK(boxcox(V{4.0}, 0.5)[0] == doctest::Approx(2.0));
    CHECK_THROWS_WITH_AS(boxcox(V{1.0, 0.0}, 0.5), "Box-Cox requires positive data", DataError);
    CHECK_THROWS_AS(boxcox(V{-1.0}, 0.0), DataError);

    std::mt19937_64 rng(1);
    const auto data = lognormals(rng, 200);
    for (double lambda : {-1.0, 0.0, 0.117, 1.0, 1.7}) {
        const auto back = inverse_boxcox(boxcox(data, lambda), lambda);
        for (std::size_t i = 0; i < data.size(); ++i) {
            CHECK(testing::rel_err(back[i], data[i]) < 1e-10);
        }
    }
    CHECK(inverse_boxcox(V{-5.0}, 0.5)[0] == 0.0);
    CHECK_THROWS_AS(inverse_boxcox(V{5.0}, -0.5), NumericError);
}

TEST_CASE("box-cox likelihood and estimate") {
    std::mt19937_64 rng(2);
    const auto y = lognormals(rng, 300);
    // Direct evaluation of the profile likelihood.
    for (double lambda : {-0.5, 0.0, 0.3}) {
        const auto z = boxcox(y, lambda);
        const double mean = std::accumulate(z.begin(), z.end(), 0.0) / z.size();
        double var = 0;
        double slog = 0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            var += (z[i] - mean) * (z[i] - mean) / z.size();
            slog += std::log(y[i]);
        }
        CHECK(boxcox_log_likelihood(y, lambda) ==
              doctest::Approx(-0.5 * z.size() * std::log(var) + (lambda - 1) * slog).epsilon(1e-12));
    }
    const double hat = boxcox_mle(y);
    CHECK(boxcox_log_likelihood(y, hat) >= boxcox_log_likelihood(y, hat + 0.001));
    CHECK(boxcox_log_likelihood(y, hat) >= boxcox_log_likelihood(y, hat - 0.001));
    CHECK(std::abs(hat * 1000 - std::round(hat * 1000)) < 1e-9);

    int near_zero = 0;
    double mean_one = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        near_zero += std::abs(boxcox_mle(lognormals(rng, 1000))) <= 0.1 ? 1 : 0;
        mean_one += boxcox_mle(testing::normals(rng, 1000, 100.0, 5.0)) / 20.0;
    }
    CHECK(near_zero >= 18);
    // A 5 % coefficient of variation leaves single estimates spread by about ±0.5.
    CHECK(std::abs(mean_one - 1.0) <= 0.3);

    CHECK_THROWS_AS(boxcox_mle(V(19, 2.0)), DataError);
    V neg = lognormals(rng, 30);
    neg[4] = -1.0;
    CHECK_THROWS_AS(boxcox_mle(neg), DataError);
    CHECK_THROWS_AS(boxcox_mle(V(30, 2.0)), NumericError);
}

TEST_CASE("adf regression matches a normal-equation oracle") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto y = trial % 2 ? testing::random_walk(rng, 200) : testing::ar_path(rng, V{0.5}, 1.0, 200);
        const auto r = adf_test(y);
        const auto [beta, t] = naive_adf(y);
        CHECK(r.beta_hat == doctest::Approx(beta).epsilon(1e-9));
        CHECK(r.t_stat == doctest::Approx(t).epsilon(1e-9));
        CHECK(r.n_obs == 198);
        CHECK(r.critical_value == kDickeyFuller5pct);
        CHECK(r.stationary == (r.t_stat < kDickeyFuller5pct));
        const auto plain = adf_test(y, AdfDecision::PlainT);
        CHECK(plain.stationary == (dist::student_t_two_sided_p(plain.t_stat, 195) >= 0.05));
    }
    CHECK_THROWS_AS(adf_test(V(19, 1.0)), DataError);
}

TEST_CASE("adf decisions") {
    std::mt19937_64 rng(4);
    int rw = 0;
    int ar = 0;
    int trend = 0;
    for (int trial = 0; trial < 40; ++trial) {
        rw += adf_test(testing::random_walk(rng, 500)).stationary ? 0 : 1;
        ar += adf_test(testing::ar_path(rng, V{0.2}, 0.0, 500)).stationary ? 1 : 0;
        auto e = testing::normals(rng, 500, 0.0, 1.0);
        for (std::size_t t = 0; t < e.size(); ++t) {
            e[t] += 0.5 * static_cast<double>(t);
        }
        trend += adf_test(e).stationary ? 0 : 1;
    }
    CHECK(rw >= 36);
    CHECK(ar >= 36);
    CHECK(trend >= 36);
}

TEST_CASE("ses") {
    CHECK(ses_forecast(V{10, 20}, 0.5, 1) == V{15.0});
    CHECK(ses_forecast(V{10, 20, 4}, 1.0, 3) == V{4.0, 4.0, 4.0});
    // ŷ1 = 10, ŷ2 = .3·20+.7·10 = 13, ŷ3 = .3·4+.7·13 = 10.3
    const auto f = ses_forecast(V{10, 20, 4}, 0.3, 4);
    for (double v : f) {
        CHECK(v == doctest::Approx(10.3).epsilon(1e-14));
    }
    for (double a : {0.1, 0.55, 1.0}) {
        for (double v : ses_forecast(V(12, 3.25), a, 9)) {
            CHECK(v == doctest::Approx(3.25).epsilon(1e-14));
        }
    }
    CHECK_THROWS_AS(ses_forecast(V{1}, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(ses_forecast(V{1}, 1.1, 1), ConfigError);
    CHECK_THROWS_AS(ses_forecast(V{}, 0.5, 1), DataError);
    CHECK_THROWS_AS(ses_forecast(V{1}, 0.5, 0), ConfigError);
}

TEST_CASE("ar fit recovers coefficients") {
    std::mt19937_64 rng(5);
    int ar1 = 0;
    int ar2 = 0;
    int white = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto f1 = ar_fit(testing::ar_path(rng, V{0.8}, 0.0, 2000), 1);
        ar1 += f1.phi[0] >= 0.75 && f1.phi[0] <= 0.85 ? 1 : 0;
        const auto f2 = ar_fit(testing::ar_path(rng, V{0.5, -0.3}, 0.0, 2000), 2);
        ar2 += std::abs(f2.phi[0] - 0.5) <= 0.05 && std::abs(f2.phi[1] + 0.3) <= 0.05 ? 1 : 0;
        // White noise: se ≈ 1/sqrt(n).
        const auto fw = ar_fit(testing::normals(rng, 2000), 3);
        const double se = 1.0 / std::sqrt(2000.0);
        white += std::all_of(fw.phi.begin(), fw.phi.end(), [&](double p) { return std::abs(p) <= 2 * se; }) ? 1 : 0;
    }
    CHECK(ar1 >= 95);
    CHECK(ar2 >= 95);
    CHECK(white >= 80);

    const auto fit = ar_fit(testing::ar_path(rng, V{0.6}, 2.0, 300), 1);
    CHECK(fit.n_obs == 299);
    CHECK(fit.order() == 1);
    CHECK_THROWS_AS(ar_fit(V(6, 1.0), 2), DataError);
    CHECK_THROWS_AS(ar_fit(V(50, 1.0), 2), NumericError);
    CHECK_THROWS_AS(ar_fit(V(50, 1.0), 0), ConfigError);
}

TEST_CASE("ar forecast") {
    ArFit mean_model{5.0, {0.0}, 0.0, 0};
    for (double v : ar_forecast(mean_model, V{1, 2, 3}, 4)) {
        CHECK(v == 5.0);
    }
    ArFit walk{0.0, {1.0}, 0.0, 0};
    CHECK(ar_forecast(walk, V{1, 2, 3}, 3) == V{3, 3, 3});

    // c = 1, φ = (0.5, -0.2), history 4, 2:
    // f1 = 1 + .5·2 - .2·4 = 1.2; f2 = 1 + .5·1.2 - .2·2 = 1.2; f3 = 1 + .6 - .24 = 1.36
    ArFit ar2{1.0, {0.5, -0.2}, 0.0, 0};
    const auto f = ar_forecast(ar2, V{4, 2}, 3);
    CHECK(f[0] == doctest::Approx(1.2).epsilon(1e-14));
    CHECK(f[1] == doctest::Approx(1.2).epsilon(1e-14));
    CHECK(f[2] == doctest::Approx(1.36).epsilon(1e-14));

    const auto far = ar_forecast(ar2, V{4, 2}, 100);
    CHECK(far.back() == doctest::Approx(1.0 / (1 - 0.5 + 0.2)).epsilon(0.01));
    std::mt19937_64 rng(6);
    const auto fitted = ar_fit(testing::ar_path(rng, V{0.6, 0.2}, 3.0, 500), 2);
    const double mean = fitted.c / (1 - fitted.phi[0] - fitted.phi[1]);
    CHECK(ar_forecast(fitted, V{100, -50}, 100).back() == doctest::Approx(mean).epsilon(0.01));

    CHECK_THROWS_AS(ar_forecast(ar2, V{1}, 3), DataError);
    CHECK_THROWS_AS(ar_forecast(ar2, V{1, 2}, 0), ConfigError);
}

TEST_CASE("transform chains round trip") {
    std::mt19937_64 rng(7);
    const auto y = lognormals(rng, 80);
    for (auto kind : {TransformKind::None, TransformKind::Difference, TransformKind::BoxCoxDifference}) {
        const auto chain = TransformChain::fit(kind, y);
        CHECK(chain.lambda().has_value() == (kind == TransformKind::BoxCoxDifference));
        const auto w = chain.apply(y);
        CHECK(w.size() == (kind == TransformKind::None ? y.size() : y.size() - 1));
        const auto back = chain.invert_observed(w);
        REQUIRE(back.size() == y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            CHECK(testing::rel_err(back[i], y[i]) < 1e-10);
        }
    }
    const auto fixed = TransformChain::fit(TransformKind::BoxCoxDifference, y, 0.117);
    CHECK(*fixed.lambda() == 0.117);
    CHECK(parse_transform(to_string(TransformKind::BoxCoxDifference)) == TransformKind::BoxCoxDifference);
    CHECK(parse_method("ar") == Method::Ar);
    CHECK_THROWS_AS(parse_method("arima"), ConfigError);
    CHECK_THROWS_AS(parse_transform("log"), ConfigError);
}

TEST_CASE("fit and forecast compositions") {
    ForecastParams p;
    p.alpha = 1.0;
    const auto flat = fit_and_forecast(V{3, 1, 4, 1, 5}, Method::Ses, TransformKind::None, p, 5).values;
    CHECK(flat == V(5, 5.0));

    std::mt19937_64 rng(8);
    const auto e = testing::normals(rng, 200, 0.0, 0.3);
    V trend(200);
    for (std::size_t t = 0; t < trend.size(); ++t) {
        trend[t] = 10.0 + 2.0 * static_cast<double>(t) + e[t];
    }
    p.order = 2;
    const auto f = fit_and_forecast(trend, Method::Ar, TransformKind::Difference, p, 14).values;
    const double slope = (f.back() - f.front()) / 13.0;
    CHECK(slope == doctest::Approx(2.0).epsilon(0.05));

    // Box-Cox + difference on a positive series stays on the original scale.
    const auto pos = lognormals(rng, 100);
    p.lambda = 0.117;
    const auto bc = fit_and_forecast(pos, Method::Ses, TransformKind::BoxCoxDifference, p, 3);
    CHECK(bc.model.transform.lambda() == 0.117);
    for (double v : bc.values) {
        CHECK(v >= 0.0);
    }
    p.lambda.reset();
    CHECK_THROWS_AS(fit_and_forecast(V{1, -2, 3}, Method::Ses, TransformKind::BoxCoxDifference, p, 1), DataError);
}

TEST_CASE("post-sample evaluation") {
    std::mt19937_64 rng(9);
    SUBCASE("origin count and layout") {
        const auto y = testing::ar_path(rng, V{0.7}, 6.0, 120);
        EvaluationGrid g;
        g.alphas = {0.3, 0.7};
        g.orders = {1, 3};
        g.horizons = {7, 14};
        const auto r = post_sample_evaluate(y, g);
        CHECK(r.first_origin == default_first_origin(g));
        CHECK(r.first_origin == 10);
        CHECK(r.cells.size() == 2 * 3 * 2 * 2);
        for (const auto& c : r.cells) {
            CHECK(c.n_origins == 120 - static_cast<std::size_t>(c.horizon) - r.first_origin + 1);
            CHECK(c.origins.size() == c.n_origins);
            CHECK(c.failed_origins == 0);
            CHECK(std::isfinite(c.rmse));
        }
        CHECK(r.lambda_scope == "full_series");
        CHECK(*r.lambda == boxcox_mle(y));
        g.first_origin = 20;
        const auto r2 = post_sample_evaluate(y, g);
        CHECK(r2.cells.front().n_origins == 120 - 7 - 20 + 1);
        CHECK(default_first_origin(EvaluationGrid{}) == 24);
    }
    SUBCASE("rmse is the endpoint error aggregate") {
        const auto y = testing::ar_path(rng, V{0.5}, 2.0, 60);
        EvaluationGrid g;
        g.methods = {Method::Ses};
        g.transforms = {TransformKind::None};
        g.alphas = {0.4};
        g.horizons = {3};
        const auto r = post_sample_evaluate(y, g);
        REQUIRE(r.cells.size() == 1);
        double sse = 0;
        std::size_t n = 0;
        for (std::size_t origin = r.first_origin; origin + 3 <= y.size(); ++origin) {
            const auto f = ses_forecast(std::span<const double>(y).first(origin), 0.4, 3);
            sse += (f[2] - y[origin + 2]) * (f[2] - y[origin + 2]);
            ++n;
        }
        CHECK(r.cells[0].n_origins == n);
        CHECK(r.cells[0].rmse == doctest::Approx(std::sqrt(sse / n)).epsilon(1e-12));
        CHECK(r.cells[0].aic == doctest::Approx(n * std::log(sse / n) + 2.0).epsilon(1e-12));

        g.scoring = Scoring::Average;
        const auto avg = post_sample_evaluate(y, g);
        CHECK(avg.cells[0].rmse != r.cells[0].rmse);
    }
    SUBCASE("true model recovers the noise level") {
        const auto y = testing::ar_path(rng, V{0.6}, 0.0, 600, 2.0);
        EvaluationGrid g;
        g.methods = {Method::Ar};
        g.transforms = {TransformKind::None};
        g.orders = {1};
        g.horizons = {1};
        const auto r = post_sample_evaluate(y, g);
        CHECK(r.cells[0].rmse == doctest::Approx(2.0).epsilon(0.2));
    }
    SUBCASE("fitting never sees the future") {
        const auto y = lognormals(rng, 80);
        auto poisoned = y;
        const std::size_t cut = 50;
        for (std::size_t i = cut; i < poisoned.size(); ++i) {
            poisoned[i] = 1e9;
        }
        EvaluationGrid g;
        g.alphas = {0.5};
        g.orders = {2};
        g.horizons = {1, 4};
        g.lambda = 0.25;
        const auto a = post_sample_evaluate(y, g);
        const auto b = post_sample_evaluate(poisoned, g);
        CHECK(a.lambda_scope == "fixed");
        REQUIRE(a.cells.size() == b.cells.size());
        std::size_t compared = 0;
        for (std::size_t c = 0; c < a.cells.size(); ++c) {
            for (std::size_t k = 0; k < a.cells[c].origins.size(); ++k) {
                if (a.cells[c].origins[k].origin <= cut) {
                    CHECK(a.cells[c].origins[k].forecast == b.cells[c].origins[k].forecast);
                    ++compared;
                }
            }
        }
        CHECK(compared > 0);
    }
    SUBCASE("best cells") {
        const auto y = testing::ar_path(rng, V{0.5, 0.3}, 1.0, 100);
        EvaluationGrid g;
        g.orders = {1, 2, 3};
        g.alphas = {0.2, 0.8};
        g.transforms = {TransformKind::None, TransformKind::Difference};
        const auto r = post_sample_evaluate(y, g);
        const auto* best = r.best(Method::Ar, 7);
        REQUIRE(best);
        for (const auto& c : r.cells) {
            if (c.method == Method::Ar && c.horizon == 7) {
                CHECK(best->rmse <= c.rmse);
            }
        }
        const auto* diff = r.best(Method::Ses, 14, TransformKind::Difference);
        REQUIRE(diff);
        CHECK(diff->transform == TransformKind::Difference);
        CHECK(r.best_by_aic(Method::Ses, 7));
        CHECK_FALSE(r.best(Method::Ar, 3));
    }
    SUBCASE("smoothed series forecast better than raw") {
        int better = 0;
        const int trials = 20;
        for (int trial = 0; trial < trials; ++trial) {
            const std::size_t n = 150;
            const auto noise = testing::normals(rng, n, 0.0, 3.0);
            V raw(n);
            for (std::size_t t = 0; t < n; ++t) {
                raw[t] = 50.0 + 20.0 * std::sin(static_cast<double>(t) / 15.0 + trial) + noise[t];
            }
            const auto s = smoothing::sma(RegularSeries::dense(testing::day(2021, 1, 1), 1, raw), 7).trimmed();
            EvaluationGrid g;
            g.methods = {Method::Ar};
            g.transforms = {TransformKind::Difference};
            g.orders = {3};
            g.horizons = {7};
            const double r_raw = post_sample_evaluate(raw, g).cells[0].rmse;
            const double r_smooth = post_sample_evaluate(s, g).cells[0].rmse;
            better += r_smooth < r_raw ? 1 : 0;
        }
        CHECK(better >= 18);
    }
    SUBCASE("errors") {
        EvaluationGrid g;
        CHECK_THROWS_WITH_AS(post_sample_evaluate(V(30, 1.0), g), doctest::Contains("need at least 48"), DataError);
        g.horizons.clear();
        CHECK_THROWS_AS(post_sample_evaluate(V(100, 1.0), g), ConfigError);
        g.horizons = {0};
        CHECK_THROWS_AS(post_sample_evaluate(V(100, 1.0), g), ConfigError);
    }
    SUBCASE("failed origins make a cell unusable") {
        auto y = lognormals(rng, 60);
        y[40] = -1.0;
        EvaluationGrid g;
        g.methods = {Method::Ses};
        g.transforms = {TransformKind::BoxCoxDifference};
        g.alphas = {0.5};
        g.horizons = {1};
        g.lambda = 0.5;
        const auto r = post_sample_evaluate(y, g);
        CHECK(r.cells[0].failed_origins > 0);
        CHECK(std::isnan(r.cells[0].rmse));
        CHECK_FALSE(r.best(Method::Ses, 1));
    }
}

TEST_CASE("qq data") {
    const auto q = qq_normal(V{3, 1, 2});
    REQUIRE(q.size() == 3);
    CHECK(q[0].sample == 1);
    CHECK(q[2].sample == 3);
    CHECK(q[1].theoretical == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(q[0].theoretical == doctest::Approx(-q[2].theoretical));
    CHECK(q[0].theoretical == doctest::Approx(dist::normal_quantile((1 - 0.375) / 3.25)));
    std::mt19937_64 rng(10);
    const auto z = testing::normals(rng, 2000);
    const auto qq = qq_normal(z);
    V a;
    V b;
    for (const auto& p : qq) {
        a.push_back(p.theoretical);
        b.push_back(p.sample);
    }
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::is_sorted(b.begin(), b.end()));
    CHECK_THROWS_AS(qq_normal(V{}), DataError);
}
