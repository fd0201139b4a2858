// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "support.hpp"
#include "wbe/csv.hpp"
#include "wbe/forecast.hpp"
#include "wbe/metrics.hpp"
#include "wbe/pipeline.hpp"
#include "wbe/regression.hpp"
#include "wbe/series.hpp"
#include "wbe/synthetic.hpp"

using namespace wbe;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

io::IngestResult ingest_text(const std::string& text) {
    std::istringstream in(text);
    return io::parse_ingest_csv(in, "synthetic");
}

io::IngestResult campaign(const synthetic::Scenario& sc) {
    return ingest_text(pipeline::synthetic_csv(sc, synthetic::generate(sc)));
}

pipeline::PipelineConfig seeded(std::uint64_t seed) {
    pipeline::PipelineConfig cfg;
    cfg.seed = seed;
    cfg.scenario.seed = seed;
    return cfg;
}

Outcome metric_fixtures() {
    using V = std::vector<double>;
    const double r = metrics::rmse(V{0, 0}, V{3, 4});
    const bool ok = std::abs(r - 3.535534) <= 1e-6 && metrics::msim(V{1}, V{3}) == 0.5 &&
                    metrics::r_squared(V{1, 2, 3}, V{1, 2, 4}) == 0.5 && metrics::significance_threshold(100) == 0.196 &&
                    std::abs(metrics::aic_ls(10, 10.0, 2) - 4.0) <= 1e-12;
    return {ok, fmt("rmse=%.9f", r)};
}

Outcome loocv_oracle() {
    std::mt19937_64 rng(2);
    double worst = 0.0;
    for (int ds = 0; ds < 50; ++ds) {
        const int n = 30;
        const int d = 3;
        Eigen::MatrixXd x(n, d);
        Eigen::VectorXd y(n);
        std::normal_distribution<double> z;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) {
                x(i, j) = z(rng);
            }
            y(i) = 1.0 + x(i, 0) - 2.0 * x(i, 1) + 0.5 * x(i, 2) + z(rng);
        }
        const auto fit = regression::fit_linear({x, y, true, {}});
        double ss = 0.0;
        for (int i = 0; i < n; ++i) {
            // Refit by normal equations on the other n-1 rows.
            Eigen::MatrixXd a(n - 1, d + 1);
            Eigen::VectorXd b(n - 1);
            for (int k = 0, r = 0; k < n; ++k) {
                if (k == i) {
                    continue;
                }
                a(r, 0) = 1.0;
                a.block(r, 1, 1, d) = x.row(k);
                b(r) = y(k);
                ++r;
            }
            const Eigen::VectorXd beta = (a.transpose() * a).ldlt().solve(a.transpose() * b);
            const double pred = beta(0) + x.row(i).dot(beta.tail(d));
            ss += (y(i) - pred) * (y(i) - pred);
        }
        worst = std::max(worst, std::abs(fit.loocv - std::sqrt(ss / n)));
    }
    return {worst <= 1e-9, fmt("max |diff| = %.2e over 50 datasets", worst)};
}

Outcome boxcox_recovery() {
    std::mt19937_64 rng(3);
    int hits = 0;
    for (int seed = 0; seed < 100; ++seed) {
        auto y = testing::normals(rng, 1000);
        for (auto& v : y) {
            v = std::exp(v);
        }
        hits += std::abs(forecast::boxcox_mle(y)) <= 0.1 ? 1 : 0;
    }
    auto y = testing::normals(rng, 500, 0.0, 1.0);
    for (auto& v : y) {
        v = std::exp(v);
    }
    double worst = 0.0;
    for (double lambda : {-1.0, 0.0, 0.117, 1.0}) {
        const auto back = forecast::inverse_boxcox(forecast::boxcox(y, lambda), lambda);
        for (std::size_t i = 0; i < y.size(); ++i) {
            worst = std::max(worst, testing::rel_err(back[i], y[i]));
        }
    }
    return {hits >= 90 && worst <= 1e-10, fmt("%d/100 within 0.1, round-trip max rel err %.1e", hits, worst)};
}

Outcome ar_recovery() {
    std::mt19937_64 rng(4);
    int hits = 0;
    const std::vector<double> phi{0.5, -0.3};
    for (int seed = 0; seed < 100; ++seed) {
        const auto f = forecast::ar_fit(testing::ar_path(rng, phi, 0.0, 2000), 2);
        hits += std::abs(f.phi[0] - 0.5) <= 0.05 && std::abs(f.phi[1] + 0.3) <= 0.05 ? 1 : 0;
    }
    return {hits >= 95, fmt("%d/100 within 0.05", hits)};
}

Outcome adf_discrimination() {
    std::mt19937_64 rng(5);
    int rw = 0;
    int ar = 0;
    const std::vector<double> phi{0.2};
    for (int seed = 0; seed < 100; ++seed) {
        rw += forecast::adf_test(testing::random_walk(rng, 500)).stationary ? 0 : 1;
        ar += forecast::adf_test(testing::ar_path(rng, phi, 0.0, 500)).stationary ? 1 : 0;
    }
    return {rw >= 90 && ar >= 90, fmt("random walk non-stationary %d/100, AR(1) stationary %d/100", rw, ar)};
}

Outcome lag_recovery() {
    int hits = 0;
    std::string lags;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto cfg = seeded(seed);
        cfg.resampling = pipeline::Resampling::DailyLinear;
        cfg.scenario.indicator_lag_days = 8;
        pipeline::RunOptions opts;
        opts.stop_after = pipeline::Stage::Regress;
        const auto res = pipeline::run(cfg, campaign(cfg.scenario), opts);
        const int lag = res.regression->lags.best_lag;
        hits += lag == 8 ? 1 : 0;
        lags += std::to_string(lag) + (seed < 20 ? "," : "");
    }
    return {hits == 20, fmt("%d/20 seeds at lag 8 (lags %s)", hits, lags.c_str())};
}

Outcome paper_shape() {
    int horizon_ok = 0;
    int ar_better = 0;
    int smooth_better = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto cfg = seeded(seed);
        const auto data = campaign(cfg.scenario);
        const auto res = pipeline::run(cfg, data);
        const auto& ev = *res.evaluation;
        const auto* ses7 = ev.best(forecast::Method::Ses, 1);
        const auto* ses14 = ev.best(forecast::Method::Ses, 2);
        const auto* ar7 = ev.best(forecast::Method::Ar, 1);
        const auto* ar14 = ev.best(forecast::Method::Ar, 2);
        if (ses7 && ses14 && ar7 && ar14) {
            horizon_ok += ses14->rmse > ses7->rmse && ar14->rmse > ar7->rmse ? 1 : 0;
            ar_better += ar7->rmse <= ses7->rmse ? 1 : 0;
        }

        // Raw and smoothed are compared on the same daily grid.
        auto daily = cfg;
        daily.resampling = pipeline::Resampling::DailyLinear;
        auto raw_cfg = daily;
        raw_cfg.smoother = pipeline::SmootherChoice::None;
        pipeline::RunOptions opts;
        opts.stop_after = pipeline::Stage::Regress;
        const auto smoothed = pipeline::run(daily, data, opts);
        opts.allow_raw = true;
        const auto raw = pipeline::run(raw_cfg, data, opts);
        smooth_better += smoothed.regression->linear.r_squared > raw.regression->linear.r_squared ? 1 : 0;
    }
    const bool ok = horizon_ok >= 16 && ar_better >= 16 && smooth_better >= 18;
    return {ok, fmt("14d>7d %d/20, AR<=SES at 7d %d/20, smoothed R2 > raw %d/20", horizon_ok, ar_better,
                    smooth_better)};
}

Outcome downsampling_vs_interpolation() {
    const auto cfg = seeded(8);
    pipeline::RunOptions opts;
    opts.stop_after = pipeline::Stage::Preprocess;
    const auto res = pipeline::run(cfg, campaign(cfg.scenario), opts);
    const auto& s = res.l_virus;
    const auto block = block_average_downsample(s);
    // Shepard is read at mid-week; weeks whose midpoint falls outside the data are skipped.
    std::size_t first = 0;
    while (block.date_at(first).plus_days(3) < s.first_date()) ++first;
    std::size_t last = block.size();
    while (last > first && block.date_at(last - 1).plus_days(3) > s.last_date()) --last;
    const auto shepard =
        shepard_interpolate(s, block.date_at(first).plus_days(3), 7, last - first, cfg.shepard_power);
    std::vector<double> a;
    std::vector<double> b;
    for (std::size_t i = first; i < last; ++i) {
        if (block[i] && shepard[i - first]) {
            a.push_back(*block[i]);
            b.push_back(*shepard[i - first]);
        }
    }
    const double r = metrics::pearson_r(a, b);
    return {r > 0.95, fmt("r = %.4f over %zu weeks", r, a.size())};
}

Outcome noiseless_round_trip() {
    auto cfg = seeded(9);
    cfg.scenario.noise = {0.0, 0.0, 0.0, 0.0};
    const auto g = synthetic::generate(cfg.scenario);
    pipeline::RunOptions opts;
    opts.stop_after = pipeline::Stage::Preprocess;
    const auto res = pipeline::run(cfg, ingest_text(pipeline::synthetic_csv(cfg.scenario, g)), opts);
    const auto truth = g.true_load();
    double worst = 0.0;
    std::size_t checked = 0;
    for (const auto& p : res.normalized) {
        const auto t = truth.value_at(p.date);
        if (!t) {
            return {false, "normalized date outside the truth series"};
        }
        worst = std::max(worst, testing::rel_err(p.l_virus, *t));
        ++checked;
    }
    return {checked == g.samples.size() && worst <= 1e-9,
            fmt("%zu samples, max rel err %.1e", checked, worst)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    const auto cfg = seeded(10);
    const auto text = pipeline::synthetic_csv(cfg.scenario, synthetic::generate(cfg.scenario));
    const auto base = fs::temp_directory_path() / "wbe_acceptance_determinism";
    fs::remove_all(base);
    for (const char* run : {"a", "b"}) {
        pipeline::write_outputs(pipeline::run(cfg, ingest_text(text)), base / run);
    }
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(base / "a")) {
        if (slurp(e.path()) != slurp(base / "b" / e.path().filename())) {
            return {false, "differs: " + e.path().filename().string()};
        }
        ++files;
    }
    fs::remove_all(base);
    return {files >= 10, fmt("%zu files identical", files)};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "metric fixtures", 1.0, metric_fixtures},
        {2, "LOOCV equals naive refit", 5.0, loocv_oracle},
        {3, "Box-Cox recovery and inversion", 10.0, boxcox_recovery},
        {4, "AR(2) coefficient recovery", 10.0, ar_recovery},
        {5, "ADF discrimination", 10.0, adf_discrimination},
        {6, "lag recovery on smoothed daily series", 5.0, lag_recovery},
        {7, "synthetic campaign shape", 60.0, paper_shape},
        {8, "weekly block average vs Shepard", 2.0, downsampling_vs_interpolation},
        {9, "noiseless preprocessing round trip", 2.0, noiseless_round_trip},
        {10, "byte-identical reruns", 10.0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_budget = secs <= c.budget_s;
        const bool pass = o.pass && in_budget;
        failed += pass ? 0 : 1;
        std::printf("%s %2d %-40s %7.2fs (budget %.0fs%s)  %s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                    c.budget_s, in_budget ? "" : ", exceeded", o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
