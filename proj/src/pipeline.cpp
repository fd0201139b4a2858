#include "wbe/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wbe/error.hpp"
#include "wbe/metrics.hpp"
#include "wbe/smoothing.hpp"
#include "wbe/synthetic.hpp"

namespace wbe::pipeline {

namespace {

using nlohmann::json;
using preprocess::Biomarker;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json rounded(const json& j) {
    if (j.is_number_float()) {
        return number_or_null(io::round_significant(j.get<double>()));
    }
    if (j.is_array()) {
        json out = json::array();
        for (const auto& e : j) {
            out.push_back(rounded(e));
        }
        return out;
    }
    if (j.is_object()) {
        json out = json::object();
        for (auto it = j.begin(); it != j.end(); ++it) {
            out[it.key()] = rounded(it.value());
        }
        return out;
    }
    return j;
}

std::string join_flags(const std::vector<std::string_view>& tokens) {
    std::string out;
    for (auto t : tokens) {
        if (!out.empty()) {
            out += '|';
        }
        out += t;
    }
    return out;
}

RegularSeries daily_grid(const ScatteredSeries& s) {
    const auto n = static_cast<std::size_t>(days_between(s.first_date(), s.last_date()) + 1);
    std::vector<std::optional<double>> v(n);
    for (const auto& p : s.points()) {
        v[static_cast<std::size_t>(days_between(s.first_date(), p.date))] = p.value;
    }
    return RegularSeries(s.first_date(), 1, std::move(v));
}

/// Trailing 7-day sum per 100 000 inhabitants; needs all 7 days present.
RegularSeries incidence(const RegularSeries& daily, double population) {
    std::vector<std::optional<double>> v(daily.size());
    for (std::size_t i = 6; i < daily.size(); ++i) {
        double sum = 0.0;
        bool complete = true;
        for (std::size_t j = i - 6; j <= i; ++j) {
            if (!daily[j]) {
                complete = false;
                break;
            }
            sum += *daily[j];
        }
        if (complete) {
            v[i] = sum * 1e5 / population;
        }
    }
    return RegularSeries(daily.start(), 1, std::move(v));
}

RegularSeries to_step(const RegularSeries& daily, int step) {
    if (step == 1) {
        return daily;
    }
    return block_average_downsample(daily.to_scattered(), step);
}

std::vector<SeriesPoint> present_points(const RegularSeries& s) {
    std::vector<SeriesPoint> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i]) {
            out.push_back({s.date_at(i), *s[i]});
        }
    }
    return out;
}

json fit_json(const regression::RegressionFit& f) {
    json tests = json::array();
    for (const auto& t : f.tests) {
        tests.push_back({{"name", t.name},
                         {"estimate", number_or_null(t.estimate)},
                         {"std_error", number_or_null(t.std_error)},
                         {"t", number_or_null(t.t)},
                         {"p_value", number_or_null(t.p_value)},
                         {"significant", t.significant}});
    }
    return {{"n", f.n},
            {"dof", f.dof},
            {"polynomial_order", f.polynomial_order},
            {"r_squared", number_or_null(f.r_squared)},
            {"rmse", number_or_null(f.rmse)},
            {"loocv", number_or_null(f.loocv)},
            {"residual_sd", number_or_null(f.residual_sd)},
            {"coefficients", tests}};
}

json adf_json(const forecast::AdfResult& a) {
    return {{"alpha", number_or_null(a.alpha)},       {"beta", number_or_null(a.beta_hat)},
            {"gamma", number_or_null(a.gamma)},       {"std_error", number_or_null(a.std_error)},
            {"t_stat", number_or_null(a.t_stat)},     {"critical_value", a.critical_value},
            {"n_obs", a.n_obs},                       {"stationary", a.stationary}};
}

class Runner {
public:
    Runner(const PipelineConfig& cfg, const RunOptions& opts) : cfg_(cfg), opts_(opts) {
        res_.report = json::object();
        res_.report["schema"] = std::string(kReportSchema);
        res_.report["seed"] = cfg.seed;
        res_.report["stages"] = json::array();
        res_.report["config"] = {{"resampling", std::string(to_string(cfg.resampling))},
                                 {"smoother", std::string(to_string(cfg.smoother))},
                                 {"regression_target", std::string(to_string(cfg.target))},
                                 {"forecast_method", std::string(forecast::to_string(cfg.method))},
                                 {"forecast_params", cfg.grid ? "grid" : "fixed"},
                                 {"allow_raw", opts.allow_raw}};
    }

    RunResult from_measurements(const io::IngestResult& data) {
        data_ = &data;
        stage(Stage::Ingest, [&] { ingest(); });
        if (done(Stage::Ingest)) {
            return finish();
        }
        stage(Stage::Preprocess, [&] { preprocess_stage(); });
        return continue_from(Stage::Resample);
    }

    RunResult from_normalized(const std::vector<io::SeriesRow>& rows, const std::optional<io::IngestResult>& ind) {
        data_ = ind ? &*ind : nullptr;
        stage(Stage::Preprocess, [&] {
            std::vector<SeriesPoint> pts;
            std::size_t dropped = 0;
            for (const auto& r : rows) {
                if (!r.value || r.has_flag("flow_outlier") || r.has_flag("unusable")) {
                    ++dropped;
                    continue;
                }
                pts.push_back({r.date, *r.value});
            }
            if (pts.empty()) {
                throw DataError("no usable normalized values");
            }
            res_.l_virus = ScatteredSeries(std::move(pts));
            res_.report["preprocess"] = {{"source", "normalized series"},
                                         {"rows", rows.size()},
                                         {"kept", res_.l_virus.size()},
                                         {"dropped", dropped}};
        });
        return continue_from(Stage::Resample);
    }

    RunResult from_series(const std::vector<io::SeriesRow>& rows, const std::optional<io::IngestResult>& ind) {
        data_ = ind ? &*ind : nullptr;
        stage(Stage::Smooth, [&] {
            res_.smoothed = io::rows_to_regular(rows);
            const bool all_smoothed = std::all_of(rows.begin(), rows.end(), [](const io::SeriesRow& r) {
                return !r.value || r.has_flag("smoothed");
            });
            res_.smoothed_is_raw = !all_smoothed;
            res_.report["smooth"] = {{"source", "series file"},
                                     {"length", res_.smoothed.size()},
                                     {"step_days", res_.smoothed.step_days()},
                                     {"smoothed", all_smoothed}};
        });
        return continue_from(Stage::Regress);
    }

private:
    const PipelineConfig& cfg_;
    const RunOptions& opts_;
    const io::IngestResult* data_ = nullptr;
    RunResult res_;

    void log(LogLevel level, const std::string& msg) const {
        if (opts_.log) {
            opts_.log(level, msg);
        }
    }

    void warn(const std::string& msg) {
        res_.warnings.push_back(msg);
        log(LogLevel::Warn, msg);
    }

    bool done(Stage s) const { return s >= opts_.stop_after; }

    template <class F>
    void stage(Stage s, F&& body) {
        log(LogLevel::Info, "stage " + std::string(to_string(s)));
        try {
            body();
        } catch (const StageError&) {
            throw;
        } catch (const ConfigError& e) {
            throw StageError(s, ErrorKind::Usage, e.what());
        } catch (const NumericError& e) {
            throw StageError(s, ErrorKind::Numeric, e.what());
        } catch (const DataError& e) {
            throw StageError(s, ErrorKind::Data, e.what());
        } catch (const std::out_of_range& e) {
            throw StageError(s, ErrorKind::Data, e.what());
        } catch (const std::invalid_argument& e) {
            throw StageError(s, ErrorKind::Usage, e.what());
        }
        res_.report["stages"].push_back(std::string(to_string(s)));
    }

    RunResult continue_from(Stage next) {
        for (Stage s : {Stage::Resample, Stage::Smooth, Stage::Regress, Stage::Forecast}) {
            if (s < next) {
                continue;
            }
            if (s > Stage::Ingest && done(static_cast<Stage>(static_cast<int>(s) - 1))) {
                break;
            }
            switch (s) {
                case Stage::Resample: stage(s, [&] { resample_stage(); }); break;
                case Stage::Smooth: stage(s, [&] { smooth_stage(); }); break;
                case Stage::Regress:
                    if (opts_.stop_after > Stage::Regress && !has_target()) {
                        warn("regression skipped: input has no new_infections column");
                        break;
                    }
                    stage(s, [&] { regress_stage(); });
                    break;
                case Stage::Forecast: stage(s, [&] { forecast_stage(); }); break;
                default: break;
            }
        }
        return finish();
    }

    RunResult finish() {
        res_.report["warnings"] = res_.warnings;
        json outputs = json::array();
        for (const auto& [name, content] : res_.files) {
            outputs.push_back(name);
        }
        outputs.push_back("report.json");
        res_.report["outputs"] = outputs;
        res_.report = rounded(res_.report);
        return std::move(res_);
    }

    void add_file(std::string name, std::string content) { res_.files.emplace_back(std::move(name), std::move(content)); }

    bool has_target() const { return data_ && data_->indicators.count("new_infections") != 0; }

    // -----------------------------------------------------------------------
    void ingest() {
        for (const auto& w : data_->warnings) {
            warn(w);
        }
        json indicators = json::object();
        for (const auto& [name, s] : data_->indicators) {
            indicators[name] = s.size();
        }
        res_.report["ingest"] = {{"rows", data_->rows},
                                 {"samples", data_->samples.size()},
                                 {"flow_records", data_->flows.size()},
                                 {"indicators", indicators}};
        if (data_->samples.empty()) {
            throw DataError("no rows with c_virus_cpl");
        }
    }

    void preprocess_stage() {
        const auto& samples = data_->samples;
        auto bm = cfg_.biomarker;
        json rep = json::object();
        if (cfg_.calibrate) {
            bm.calibration = preprocess::calibrate_biomarkers(samples, bm);
            json cal = json::object();
            for (const auto& [b, f] : bm.calibration) {
                cal[std::string(preprocess::to_string(b))] = f;
            }
            rep["calibration"] = cal;
        }

        std::vector<bool> flow_flag(samples.size(), false);
        if (!cfg_.flow_filter) {
            rep["flow_filter"] = "disabled";
        } else if (data_->flows.size() < preprocess::kMinFlowHistory) {
            rep["flow_filter"] = "skipped";
            warn("flow filter skipped: " + std::to_string(data_->flows.size()) + " flow records, need " +
                 std::to_string(preprocess::kMinFlowHistory));
        } else {
            flow_flag = preprocess::flag_flow_outliers(samples, data_->flows);
            rep["flow_filter"] = "applied";
            rep["flow_p90"] = metrics::percentile(data_->flows, 0.90);
        }

        const auto context = preprocess::biomarker_context(samples);
        std::vector<io::SeriesRow> rows;
        std::vector<SeriesPoint> kept;
        std::size_t n_flow = 0;
        std::size_t n_sub = 0;
        std::size_t n_unusable = 0;
        std::map<std::string, std::size_t> used;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto& s = samples[i];
            io::SeriesRow row;
            row.date = s.date;
            std::vector<std::string_view> flags;
            if (flow_flag[i]) {
                ++n_flow;
                flags.push_back("flow_outlier");
            }
            preprocess::Sample screened = s;
            bool substituted = false;
            try {
                if (cfg_.biomarker_screen && !flow_flag[i]) {
                    auto r = preprocess::screen_biomarker(s, context, bm);
                    screened = r.sample;
                    substituted = r.substituted();
                }
                auto p = preprocess::normalize(screened, bm);
                if (substituted) {
                    p.flags |= static_cast<unsigned>(preprocess::PointFlag::BiomarkerSubstituted);
                }
                if (flow_flag[i]) {
                    p.flags |= static_cast<unsigned>(preprocess::PointFlag::FlowOutlier);
                }
                row.value = p.l_virus;
                row.flags = "bm:" + p.biomarker_used;
                if (substituted) {
                    ++n_sub;
                    flags.push_back("biomarker_substituted");
                }
                if (!flow_flag[i]) {
                    kept.push_back({p.date, p.l_virus});
                    ++used[p.biomarker_used];
                }
                res_.normalized.push_back(p);
            } catch (const DataError& e) {
                ++n_unusable;
                flags.push_back("unusable");
                if (!flow_flag[i]) {
                    warn(s.date.iso() + ": sample dropped (" + e.what() + ")");
                }
            }
            const auto extra = join_flags(flags);
            row.flags = row.flags.empty() ? extra : (extra.empty() ? row.flags : row.flags + "|" + extra);
            rows.push_back(std::move(row));
        }
        if (kept.empty()) {
            throw DataError("no samples left after outlier handling");
        }
        res_.l_virus = ScatteredSeries(std::move(kept));
        add_file("normalized.csv", io::series_csv(rows));

        json used_j = json::object();
        for (const auto& [k, v] : used) {
            used_j[k] = v;
        }
        rep["samples"] = samples.size();
        rep["kept"] = res_.l_virus.size();
        rep["flow_outliers_removed"] = n_flow;
        rep["biomarker_substituted"] = n_sub;
        rep["unusable"] = n_unusable;
        rep["biomarker_used"] = used_j;
        res_.report["preprocess"] = rep;
    }

    void resample_stage() {
        const int step = cfg_.step_days();
        switch (cfg_.resampling) {
            case Resampling::WeeklyBlock: res_.resampled = block_average_downsample(res_.l_virus, 7); break;
            case Resampling::DailyLinear: res_.resampled = linear_interpolate(res_.l_virus, 1); break;
            case Resampling::DailyShepard: res_.resampled = shepard_interpolate(res_.l_virus, 1, cfg_.shepard_power); break;
        }
        add_file("resampled.csv", io::series_csv(res_.resampled));
        res_.report["resample"] = {{"method", std::string(to_string(cfg_.resampling))},
                                   {"step_days", step},
                                   {"start", res_.resampled.start().iso()},
                                   {"length", res_.resampled.size()},
                                   {"missing", res_.resampled.missing_count()}};
    }

    void smooth_stage() {
        using namespace smoothing;
        const int step = cfg_.step_days();
        RegularSeries filled = res_.resampled;
        const std::size_t n_filled = fill_interior_gaps(filled);
        if (n_filled > 0) {
            warn(std::to_string(n_filled) + " empty grid slots filled by linear interpolation before smoothing");
        }
        const RegularSeries dense = filled.trimmed();
        json rep = json::object();
        rep["filled_gaps"] = n_filled;

        // SMA on the resampling grid.
        int k = cfg_.sma_window;
        std::optional<RegularSeries> sma_series;
        if (cfg_.smoother != SmootherChoice::Sma) {
            try {
                const auto sel = select_sma_window(dense, cfg_.sma_candidates);
                k = sel.k;
                json scores = json::array();
                for (const auto& s : sel.scores) {
                    scores.push_back({{"k", s.k}, {"loocv", number_or_null(s.loocv)}});
                }
                rep["sma_selection"] = {{"k", sel.k}, {"scores", scores}};
            } catch (const DataError& e) {
                if (cfg_.smoother == SmootherChoice::Auto && step == 7) {
                    throw;
                }
                warn(std::string("SMA window selection failed: ") + e.what());
            }
        }
        try {
            sma_series = sma(dense, k);
            rep["sma_k"] = k;
        } catch (const DataError& e) {
            if (cfg_.smoother == SmootherChoice::Sma || (cfg_.smoother == SmootherChoice::Auto && step == 7)) {
                throw;
            }
            warn(std::string("SMA skipped: ") + e.what());
        }

        // LOESS neighbours: configured, or matched to the weekly SMA reference.
        int k_l = cfg_.loess_neighbors;
        if (cfg_.smoother != SmootherChoice::Loess) {
            try {
                RegularSeries weekly = block_average_downsample(res_.l_virus, 7);
                fill_interior_gaps(weekly);
                weekly = weekly.trimmed();
                const int k_w = select_sma_window(weekly, cfg_.sma_candidates).k;
                const auto ref = sma(weekly, k_w);
                const auto match = match_loess_to_reference(res_.l_virus, ref, cfg_.loess_candidates);
                k_l = match.k_l;
                json scores = json::array();
                for (const auto& s : match.scores) {
                    scores.push_back({{"k_l", s.k_l},
                                      {"pearson", number_or_null(s.pearson)},
                                      {"msim", number_or_null(s.msim)},
                                      {"overlap", s.overlap}});
                }
                rep["loess_match"] = {{"k_l", k_l}, {"reference_k", k_w}, {"scores", scores}};
            } catch (const std::exception& e) {
                if (cfg_.smoother == SmootherChoice::Auto && step == 1) {
                    throw;
                }
                warn(std::string("LOESS matching failed, using configured neighbours: ") + e.what());
            }
        }
        std::optional<RegularSeries> loess_grid;
        std::optional<RegularSeries> loess_day;
        try {
            loess_grid = loess_on_grid(res_.l_virus, k_l, dense.start(), step, dense.size());
            loess_day = step == 1 ? *loess_grid : loess_daily(res_.l_virus, k_l);
            rep["loess_k_l"] = k_l;
            const auto at_samples = loess(res_.l_virus, k_l);
            rep["loess_rmse_vs_raw"] = metrics::rmse(res_.l_virus.values(), at_samples.values());
        } catch (const std::exception& e) {
            if (cfg_.smoother == SmootherChoice::Loess || (cfg_.smoother == SmootherChoice::Auto && step == 1)) {
                throw;
            }
            warn(std::string("LOESS skipped: ") + e.what());
        }
        if (sma_series) {
            std::vector<double> a;
            std::vector<double> b;
            for (std::size_t i = 0; i < dense.size(); ++i) {
                if ((*sma_series)[i] && dense[i]) {
                    a.push_back(*dense[i]);
                    b.push_back(*(*sma_series)[i]);
                }
            }
            if (!a.empty()) {
                rep["sma_rmse_vs_raw"] = metrics::rmse(a, b);
            }
        }

        switch (cfg_.smoother) {
            case SmootherChoice::Sma: res_.smoothed = *sma_series; rep["method"] = "sma"; break;
            case SmootherChoice::Loess: res_.smoothed = *loess_grid; rep["method"] = "loess"; break;
            case SmootherChoice::None:
                res_.smoothed = dense;
                res_.smoothed_is_raw = true;
                rep["method"] = "none";
                break;
            case SmootherChoice::Auto:
                if (step == 7) {
                    res_.smoothed = *sma_series;
                    rep["method"] = "sma";
                } else {
                    res_.smoothed = *loess_grid;
                    rep["method"] = "loess";
                }
                break;
        }
        rep["length"] = res_.smoothed.size();
        rep["present"] = res_.smoothed.size() - res_.smoothed.missing_count();

        std::vector<std::string> flags(res_.smoothed.size());
        for (std::size_t i = 0; i < res_.smoothed.size(); ++i) {
            std::vector<std::string_view> f;
            if (res_.smoothed[i]) {
                f.push_back(res_.smoothed_is_raw ? "raw" : "smoothed");
            }
            const auto j = res_.resampled.index_of(res_.smoothed.date_at(i));
            if (j && !res_.resampled[*j]) {
                f.push_back("filled");
            }
            flags[i] = join_flags(f);
        }
        add_file("smoothed.csv", io::series_csv(res_.smoothed, flags));

        std::vector<io::NamedSeries> overlay;
        overlay.push_back({"raw", res_.l_virus.points()});
        if (sma_series) {
            overlay.push_back({"sma", present_points(*sma_series)});
        }
        if (loess_day) {
            overlay.push_back({"loess", present_points(*loess_day)});
        }
        add_file("overlay.csv", io::long_csv(overlay));
        res_.report["smooth"] = rep;
    }

    void require_smoothed(const char* what) const {
        if (res_.smoothed_is_raw && !opts_.allow_raw) {
            throw ConfigError(std::string(what) + " on un-smoothed input requires --allow-raw");
        }
    }

    RegularSeries indicator_on_grid(const std::string& name, int step) const {
        const auto daily = daily_grid(data_->indicators.at(name));
        return to_step(daily, step);
    }

    void regress_stage() {
        require_smoothed("regression");
        if (!has_target()) {
            throw DataError("regression needs the new_infections column");
        }
        const int step = res_.smoothed.step_days();
        RegularSeries target = daily_grid(data_->indicators.at("new_infections"));
        if (cfg_.target == RegressionTarget::Incidence) {
            target = incidence(target, cfg_.population);
        }
        target = to_step(target, step);

        RegressionOutput out;
        const int max_lag = cfg_.max_lag.value_or(step == 1 ? 14 : 4);
        out.lags = regression::cross_correlate(res_.smoothed, target, max_lag);
        out.lag = cfg_.lag.value_or(out.lags.best_lag);

        std::vector<RegularSeries> features{res_.smoothed};
        out.feature_names = {"l_virus"};
        for (const auto& c : cfg_.covariates) {
            if (data_->indicators.count(c) == 0) {
                throw DataError("covariate column '" + c + "' has no values");
            }
            features.push_back(indicator_on_grid(c, step));
            out.feature_names.push_back(c);
        }
        const auto joined = regression::join_lagged(target, features, out.feature_names, out.lag);
        out.linear = regression::fit_linear(joined.design);

        const auto uni = regression::join_lagged(target, std::span(features).first(1),
                                                 std::span(out.feature_names).first(1), out.lag);
        const Eigen::VectorXd x = uni.design.features.col(0);
        const Eigen::VectorXd& y = uni.design.target;
        out.polynomial = regression::fit_polynomial(std::span<const double>(x.data(), x.size()),
                                                    std::span<const double>(y.data(), y.size()), cfg_.polynomial_order);
        const auto band = regression::confidence_band(out.polynomial, uni.design.features, cfg_.band_level);

        std::ostringstream csv;
        csv << "date,l_virus,observed,lower,fit,upper\n";
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const auto i_u = static_cast<std::size_t>(i);
            csv << uni.feature_dates[i_u].plus_days(static_cast<long>(out.lag) * step).iso() << ','
                << io::format_number(x(i)) << ',' << io::format_number(y(i)) << ',' << io::format_number(band.lower[i_u])
                << ',' << io::format_number(band.fit[i_u]) << ',' << io::format_number(band.upper[i_u]) << '\n';
        }
        add_file("regression_band.csv", csv.str());

        json lag_rows = json::array();
        for (std::size_t i = 0; i < out.lags.lags.size(); ++i) {
            lag_rows.push_back({{"lag", out.lags.lags[i]},
                                {"r", number_or_null(out.lags.r[i])},
                                {"overlap", out.lags.overlap[i]}});
        }
        res_.report["regress"] = {
            {"target", std::string(to_string(cfg_.target))},
            {"step_days", step},
            {"cross_correlation",
             {{"lags", lag_rows},
              {"best_lag", out.lags.best_lag},
              {"best_lag_days", out.lags.best_lag * step},
              {"best_r", number_or_null(out.lags.best_r)},
              {"threshold", number_or_null(out.lags.threshold)}}},
            {"lag", out.lag},
            {"lag_days", out.lag * step},
            {"features", out.feature_names},
            {"linear", fit_json(out.linear)},
            {"polynomial", fit_json(out.polynomial)},
            {"band_level", cfg_.band_level}};
        res_.regression = std::move(out);
    }

    void forecast_stage() {
        require_smoothed("forecasting");
        const RegularSeries series = res_.smoothed.trimmed();
        const int step = series.step_days();
        const auto y = series.dense_values("forecasting");
        json rep = json::object();
        rep["series_length"] = y.size();
        rep["step_days"] = step;

        rep["adf"] = adf_json(forecast::adf_test(y));
        const auto dy = difference(y);
        rep["adf_differenced"] = adf_json(forecast::adf_test(dy));

        forecast::Method method = cfg_.method;
        forecast::TransformKind transform = cfg_.transform;
        forecast::ForecastParams params = cfg_.params;
        const bool use_grid = opts_.evaluate.value_or(cfg_.grid);
        std::optional<double> lambda = cfg_.params.lambda;

        if (use_grid) {
            auto grid = cfg_.evaluation;
            for (int& h : grid.horizons) {
                h /= step;
            }
            auto report = forecast::post_sample_evaluate(y, grid);
            lambda = report.lambda;

            std::ostringstream ev;
            ev << "method,transform,parameter,horizon_days,rmse,aic,n_origins,failed_origins\n";
            for (const auto& c : report.cells) {
                ev << forecast::to_string(c.method) << ',' << forecast::to_string(c.transform) << ','
                   << io::format_number(c.parameter) << ',' << c.horizon * step << ',' << io::format_number(c.rmse) << ','
                   << io::format_number(c.aic) << ',' << c.n_origins << ',' << c.failed_origins << '\n';
            }
            add_file("evaluation.csv", ev.str());

            std::ostringstream sc;
            sc << "date,method,transform,parameter,horizon_days,forecast,observed\n";
            json best = json::array();
            for (auto m : grid.methods) {
                for (int h : grid.horizons) {
                    const auto* cell = report.best(m, h);
                    if (!cell) {
                        continue;
                    }
                    const auto* by_aic = report.best_by_aic(m, h);
                    best.push_back({{"method", std::string(forecast::to_string(m))},
                                    {"horizon_days", h * step},
                                    {"transform", std::string(forecast::to_string(cell->transform))},
                                    {"parameter", cell->parameter},
                                    {"rmse", number_or_null(cell->rmse)},
                                    {"aic", number_or_null(cell->aic)},
                                    {"n_origins", cell->n_origins},
                                    {"best_by_aic",
                                     by_aic ? json{{"transform", std::string(forecast::to_string(by_aic->transform))},
                                                   {"parameter", by_aic->parameter},
                                                   {"aic", number_or_null(by_aic->aic)}}
                                            : json(nullptr)}});
                    for (const auto& o : cell->origins) {
                        sc << series.date_at(o.origin + static_cast<std::size_t>(h) - 1).iso() << ','
                           << forecast::to_string(m) << ',' << forecast::to_string(cell->transform) << ','
                           << io::format_number(cell->parameter) << ',' << h * step << ','
                           << io::format_number(o.forecast) << ',' << io::format_number(o.observed) << '\n';
                    }
                }
            }
            add_file("postsample_scatter.csv", sc.str());

            const int h_sel = cfg_.horizon_days / step;
            const bool evaluated = std::find(grid.horizons.begin(), grid.horizons.end(), h_sel) != grid.horizons.end();
            const auto* chosen = report.best(method, evaluated ? h_sel : grid.horizons.front());
            if (!chosen) {
                throw NumericError("post-sample evaluation produced no usable " +
                                   std::string(forecast::to_string(method)) + " cell");
            }
            transform = chosen->transform;
            if (method == forecast::Method::Ses) {
                params.alpha = chosen->parameter;
            } else {
                params.order = static_cast<int>(chosen->parameter);
            }
            if (transform == forecast::TransformKind::BoxCoxDifference) {
                params.lambda = report.lambda;
            }
            rep["evaluation"] = {{"first_origin", report.first_origin},
                                 {"lambda", report.lambda ? json(*report.lambda) : json(nullptr)},
                                 {"lambda_scope", report.lambda_scope},
                                 {"cells", report.cells.size()},
                                 {"best", best}};
            res_.evaluation = std::move(report);
        }

        const int horizon = cfg_.horizon_days / step;
        auto result = forecast::fit_and_forecast(y, method, transform, params, horizon);
        json model = {{"method", std::string(forecast::to_string(method))},
                      {"transform", std::string(forecast::to_string(transform))},
                      {"horizon_days", cfg_.horizon_days}};
        if (method == forecast::Method::Ses) {
            model["alpha"] = result.model.alpha;
        } else {
            model["order"] = result.model.ar.order();
            model["c"] = result.model.ar.c;
            model["phi"] = result.model.ar.phi;
        }
        if (auto l = result.model.transform.lambda()) {
            model["lambda"] = *l;
            lambda = l;
        }
        rep["model"] = model;

        std::vector<std::string> fflags(result.values.size(), "forecast");
        add_file("forecast.csv",
                 io::series_csv(RegularSeries::dense(series.date_at(y.size()), step, result.values), fflags));
        rep["forecast"] = result.values;

        // Q-Q data of the (Box-Cox transformed) series.
        std::vector<double> qq_input = y;
        const bool positive = std::all_of(y.begin(), y.end(), [](double v) { return v > 0.0; });
        if (positive) {
            if (!lambda && y.size() >= 20) {
                lambda = forecast::boxcox_mle(y);
            }
            if (lambda) {
                qq_input = forecast::boxcox(y, *lambda);
                rep["qq_lambda"] = *lambda;
            }
        } else {
            warn("Q-Q data uses the untransformed series: it has non-positive values");
        }
        std::ostringstream qq;
        qq << "theoretical,sample\n";
        for (const auto& p : forecast::qq_normal(qq_input)) {
            qq << io::format_number(p.theoretical) << ',' << io::format_number(p.sample) << '\n';
        }
        add_file("qq.csv", qq.str());
        res_.forecast = std::move(result);
        res_.report["forecast"] = rep;
    }
};

}  // namespace

StageError::StageError(Stage stage, ErrorKind kind, const std::string& cause)
    : std::runtime_error("stage " + std::string(to_string(stage)) + ": " + cause),
      stage_(stage),
      kind_(kind),
      cause_(cause) {}

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::Ingest: return "ingest";
        case Stage::Preprocess: return "preprocess";
        case Stage::Resample: return "resample";
        case Stage::Smooth: return "smooth";
        case Stage::Regress: return "regress";
        case Stage::Forecast: return "forecast";
    }
    return "?";
}

Stage parse_stage(std::string_view s) {
    for (Stage st : {Stage::Ingest, Stage::Preprocess, Stage::Resample, Stage::Smooth, Stage::Regress, Stage::Forecast}) {
        if (to_string(st) == s) {
            return st;
        }
    }
    if (s == "evaluate") {
        return Stage::Forecast;
    }
    throw ConfigError("unknown stage '" + std::string(s) +
                      "' (expected ingest, preprocess, resample, smooth, regress, forecast or evaluate)");
}

const std::string* RunResult::file(std::string_view name) const {
    for (const auto& [n, c] : files) {
        if (n == name) {
            return &c;
        }
    }
    return nullptr;
}

RunResult run(const PipelineConfig& cfg, const io::IngestResult& data, const RunOptions& opts) {
    return Runner(cfg, opts).from_measurements(data);
}

RunResult run_from_normalized(const PipelineConfig& cfg, const std::vector<io::SeriesRow>& rows,
                              const std::optional<io::IngestResult>& indicators, const RunOptions& opts) {
    return Runner(cfg, opts).from_normalized(rows, indicators);
}

RunResult run_from_series(const PipelineConfig& cfg, const std::vector<io::SeriesRow>& rows,
                          const std::optional<io::IngestResult>& indicators, const RunOptions& opts) {
    return Runner(cfg, opts).from_series(rows, indicators);
}

std::string report_text(const nlohmann::json& report) { return rounded(report).dump(2) + "\n"; }

void write_outputs(const RunResult& result, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw DataError("cannot create output directory " + dir.string());
    }
    for (const auto& [name, content] : result.files) {
        io::write_file_atomic(dir / name, content);
    }
    io::write_file_atomic(dir / "report.json", report_text(result.report));
}

std::string synthetic_csv(const synthetic::Scenario& scenario, const synthetic::Generated& g) {
    std::ostringstream out;
    for (std::size_t i = 0; i < std::size(io::kIngestColumns); ++i) {
        out << (i ? "," : "") << io::kIngestColumns[i];
    }
    out << '\n';
    const auto history_start = scenario.start.plus_days(-static_cast<long>(g.flow_history.size()));
    for (std::size_t i = 0; i < g.flow_history.size(); ++i) {
        out << history_start.plus_days(static_cast<long>(i)).iso() << ",," << io::format_number(g.flow_history[i])
            << ",,,,,,\n";
    }
    auto opt = [](const std::optional<double>& v) { return v ? io::format_number(*v) : std::string(); };
    for (const auto& d : g.days) {
        out << d.date.iso() << ',';
        if (d.sample) {
            out << io::format_number(d.sample->c_virus);
        }
        out << ',' << io::format_number(d.flow) << ',';
        if (d.sample) {
            out << opt(d.sample->c_nh4) << ',' << opt(d.sample->c_cod) << ',' << opt(d.sample->c_ntot);
        } else {
            out << ",,";
        }
        out << ',' << io::format_number(d.tests) << ',' << io::format_number(d.variant_share_pct) << ','
            << io::format_number(d.new_infections) << '\n';
    }
    return out.str();
}

std::string synthetic_truth_csv(const synthetic::Generated& g) {
    std::vector<io::NamedSeries> series{{"prevalence", {}},
                                        {"true_load", {}},
                                        {"new_infections", {}},
                                        {"tests", {}},
                                        {"variant_share_pct", {}}};
    for (const auto& d : g.days) {
        series[0].points.push_back({d.date, d.prevalence});
        series[1].points.push_back({d.date, d.true_load});
        series[2].points.push_back({d.date, d.new_infections});
        series[3].points.push_back({d.date, d.tests});
        series[4].points.push_back({d.date, d.variant_share_pct});
    }
    return io::long_csv(series);
}

}  // namespace wbe::pipeline
