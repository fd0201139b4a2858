#include "wbe/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>

#include "wbe/error.hpp"

namespace wbe::pipeline {

namespace {

using preprocess::Biomarker;

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_list(std::string_view v, char sep = ',') {
    std::vector<std::string_view> out;
    v = trim(v);
    if (v.empty()) {
        return out;
    }
    std::size_t pos = 0;
    while (true) {
        const auto c = v.find(sep, pos);
        out.push_back(trim(v.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos)));
        if (c == std::string_view::npos) {
            break;
        }
        pos = c + 1;
    }
    return out;
}

double to_double(std::string_view key, std::string_view v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
        throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
    }
    return out;
}

long long to_integer(std::string_view key, std::string_view v) {
    long long out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
        throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
    }
    return out;
}

int to_int(std::string_view key, std::string_view v) {
    const auto x = to_integer(key, v);
    if (x < -1000000000LL || x > 1000000000LL) {
        throw ConfigError(std::string(key) + ": value out of range");
    }
    return static_cast<int>(x);
}

bool to_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "yes" || v == "on" || v == "1") {
        return true;
    }
    if (v == "false" || v == "no" || v == "off" || v == "0") {
        return false;
    }
    throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

std::vector<int> to_int_list(std::string_view key, std::string_view v) {
    std::vector<int> out;
    for (auto item : split_list(v)) {
        out.push_back(to_int(key, item));
    }
    if (out.empty()) {
        throw ConfigError(std::string(key) + ": list must not be empty");
    }
    return out;
}

std::vector<double> to_double_list(std::string_view key, std::string_view v) {
    std::vector<double> out;
    for (auto item : split_list(v)) {
        out.push_back(to_double(key, item));
    }
    if (out.empty()) {
        throw ConfigError(std::string(key) + ": list must not be empty");
    }
    return out;
}

template <class E>
E pick(std::string_view key, std::string_view v, std::initializer_list<std::pair<std::string_view, E>> options) {
    std::string allowed;
    for (const auto& [name, value] : options) {
        if (name == v) {
            return value;
        }
        allowed += allowed.empty() ? "" : ", ";
        allowed += name;
    }
    throw ConfigError(std::string(key) + ": unknown value '" + std::string(v) + "' (expected one of " + allowed + ")");
}

using Setter = std::function<void(PipelineConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const auto table = [] {
        std::map<std::string, Setter, std::less<>> t;
        t["seed"] = [](PipelineConfig& c, auto k, auto v) {
            const auto x = to_integer(k, v);
            if (x < 0) {
                throw ConfigError("seed must be >= 0");
            }
            c.seed = static_cast<std::uint64_t>(x);
            c.scenario.seed = c.seed;
        };
        t["output.dir"] = [](PipelineConfig& c, auto, auto v) { c.output_dir = std::string(v); };

        t["biomarker.policy"] = [](PipelineConfig& c, auto k, auto v) {
            c.biomarker.policy = pick<preprocess::NormalizationPolicy>(
                k, v, {{"fallback", preprocess::NormalizationPolicy::Fallback}, {"mean", preprocess::NormalizationPolicy::Mean}});
        };
        t["biomarker.order"] = [](PipelineConfig& c, auto, auto v) {
            c.biomarker.fallback_order.clear();
            for (auto item : split_list(v)) {
                c.biomarker.fallback_order.push_back(preprocess::parse_biomarker(item));
            }
        };
        t["biomarker.calibrate"] = [](PipelineConfig& c, auto k, auto v) { c.calibrate = to_bool(k, v); };
        for (Biomarker b : {Biomarker::Nh4, Biomarker::Cod, Biomarker::Ntot}) {
            const std::string name(preprocess::to_string(b));
            t["biomarker.load." + name] = [b](PipelineConfig& c, auto k, auto v) { c.biomarker.loads[b] = to_double(k, v); };
            t["biomarker.calibration." + name] = [b](PipelineConfig& c, auto k, auto v) {
                c.biomarker.calibration[b] = to_double(k, v);
            };
            t["biomarker.cap." + name] = [b](PipelineConfig& c, auto k, auto v) {
                if (v == "none") {
                    c.biomarker.outlier_caps.erase(b);
                } else {
                    c.biomarker.outlier_caps[b] = to_double(k, v);
                }
            };
            t["synth.bias." + name] = [b](PipelineConfig& c, auto k, auto v) { c.scenario.biomarker_bias[b] = to_double(k, v); };
        }

        t["preprocess.flow_filter"] = [](PipelineConfig& c, auto k, auto v) { c.flow_filter = to_bool(k, v); };
        t["preprocess.screen"] = [](PipelineConfig& c, auto k, auto v) { c.biomarker_screen = to_bool(k, v); };

        t["resampling.method"] = [](PipelineConfig& c, auto k, auto v) {
            c.resampling = pick<Resampling>(k, v,
                                            {{"weekly_block", Resampling::WeeklyBlock},
                                             {"daily_linear", Resampling::DailyLinear},
                                             {"daily_shepard", Resampling::DailyShepard}});
        };
        t["resampling.shepard_power"] = [](PipelineConfig& c, auto k, auto v) { c.shepard_power = to_double(k, v); };

        t["smoother.method"] = [](PipelineConfig& c, auto k, auto v) {
            c.smoother = pick<SmootherChoice>(k, v,
                                              {{"auto", SmootherChoice::Auto},
                                               {"sma", SmootherChoice::Sma},
                                               {"loess", SmootherChoice::Loess},
                                               {"none", SmootherChoice::None}});
        };
        t["smoother.window"] = [](PipelineConfig& c, auto k, auto v) { c.sma_window = to_int(k, v); };
        t["smoother.neighbors"] = [](PipelineConfig& c, auto k, auto v) { c.loess_neighbors = to_int(k, v); };
        t["smoother.window_candidates"] = [](PipelineConfig& c, auto k, auto v) { c.sma_candidates = to_int_list(k, v); };
        t["smoother.neighbor_candidates"] = [](PipelineConfig& c, auto k, auto v) {
            c.loess_candidates = to_int_list(k, v);
        };

        t["regression.target"] = [](PipelineConfig& c, auto k, auto v) {
            c.target = pick<RegressionTarget>(
                k, v, {{"new_infections", RegressionTarget::NewInfections}, {"incidence", RegressionTarget::Incidence}});
        };
        t["regression.covariates"] = [](PipelineConfig& c, auto k, auto v) {
            c.covariates.clear();
            for (auto item : split_list(v)) {
                if (item != "tests" && item != "variant_share_pct") {
                    throw ConfigError(std::string(k) + ": unknown covariate '" + std::string(item) + "'");
                }
                c.covariates.emplace_back(item);
            }
        };
        t["regression.max_lag"] = [](PipelineConfig& c, auto k, auto v) { c.max_lag = to_int(k, v); };
        t["regression.lag"] = [](PipelineConfig& c, auto k, auto v) {
            if (v == "auto") {
                c.lag.reset();
            } else {
                c.lag = to_int(k, v);
            }
        };
        t["regression.polynomial_order"] = [](PipelineConfig& c, auto k, auto v) { c.polynomial_order = to_int(k, v); };
        t["regression.level"] = [](PipelineConfig& c, auto k, auto v) { c.band_level = to_double(k, v); };
        t["regression.population"] = [](PipelineConfig& c, auto k, auto v) { c.population = to_double(k, v); };

        t["forecast.method"] = [](PipelineConfig& c, auto, auto v) { c.method = forecast::parse_method(v); };
        t["forecast.transform"] = [](PipelineConfig& c, auto, auto v) { c.transform = forecast::parse_transform(v); };
        t["forecast.params"] = [](PipelineConfig& c, auto k, auto v) {
            c.grid = pick<bool>(k, v, {{"grid", true}, {"fixed", false}});
        };
        t["forecast.alpha"] = [](PipelineConfig& c, auto k, auto v) { c.params.alpha = to_double(k, v); };
        t["forecast.order"] = [](PipelineConfig& c, auto k, auto v) { c.params.order = to_int(k, v); };
        t["forecast.lambda"] = [](PipelineConfig& c, auto k, auto v) {
            if (v == "auto") {
                c.params.lambda.reset();
                c.evaluation.lambda.reset();
            } else {
                c.params.lambda = to_double(k, v);
                c.evaluation.lambda = c.params.lambda;
            }
        };
        t["forecast.horizon"] = [](PipelineConfig& c, auto k, auto v) { c.horizon_days = to_int(k, v); };

        t["evaluate.methods"] = [](PipelineConfig& c, auto, auto v) {
            c.evaluation.methods.clear();
            for (auto item : split_list(v)) {
                c.evaluation.methods.push_back(forecast::parse_method(item));
            }
        };
        t["evaluate.transforms"] = [](PipelineConfig& c, auto, auto v) {
            c.evaluation.transforms.clear();
            for (auto item : split_list(v)) {
                c.evaluation.transforms.push_back(forecast::parse_transform(item));
            }
        };
        t["evaluate.alphas"] = [](PipelineConfig& c, auto k, auto v) { c.evaluation.alphas = to_double_list(k, v); };
        t["evaluate.orders"] = [](PipelineConfig& c, auto k, auto v) { c.evaluation.orders = to_int_list(k, v); };
        t["evaluate.horizons"] = [](PipelineConfig& c, auto k, auto v) { c.evaluation.horizons = to_int_list(k, v); };
        t["evaluate.p_max"] = [](PipelineConfig& c, auto k, auto v) { c.evaluation.p_max = to_int(k, v); };
        t["evaluate.scoring"] = [](PipelineConfig& c, auto k, auto v) {
            c.evaluation.scoring =
                pick<forecast::Scoring>(k, v, {{"endpoint", forecast::Scoring::Endpoint}, {"average", forecast::Scoring::Average}});
        };
        t["evaluate.first_origin"] = [](PipelineConfig& c, auto k, auto v) {
            if (v == "auto") {
                c.evaluation.first_origin.reset();
                return;
            }
            const int x = to_int(k, v);
            if (x < 1) {
                throw ConfigError(std::string(k) + " must be >= 1");
            }
            c.evaluation.first_origin = static_cast<std::size_t>(x);
        };

        t["synth.start"] = [](PipelineConfig& c, auto, auto v) {
            try {
                c.scenario.start = TimePoint::parse(v);
            } catch (const DataError& e) {
                throw ConfigError(std::string("synth.start: ") + e.what());
            }
        };
        t["synth.duration_days"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.duration_days = to_int(k, v); };
        t["synth.waves"] = [](PipelineConfig& c, auto k, auto v) {
            c.scenario.waves.clear();
            for (auto item : split_list(v, ';')) {
                const auto parts = split_list(item, ':');
                if (parts.size() != 3) {
                    throw ConfigError(std::string(k) + ": each wave is peak_day:peak_prevalence:width_days");
                }
                c.scenario.waves.push_back({to_double(k, parts[0]), to_double(k, parts[1]), to_double(k, parts[2])});
            }
        };
        t["synth.population"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.population = to_double(k, v); };
        t["synth.shed_load"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.shed_load = to_double(k, v); };
        t["synth.flow_base"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.flow_base = to_double(k, v); };
        t["synth.sampling"] = [](PipelineConfig& c, auto k, auto v) {
            c.scenario.sampling = pick<synthetic::SamplingSchedule>(k, v,
                                                                   {{"daily", synthetic::SamplingSchedule::Daily},
                                                                    {"twice_weekly", synthetic::SamplingSchedule::TwiceWeekly},
                                                                    {"irregular", synthetic::SamplingSchedule::Irregular}});
        };
        t["synth.noise.virus"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.noise.virus = to_double(k, v); };
        t["synth.noise.biomarker"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.noise.biomarker = to_double(k, v); };
        t["synth.noise.flow"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.noise.flow = to_double(k, v); };
        t["synth.noise.indicator"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.noise.indicator = to_double(k, v); };
        t["synth.rain_probability"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.rain_probability = to_double(k, v); };
        t["synth.rain_factor_max"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.rain_factor_max = to_double(k, v); };
        t["synth.flow_history_days"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.flow_history_days = to_int(k, v); };
        t["synth.detection_fraction"] = [](PipelineConfig& c, auto k, auto v) {
            c.scenario.detection_fraction = to_double(k, v);
        };
        t["synth.indicator_lag_days"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.indicator_lag_days = to_int(k, v); };
        t["synth.infectious_days"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.infectious_days = to_double(k, v); };
        t["synth.tests_base"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.tests_base = to_double(k, v); };
        t["synth.test_elasticity"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.test_elasticity = to_double(k, v); };
        t["synth.variant_midpoint_day"] = [](PipelineConfig& c, auto k, auto v) {
            c.scenario.variant_midpoint_day = to_double(k, v);
        };
        t["synth.variant_width_days"] = [](PipelineConfig& c, auto k, auto v) { c.scenario.variant_width_days = to_double(k, v); };
        t["synth.variant_shed_effect"] = [](PipelineConfig& c, auto k, auto v) {
            c.scenario.variant_shed_effect = to_double(k, v);
        };
        return t;
    }();
    return table;
}

}  // namespace

std::string_view to_string(Resampling r) {
    switch (r) {
        case Resampling::WeeklyBlock: return "weekly_block";
        case Resampling::DailyLinear: return "daily_linear";
        case Resampling::DailyShepard: return "daily_shepard";
    }
    return "?";
}

std::string_view to_string(SmootherChoice s) {
    switch (s) {
        case SmootherChoice::Auto: return "auto";
        case SmootherChoice::Sma: return "sma";
        case SmootherChoice::Loess: return "loess";
        case SmootherChoice::None: return "none";
    }
    return "?";
}

std::string_view to_string(RegressionTarget t) {
    return t == RegressionTarget::NewInfections ? "new_infections" : "incidence";
}

void PipelineConfig::validate() const {
    biomarker.validate();
    if (resampling == Resampling::WeeklyBlock && smoother == SmootherChoice::Loess) {
        throw ConfigError("smoother.method = loess needs a daily resampling method");
    }
    if (!(shepard_power > 0.0)) {
        throw ConfigError("resampling.shepard_power must be > 0");
    }
    auto odd_positive = [](int k) { return k >= 1 && k % 2 == 1; };
    if (!odd_positive(sma_window)) {
        throw ConfigError("smoother.window must be odd and >= 1");
    }
    if (!std::all_of(sma_candidates.begin(), sma_candidates.end(), odd_positive)) {
        throw ConfigError("smoother.window_candidates must be odd and >= 1");
    }
    if (loess_neighbors < 3 ||
        !std::all_of(loess_candidates.begin(), loess_candidates.end(), [](int k) { return k >= 3; })) {
        throw ConfigError("LOESS neighbour counts must be >= 3");
    }
    if ((max_lag && *max_lag < 0) || (lag && *lag < 0)) {
        throw ConfigError("regression lags must be >= 0");
    }
    if (polynomial_order < 1) {
        throw ConfigError("regression.polynomial_order must be >= 1");
    }
    if (!(band_level > 0.0 && band_level < 1.0)) {
        throw ConfigError("regression.level must be in (0, 1)");
    }
    if (!(population > 0.0)) {
        throw ConfigError("regression.population must be > 0");
    }
    if (!(params.alpha > 0.0 && params.alpha <= 1.0)) {
        throw ConfigError("forecast.alpha must be in (0, 1]");
    }
    if (params.order < 1) {
        throw ConfigError("forecast.order must be >= 1");
    }
    const int step = step_days();
    auto check_horizon = [step](int days, const char* key) {
        if (days < 1 || days % step != 0) {
            throw ConfigError(std::string(key) + " must be a positive multiple of the grid step (" + std::to_string(step) +
                              " days)");
        }
    };
    check_horizon(horizon_days, "forecast.horizon");
    if (evaluation.horizons.empty() || evaluation.methods.empty() || evaluation.transforms.empty()) {
        throw ConfigError("evaluation grid must not be empty");
    }
    for (int h : evaluation.horizons) {
        check_horizon(h, "evaluate.horizons");
    }
    for (double a : evaluation.alphas) {
        if (!(a > 0.0 && a <= 1.0)) {
            throw ConfigError("evaluate.alphas must lie in (0, 1]");
        }
    }
    for (int p : evaluation.orders) {
        if (p < 1 || p > evaluation.p_max) {
            throw ConfigError("evaluate.orders must lie in [1, evaluate.p_max]");
        }
    }
    scenario.validate();
}

void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
    const auto& table = setters();
    auto it = table.find(key);
    if (it == table.end()) {
        throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
    it->second(cfg, key, trim(value));
}

PipelineConfig parse_config(std::istream& in, const std::string& source) {
    PipelineConfig cfg;
    std::set<std::string, std::less<>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view s = trim(line);
        if (s.empty() || s.front() == '#') {
            continue;
        }
        const auto eq = s.find('=');
        const std::string at = source + ":" + std::to_string(line_no) + ": ";
        if (eq == std::string_view::npos) {
            throw ConfigError(at + "expected 'key = value'");
        }
        const auto key = trim(s.substr(0, eq));
        const auto value = trim(s.substr(eq + 1));
        if (key.empty() || !std::all_of(key.begin(), key.end(), [](char ch) {
                return std::islower(static_cast<unsigned char>(ch)) || std::isdigit(static_cast<unsigned char>(ch)) ||
                       ch == '_' || ch == '.';
            })) {
            throw ConfigError(at + "malformed key '" + std::string(key) + "'");
        }
        if (!seen.insert(std::string(key)).second) {
            throw ConfigError(at + "duplicate key '" + std::string(key) + "'");
        }
        try {
            set_config_value(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(at + e.what());
        } catch (const DataError& e) {
            throw ConfigError(at + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    return parse_config(in, path.filename().string());
}

}  // namespace wbe::pipeline
