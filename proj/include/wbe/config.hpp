#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wbe/forecast.hpp"
#include "wbe/preprocess.hpp"
#include "wbe/smoothing.hpp"
#include "wbe/synthetic.hpp"

namespace wbe::pipeline {

enum class Resampling { WeeklyBlock, DailyLinear, DailyShepard };
enum class SmootherChoice { Auto, Sma, Loess, None };
enum class RegressionTarget { NewInfections, Incidence };

std::string_view to_string(Resampling r);
std::string_view to_string(SmootherChoice s);
std::string_view to_string(RegressionTarget t);

struct PipelineConfig {
    std::uint64_t seed = 42;
    std::string output_dir = "out";

    preprocess::BiomarkerConfig biomarker = preprocess::BiomarkerConfig::defaults();
    /// Replace calibration factors by those estimated from the input.
    bool calibrate = false;
    bool flow_filter = true;
    bool biomarker_screen = true;

    Resampling resampling = Resampling::WeeklyBlock;
    double shepard_power = 2.0;

    SmootherChoice smoother = SmootherChoice::Auto;
    int sma_window = 3;
    int loess_neighbors = 11;
    std::vector<int> sma_candidates{3, 5, 7, 9};
    std::vector<int> loess_candidates{7, 9, 11, 15, 21};

    RegressionTarget target = RegressionTarget::NewInfections;
    std::vector<std::string> covariates;  // "tests", "variant_share_pct"
    std::optional<int> max_lag;           // steps; 14 daily, 4 weekly when empty
    std::optional<int> lag;               // fixed lag in steps; best cross-correlation lag when empty
    int polynomial_order = 3;
    double band_level = 0.90;
    double population = 1.9e6;  // per-100k incidence scaling

    forecast::Method method = forecast::Method::Ar;
    forecast::TransformKind transform = forecast::TransformKind::None;
    bool grid = true;  // choose parameters by post-sample evaluation
    forecast::ForecastParams params;
    int horizon_days = 14;
    forecast::EvaluationGrid evaluation;  // horizons are stored in days here

    synthetic::Scenario scenario;

    int step_days() const { return resampling == Resampling::WeeklyBlock ? 7 : 1; }
    /// Throws ConfigError on inconsistent settings.
    void validate() const;
};

/// Parses `key = value` lines; see README for the grammar and the key list.
PipelineConfig parse_config(std::istream& in, const std::string& source = "config");
PipelineConfig load_config(const std::filesystem::path& path);
/// Applies a single assignment (also used for command-line overrides).
void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value);

}  // namespace wbe::pipeline
