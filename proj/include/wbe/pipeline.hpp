#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wbe/config.hpp"
#include "wbe/csv.hpp"
#include "wbe/forecast.hpp"
#include "wbe/preprocess.hpp"
#include "wbe/regression.hpp"
#include "wbe/series.hpp"

namespace wbe::pipeline {

inline constexpr std::string_view kReportSchema = "wbe.run_report/1";

/// Fixed stage order.
enum class Stage { Ingest, Preprocess, Resample, Smooth, Regress, Forecast };

std::string_view to_string(Stage s);
/// Accepts the stage names plus "evaluate" (same as forecast).
Stage parse_stage(std::string_view s);

enum class ErrorKind { Usage, Data, Numeric };

/// A stage failed; carries the stage and the error class for exit codes.
class StageError : public std::runtime_error {
public:
    StageError(Stage stage, ErrorKind kind, const std::string& cause);
    Stage stage() const { return stage_; }
    ErrorKind kind() const { return kind_; }
    const std::string& cause() const { return cause_; }

private:
    Stage stage_;
    ErrorKind kind_;
    std::string cause_;
};

enum class LogLevel { Error, Warn, Info, Debug };

struct RunOptions {
    Stage stop_after = Stage::Forecast;
    bool allow_raw = false;
    /// Overrides forecast.params: true forces the post-sample grid, false uses fixed parameters.
    std::optional<bool> evaluate;
    std::function<void(LogLevel, const std::string&)> log;
};

struct RegressionOutput {
    regression::LagTable lags;
    int lag = 0;
    regression::RegressionFit linear;
    regression::RegressionFit polynomial;
    std::vector<std::string> feature_names;
};

struct RunResult {
    nlohmann::json report;
    /// Output file name -> content, in write order.
    std::vector<std::pair<std::string, std::string>> files;
    std::vector<std::string> warnings;

    std::vector<preprocess::NormalizedPoint> normalized;
    ScatteredSeries l_virus;  // points kept for the downstream series
    RegularSeries resampled;
    RegularSeries smoothed;
    bool smoothed_is_raw = false;
    std::optional<RegressionOutput> regression;
    std::optional<forecast::EvaluationReport> evaluation;
    std::optional<forecast::ForecastResult> forecast;

    const std::string* file(std::string_view name) const;
};

/// Runs from raw measurements.
RunResult run(const PipelineConfig& cfg, const io::IngestResult& data, const RunOptions& opts = {});

/// Runs from a normalized series file (date, value, flags); rows flagged flow_outlier or unusable are
/// dropped. `indicators` supplies the regression target when present.
RunResult run_from_normalized(const PipelineConfig& cfg, const std::vector<io::SeriesRow>& rows,
                              const std::optional<io::IngestResult>& indicators, const RunOptions& opts = {});

/// Runs regression/forecast on a ready grid series. Rows all flagged "smoothed" count as smoothed input.
RunResult run_from_series(const PipelineConfig& cfg, const std::vector<io::SeriesRow>& rows,
                          const std::optional<io::IngestResult>& indicators, const RunOptions& opts = {});

/// Writes every file of the result plus report.json into `dir` (created if needed), each atomically.
void write_outputs(const RunResult& result, const std::filesystem::path& dir);

/// Report JSON with numbers rounded to 12 significant digits, NaN as null.
std::string report_text(const nlohmann::json& report);

/// Measurement CSV for a generated scenario: flow-history rows, then one row per campaign day.
std::string synthetic_csv(const synthetic::Scenario& scenario, const synthetic::Generated& g);
/// Long-format truth series (prevalence, true_load, new_infections, tests, variant_share_pct).
std::string synthetic_truth_csv(const synthetic::Generated& g);

}  // namespace wbe::pipeline
