#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "wbe/config.hpp"
#include "wbe/csv.hpp"
#include "wbe/error.hpp"
#include "wbe/pipeline.hpp"
#include "wbe/synthetic.hpp"

namespace fs = std::filesystem;
using namespace wbe;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Options {
    std::string config;
    std::string input;
    std::string indicators;
    std::string output;
    std::optional<std::uint64_t> seed;
    bool allow_raw = false;
    std::string stage;
    std::vector<std::string> overrides;
};

int report_error(std::string_view kind, std::string_view stage, const std::string& message, int code) {
    nlohmann::json j = {{"error", {{"kind", kind}, {"stage", stage}, {"message", message}, {"exit_code", code}}}};
    std::cerr << j.dump() << '\n';
    return code;
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("wbe");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    const char* env = std::getenv("WBE_LOG_LEVEL");
    const std::string level = env ? env : "warn";
    if (level == "error") {
        spdlog::set_level(spdlog::level::err);
    } else if (level == "warn") {
        spdlog::set_level(spdlog::level::warn);
    } else if (level == "info") {
        spdlog::set_level(spdlog::level::info);
    } else if (level == "debug") {
        spdlog::set_level(spdlog::level::debug);
    } else {
        throw ConfigError("WBE_LOG_LEVEL must be one of error, warn, info, debug");
    }
}

void log_sink(pipeline::LogLevel level, const std::string& msg) {
    switch (level) {
        case pipeline::LogLevel::Error: spdlog::error(msg); break;
        case pipeline::LogLevel::Warn: spdlog::warn(msg); break;
        case pipeline::LogLevel::Info: spdlog::info(msg); break;
        case pipeline::LogLevel::Debug: spdlog::debug(msg); break;
    }
}

pipeline::PipelineConfig load(const Options& o) {
    auto cfg = o.config.empty() ? pipeline::PipelineConfig{} : pipeline::load_config(o.config);
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        }
        pipeline::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.scenario.seed = *o.seed;
    }
    if (!o.output.empty()) {
        cfg.output_dir = o.output;
    }
    cfg.validate();
    return cfg;
}

int run_synth(const Options& o) {
    const auto cfg = load(o);
    const auto g = synthetic::generate(cfg.scenario);
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    io::write_file_atomic(dir / "synthetic.csv", pipeline::synthetic_csv(cfg.scenario, g));
    io::write_file_atomic(dir / "truth.csv", pipeline::synthetic_truth_csv(g));
    spdlog::info("wrote {} samples over {} days to {}", g.samples.size(), g.days.size(), dir.string());
    return kOk;
}

int run_pipeline(const Options& o, pipeline::Stage last, std::optional<bool> evaluate) {
    const auto cfg = load(o);
    pipeline::RunOptions ro;
    ro.stop_after = last;
    if (!o.stage.empty()) {
        ro.stop_after = std::min(last, pipeline::parse_stage(o.stage));
    }
    ro.allow_raw = o.allow_raw;
    ro.evaluate = evaluate;
    ro.log = log_sink;
    if (o.input.empty()) {
        throw ConfigError("--input is required");
    }

    std::optional<io::IngestResult> indicators;
    if (!o.indicators.empty()) {
        try {
            indicators = io::ingest_csv(o.indicators);
        } catch (const DataError& e) {
            throw pipeline::StageError(pipeline::Stage::Ingest, pipeline::ErrorKind::Data, e.what());
        }
    }

    bool series_input = false;
    try {
        series_input = io::is_series_csv(o.input);
    } catch (const DataError& e) {
        throw pipeline::StageError(pipeline::Stage::Ingest, pipeline::ErrorKind::Data, e.what());
    }

    pipeline::RunResult result;
    if (!series_input) {
        io::IngestResult data;
        try {
            data = io::ingest_csv(o.input);
        } catch (const DataError& e) {
            throw pipeline::StageError(pipeline::Stage::Ingest, pipeline::ErrorKind::Data, e.what());
        }
        result = pipeline::run(cfg, data, ro);
    } else {
        std::vector<io::SeriesRow> rows;
        try {
            rows = io::read_series_csv(o.input);
        } catch (const DataError& e) {
            throw pipeline::StageError(pipeline::Stage::Ingest, pipeline::ErrorKind::Data, e.what());
        }
        if (last <= pipeline::Stage::Preprocess) {
            throw ConfigError("this subcommand needs the measurement CSV as input");
        }
        if (last == pipeline::Stage::Smooth) {
            result = pipeline::run_from_normalized(cfg, rows, indicators, ro);
        } else {
            result = pipeline::run_from_series(cfg, rows, indicators, ro);
        }
    }
    pipeline::write_outputs(result, cfg.output_dir);
    spdlog::info("wrote {} files to {}", result.files.size() + 1, cfg.output_dir);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wastewater epidemiology modelling pipeline"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub, bool needs_input) {
        sub->add_option("--config", o.config, "Config file (key = value)")->check(CLI::ExistingFile);
        auto* in = sub->add_option("--input", o.input, "Input CSV");
        if (needs_input) {
            in->required()->check(CLI::ExistingFile);
        }
        sub->add_option("--output", o.output, "Output directory");
        sub->add_option("--seed", o.seed, "Random seed");
        sub->add_option("--set", o.overrides, "Config override key=value (repeatable)");
    };
    auto add_pipeline = [&](CLI::App* sub) {
        add_common(sub, true);
        sub->add_flag("--allow-raw", o.allow_raw, "Allow regression/forecast without smoothing");
        sub->add_option("--stage", o.stage, "Stop after this stage");
        sub->add_option("--indicators", o.indicators, "Measurement CSV providing indicator columns")
            ->check(CLI::ExistingFile);
    };

    auto* synth = app.add_subcommand("synth", "Generate a synthetic monitoring campaign");
    add_common(synth, false);
    auto* pre = app.add_subcommand("preprocess", "Normalize and screen samples");
    add_pipeline(pre);
    auto* smooth = app.add_subcommand("smooth", "Resample and smooth");
    add_pipeline(smooth);
    auto* regress = app.add_subcommand("regress", "Lag analysis and regression against indicators");
    add_pipeline(regress);
    auto* fc = app.add_subcommand("forecast", "Forecast the smoothed series");
    add_pipeline(fc);
    auto* ev = app.add_subcommand("evaluate", "Post-sample evaluation grid and forecast");
    add_pipeline(ev);
    auto* all = app.add_subcommand("run", "Full pipeline");
    add_pipeline(all);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        setup_logging();
        using pipeline::Stage;
        if (synth->parsed()) {
            return run_synth(o);
        }
        if (pre->parsed()) {
            return run_pipeline(o, Stage::Preprocess, std::nullopt);
        }
        if (smooth->parsed()) {
            return run_pipeline(o, Stage::Smooth, std::nullopt);
        }
        if (regress->parsed()) {
            return run_pipeline(o, Stage::Regress, std::nullopt);
        }
        if (fc->parsed()) {
            return run_pipeline(o, Stage::Forecast, std::nullopt);
        }
        if (ev->parsed()) {
            return run_pipeline(o, Stage::Forecast, true);
        }
        return run_pipeline(o, Stage::Forecast, std::nullopt);
    } catch (const pipeline::StageError& e) {
        const int code = e.kind() == pipeline::ErrorKind::Usage  ? kUsage
                         : e.kind() == pipeline::ErrorKind::Data ? kData
                                                                 : kNumeric;
        const std::string_view kind = code == kUsage ? "usage" : code == kData ? "data" : "numeric";
        return report_error(kind, pipeline::to_string(e.stage()), e.cause(), code);
    } catch (const ConfigError& e) {
        return report_error("usage", "config", e.what(), kUsage);
    } catch (const DataError& e) {
        return report_error("data", "", e.what(), kData);
    } catch (const NumericError& e) {
        return report_error("numeric", "", e.what(), kNumeric);
    } catch (const std::exception& e) {
        return report_error("data", "", e.what(), kData);
    }
}
