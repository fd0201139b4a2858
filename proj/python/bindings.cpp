#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "wbe/config.hpp"
#include "wbe/csv.hpp"
#include "wbe/error.hpp"
#include "wbe/forecast.hpp"
#include "wbe/metrics.hpp"
#include "wbe/pipeline.hpp"
#include "wbe/smoothing.hpp"
#include "wbe/synthetic.hpp"

namespace py = pybind11;
using namespace wbe;

namespace {

using Vec = std::vector<double>;

pipeline::PipelineConfig make_config(const std::string& text, const std::map<std::string, std::string>& overrides,
                                     std::optional<std::uint64_t> seed) {
    std::istringstream in(text);
    auto cfg = pipeline::parse_config(in);
    for (const auto& [k, v] : overrides) pipeline::set_config_value(cfg, k, v);
    if (seed) {
        cfg.seed = *seed;
        cfg.scenario.seed = *seed;
    }
    return cfg;
}

py::dict run_pipeline(const std::string& csv, const std::string& config,
                      const std::map<std::string, std::string>& overrides, std::optional<std::uint64_t> seed,
                      const std::string& stage, bool allow_raw) {
    const auto cfg = make_config(config, overrides, seed);
    pipeline::RunOptions opts;
    opts.stop_after = pipeline::parse_stage(stage);
    opts.allow_raw = allow_raw;
    pipeline::RunResult res;
    {
        py::gil_scoped_release release;
        std::istringstream in(csv);
        res = pipeline::run(cfg, io::parse_ingest_csv(in), opts);
    }
    py::dict files;
    for (const auto& [name, content] : res.files) files[py::str(name)] = py::bytes(content);
    py::dict out;
    out["report"] = res.report.dump();
    out["files"] = files;
    out["warnings"] = res.warnings;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Wastewater viral load pipeline: normalization, smoothing, regression and forecasting.";

    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const pipeline::StageError& e) {
            PyErr_SetString(PyExc_RuntimeError, e.what());
        }
    });

    m.def("rmse", [](const Vec& x, const Vec& y) { return metrics::rmse(x, y); });
    m.def("r_squared", [](const Vec& x, const Vec& y) { return metrics::r_squared(x, y); });
    m.def("msim", [](const Vec& x, const Vec& y) { return metrics::msim(x, y); });
    m.def("pearson_r", [](const Vec& x, const Vec& y) { return metrics::pearson_r(x, y); });
    m.def("significance_threshold", &metrics::significance_threshold, py::arg("n"));

    m.def("sma_loocv", [](const Vec& y, int k) { return smoothing::sma_loocv(y, k); }, py::arg("y"), py::arg("k"));
    m.def(
        "loess",
        [](const Vec& t, const Vec& y, int k_l, std::optional<Vec> at) {
            return smoothing::loess_values(t, y, k_l, at ? *at : t);
        },
        py::arg("t"), py::arg("y"), py::arg("k_l"), py::arg("at") = py::none(),
        "Local linear fit with tricube weights over the k_l nearest dates.");

    m.def("boxcox", [](const Vec& y, double lambda) { return forecast::boxcox(y, lambda); });
    m.def("inverse_boxcox", [](const Vec& z, double lambda) { return forecast::inverse_boxcox(z, lambda); });
    m.def("boxcox_mle", [](const Vec& y) { return forecast::boxcox_mle(y); });

    py::class_<forecast::AdfResult>(m, "AdfResult")
        .def_readonly("gamma", &forecast::AdfResult::gamma)
        .def_readonly("t_stat", &forecast::AdfResult::t_stat)
        .def_readonly("critical_value", &forecast::AdfResult::critical_value)
        .def_readonly("n_obs", &forecast::AdfResult::n_obs)
        .def_readonly("stationary", &forecast::AdfResult::stationary);
    m.def("adf_test", [](const Vec& y) { return forecast::adf_test(y); });

    py::class_<forecast::ArFit>(m, "ArFit")
        .def_readonly("c", &forecast::ArFit::c)
        .def_readonly("phi", &forecast::ArFit::phi)
        .def_readonly("residual_sse", &forecast::ArFit::residual_sse)
        .def("forecast", [](const forecast::ArFit& f, const Vec& y, int h) { return forecast::ar_forecast(f, y, h); });
    m.def("ar_fit", [](const Vec& y, int p) { return forecast::ar_fit(y, p); }, py::arg("y"), py::arg("p"));
    m.def("ses_forecast", [](const Vec& y, double alpha, int h) { return forecast::ses_forecast(y, alpha, h); },
          py::arg("y"), py::arg("alpha"), py::arg("horizon"));

    m.def(
        "synthesize",
        [](const std::string& config, const std::map<std::string, std::string>& overrides,
           std::optional<std::uint64_t> seed) {
            const auto cfg = make_config(config, overrides, seed);
            const auto g = synthetic::generate(cfg.scenario);
            return pipeline::synthetic_csv(cfg.scenario, g);
        },
        py::arg("config") = "", py::arg("overrides") = std::map<std::string, std::string>{},
        py::arg("seed") = py::none(), "Synthetic campaign as input CSV text.");

    m.def("run", &run_pipeline, py::arg("csv"), py::arg("config") = "",
          py::arg("overrides") = std::map<std::string, std::string>{}, py::arg("seed") = py::none(),
          py::arg("stage") = "forecast", py::arg("allow_raw") = false,
          "Runs the pipeline on input CSV text. Returns report JSON, output files and warnings.");
}
