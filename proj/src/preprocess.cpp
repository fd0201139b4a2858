#include "wbe/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "wbe/error.hpp"
#include "wbe/metrics.hpp"

namespace wbe::preprocess {

std::string_view to_string(Biomarker b) {
    switch (b) {
        case Biomarker::Nh4:
            return "nh4";
        case Biomarker::Cod:
            return "cod";
        case Biomarker::Ntot:
            return "ntot";
    }
    return "?";
}

Biomarker parse_biomarker(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "nh4" || lower == "nh4-n") {
        return Biomarker::Nh4;
    }
    if (lower == "cod") {
        return Biomarker::Cod;
    }
    if (lower == "ntot" || lower == "n_tot") {
        return Biomarker::Ntot;
    }
    throw ConfigError("unknown biomarker '" + std::string(name) + "'");
}

std::optional<double> Sample::biomarker(Biomarker b) const {
    switch (b) {
        case Biomarker::Nh4:
            return c_nh4;
        case Biomarker::Cod:
            return c_cod;
        case Biomarker::Ntot:
            return c_ntot;
    }
    return std::nullopt;
}

void Sample::set_biomarker(Biomarker b, std::optional<double> value) {
    switch (b) {
        case Biomarker::Nh4:
            c_nh4 = value;
            break;
        case Biomarker::Cod:
            c_cod = value;
            break;
        case Biomarker::Ntot:
            c_ntot = value;
            break;
    }
}

void validate(const Sample& s) {
    auto check = [&](const char* what, std::optional<double> v) {
        if (v && (!std::isfinite(*v) || *v < 0.0)) {
            throw DataError(std::string(what) + " must be finite and >= 0 on " + s.date.iso());
        }
    };
    check("c_virus", s.c_virus);
    check("flow", s.flow);
    check("nh4", s.c_nh4);
    check("cod", s.c_cod);
    check("ntot", s.c_ntot);
}

BiomarkerConfig BiomarkerConfig::defaults() {
    BiomarkerConfig cfg;
    cfg.loads = {{Biomarker::Cod, 120.0}, {Biomarker::Nh4, 8.0}, {Biomarker::Ntot, 11.0}};
    cfg.calibration = {{Biomarker::Cod, 1.0}, {Biomarker::Nh4, 1.0}, {Biomarker::Ntot, 1.0}};
    cfg.fallback_order = {Biomarker::Nh4, Biomarker::Ntot, Biomarker::Cod};
    cfg.outlier_caps = {{Biomarker::Cod, 859.0}, {Biomarker::Nh4, 45.3}, {Biomarker::Ntot, 63.1}};
    return cfg;
}

double BiomarkerConfig::effective_load(Biomarker b) const {
    auto it = loads.find(b);
    if (it == loads.end()) {
        throw ConfigError("no standard load configured for " + std::string(to_string(b)));
    }
    auto cal = calibration.find(b);
    return it->second * (cal == calibration.end() ? 1.0 : cal->second);
}

void BiomarkerConfig::validate() const {
    for (const auto& [b, v] : loads) {
        if (!(v > 0.0)) {
            throw ConfigError("load for " + std::string(to_string(b)) + " must be > 0");
        }
    }
    for (const auto& [b, v] : calibration) {
        if (!(v > 0.0)) {
            throw ConfigError("calibration factor for " + std::string(to_string(b)) + " must be > 0");
        }
    }
    for (const auto& [b, v] : outlier_caps) {
        if (!(v > 0.0)) {
            throw ConfigError("outlier cap for " + std::string(to_string(b)) + " must be > 0");
        }
    }
    if (fallback_order.empty()) {
        throw ConfigError("biomarker fallback order must not be empty");
    }
}

NormalizedPoint normalize(const Sample& sample, const BiomarkerConfig& cfg) {
    validate(sample);
    auto estimate = [&](Biomarker b, double c_bm_mgl) {
        if (c_bm_mgl == 0.0) {
            throw DataError("zero biomarker (" + std::string(to_string(b)) + ") on " + sample.date.iso());
        }
        return sample.c_virus * cfg.effective_load(b) / (c_bm_mgl / 1000.0);
    };

    NormalizedPoint out;
    out.date = sample.date;
    if (cfg.policy == NormalizationPolicy::Mean) {
        double acc = 0.0;
        int n = 0;
        for (Biomarker b : kAllBiomarkers) {
            if (auto c = sample.biomarker(b); c && cfg.loads.count(b)) {
                acc += estimate(b, *c);
                ++n;
            }
        }
        if (n == 0) {
            throw DataError("normalization impossible: no biomarker on " + sample.date.iso());
        }
        out.l_virus = acc / n;
        out.biomarker_used = "mean";
        return out;
    }
    for (Biomarker b : cfg.fallback_order) {
        if (auto c = sample.biomarker(b)) {
            out.l_virus = estimate(b, *c);
            out.biomarker_used = std::string(to_string(b));
            return out;
        }
    }
    throw DataError("normalization impossible: no biomarker on " + sample.date.iso());
}

double population_equivalents(double c_bm_mgl, double flow_m3d, double f_bm) {
    if (!(c_bm_mgl > 0.0) || !(flow_m3d > 0.0) || !(f_bm > 0.0)) {
        throw DataError("population equivalents need positive concentration, flow and load");
    }
    // (mg/L / 1000) g/L · (m³/d · 1000) L/d / (g/PE/d)
    return (c_bm_mgl / 1000.0) * (flow_m3d * 1000.0) / f_bm;
}

std::map<Biomarker, double> calibrate_biomarkers(std::span<const Sample> samples, const BiomarkerConfig& cfg) {
    std::map<Biomarker, double> sum;
    std::size_t complete = 0;
    for (const auto& s : samples) {
        if (!s.flow || !s.c_nh4 || !s.c_cod || !s.c_ntot) {
            continue;
        }
        if (!(*s.flow > 0.0) || !(*s.c_nh4 > 0.0) || !(*s.c_cod > 0.0) || !(*s.c_ntot > 0.0)) {
            continue;
        }
        for (Biomarker b : kAllBiomarkers) {
            auto it = cfg.loads.find(b);
            if (it == cfg.loads.end()) {
                throw ConfigError("no standard load configured for " + std::string(to_string(b)));
            }
            sum[b] += population_equivalents(*s.biomarker(b), *s.flow, it->second);
        }
        ++complete;
    }
    if (complete < 10) {
        throw DataError("calibration needs at least 10 samples with flow and all three biomarkers, found " +
                        std::to_string(complete));
    }
    double grand = 0.0;
    for (const auto& [b, v] : sum) {
        grand += v / static_cast<double>(complete);
    }
    grand /= static_cast<double>(sum.size());
    std::map<Biomarker, double> factors;
    for (const auto& [b, v] : sum) {
        factors[b] = (v / static_cast<double>(complete)) / grand;
    }
    return factors;
}

std::vector<bool> flag_flow_outliers(std::span<const Sample> samples, std::span<const double> flow_history) {
    if (flow_history.size() < kMinFlowHistory) {
        throw DataError("flow history too short: " + std::to_string(flow_history.size()) + " values, need at least " +
                        std::to_string(kMinFlowHistory));
    }
    const double p90 = metrics::percentile(flow_history, 0.90);
    std::vector<bool> flags;
    flags.reserve(samples.size());
    for (const auto& s : samples) {
        flags.push_back(s.flow && *s.flow > p90);
    }
    return flags;
}

BiomarkerContext biomarker_context(std::span<const Sample> samples) {
    BiomarkerContext ctx;
    for (Biomarker b : kAllBiomarkers) {
        std::vector<double> v;
        for (const auto& s : samples) {
            if (auto c = s.biomarker(b)) {
                v.push_back(*c);
            }
        }
        if (v.size() >= 4) {
            ctx[b] = Fence{metrics::percentile(v, 0.25), metrics::percentile(v, 0.75)};
        }
    }
    return ctx;
}

ScreenResult screen_biomarker(const Sample& sample, const BiomarkerContext& context, const BiomarkerConfig& cfg) {
    ScreenResult res{sample, {}, std::nullopt};

    std::vector<Biomarker> present;
    std::vector<Biomarker> high;
    bool any_in_range = false;
    for (Biomarker b : cfg.fallback_order) {
        auto v = sample.biomarker(b);
        if (!v) {
            continue;
        }
        present.push_back(b);
        auto fence = context.find(b);
        if (fence == context.end() || (*v >= fence->second.lower() && *v <= fence->second.upper())) {
            any_in_range = true;
            continue;
        }
        res.rejected.push_back(b);
        if (*v > fence->second.upper()) {
            high.push_back(b);
        }
    }
    if (present.empty() || res.rejected.empty()) {
        return res;
    }
    for (Biomarker b : res.rejected) {
        res.sample.set_biomarker(b, std::nullopt);
    }
    if (any_in_range) {
        return res;
    }
    for (Biomarker b : high) {
        if (auto cap = cfg.outlier_caps.find(b); cap != cfg.outlier_caps.end()) {
            res.sample.set_biomarker(b, cap->second);
            res.surrogate = b;
            res.rejected.erase(std::find(res.rejected.begin(), res.rejected.end(), b));
            return res;
        }
    }
    throw DataError("sample unusable: every biomarker on " + sample.date.iso() +
                    " is an outlier and no surrogate rule applies");
}

}  // namespace wbe::preprocess
