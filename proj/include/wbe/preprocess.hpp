#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wbe/date.hpp"
#include "wbe/series.hpp"

namespace wbe::preprocess {

enum class Biomarker { Nh4, Cod, Ntot };

inline constexpr std::array<Biomarker, 3> kAllBiomarkers{Biomarker::Nh4, Biomarker::Cod, Biomarker::Ntot};

std::string_view to_string(Biomarker b);
/// Accepts "nh4", "cod", "ntot" (case-insensitive). Throws ConfigError otherwise.
Biomarker parse_biomarker(std::string_view name);

/// One dated plant measurement. Concentrations in mg/L, flow in m³/d, virus in gene copies/L.
struct Sample {
    TimePoint date;
    double c_virus = 0.0;
    std::optional<double> flow;
    std::optional<double> c_nh4;
    std::optional<double> c_cod;
    std::optional<double> c_ntot;

    std::optional<double> biomarker(Biomarker b) const;
    void set_biomarker(Biomarker b, std::optional<double> value);
};

/// Throws DataError when a present value is negative or non-finite.
void validate(const Sample& s);

enum class NormalizationPolicy {
    Fallback,  // first available biomarker in fallback_order
    Mean,      // mean of the estimates from every available biomarker
};

struct BiomarkerConfig {
    std::map<Biomarker, double> loads;        // g/PE/d
    std::map<Biomarker, double> calibration;  // multiplier on the load
    std::vector<Biomarker> fallback_order;
    std::map<Biomarker, double> outlier_caps;  // surrogate concentration, mg/L
    NormalizationPolicy policy = NormalizationPolicy::Fallback;

    /// 120 g COD, 8 g NH4-N, 11 g N per PE and day; order NH4-N, N_tot, COD; Vienna 95th-percentile caps.
    static BiomarkerConfig defaults();

    /// Load adjusted by the calibration factor (factor 1 when absent).
    double effective_load(Biomarker b) const;

    void validate() const;
};

enum class PointFlag : unsigned { None = 0, FlowOutlier = 1, BiomarkerSubstituted = 2 };

struct NormalizedPoint {
    TimePoint date;
    double l_virus = 0.0;        // gene copies / PE / d
    std::string biomarker_used;  // "nh4", "cod", "ntot" or "mean"
    unsigned flags = 0;

    bool has(PointFlag f) const { return (flags & static_cast<unsigned>(f)) != 0; }
};

/// L_virus = c_virus · f_bm' / c_bm[g/L].
NormalizedPoint normalize(const Sample& sample, const BiomarkerConfig& cfg);

/// PE = c_bm · flow / f_bm (mg/L · m³/d / g/PE/d).
double population_equivalents(double c_bm_mgl, double flow_m3d, double f_bm);

/// Per-biomarker factor = mean PE_bm / mean over biomarkers of mean PE_bm, from samples with
/// flow and all three biomarkers present (at least 10 such samples).
std::map<Biomarker, double> calibrate_biomarkers(std::span<const Sample> samples, const BiomarkerConfig& cfg);

inline constexpr std::size_t kMinFlowHistory = 365;

/// Flags samples whose flow exceeds the 90th percentile of `flow_history`. Samples without flow are not flagged.
std::vector<bool> flag_flow_outliers(std::span<const Sample> samples, std::span<const double> flow_history);

struct Fence {
    double q1 = 0.0;
    double q3 = 0.0;
    double lower() const { return q1 - 1.5 * (q3 - q1); }
    double upper() const { return q3 + 1.5 * (q3 - q1); }
};

/// Campaign-wide quartiles per biomarker (biomarkers with fewer than 4 values are omitted).
using BiomarkerContext = std::map<Biomarker, Fence>;
BiomarkerContext biomarker_context(std::span<const Sample> samples);

struct ScreenResult {
    Sample sample;
    std::vector<Biomarker> rejected;      // outlier values removed from the sample
    std::optional<Biomarker> surrogate;   // biomarker replaced by its cap
    bool substituted() const { return !rejected.empty() || surrogate.has_value(); }
};

/// Removes biomarker values outside the 1.5·IQR fence so normalization falls through to the next
/// biomarker. When every available biomarker is an outlier, the first high outlier (in fallback order)
/// with a configured cap is replaced by the cap. Throws DataError("sample unusable") otherwise.
ScreenResult screen_biomarker(const Sample& sample, const BiomarkerContext& context, const BiomarkerConfig& cfg);

}  // namespace wbe::preprocess
