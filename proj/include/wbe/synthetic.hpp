#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "wbe/date.hpp"
#include "wbe/preprocess.hpp"
#include "wbe/series.hpp"

namespace wbe::synthetic {

struct Wave {
    double peak_day = 0.0;
    double peak_prevalence = 0.0;  // fraction of the population
    double width_days = 1.0;       // Gaussian standard deviation
};

enum class SamplingSchedule { Daily, TwiceWeekly, Irregular };

/// Relative (log-scale) standard deviations of the multiplicative lognormal noise.
struct NoiseLevels {
    double virus = 0.10;
    double biomarker = 0.05;
    double flow = 0.05;
    double indicator = 0.10;
};

struct Scenario {
    TimePoint start = TimePoint::from_serial(18506);  // 2020-09-01
    int duration_days = 548;
    std::vector<Wave> waves{{90.0, 0.010, 18.0}, {230.0, 0.007, 25.0}, {430.0, 0.014, 28.0}};
    double population = 1.9e6;
    double shed_load = 1.0e9;  // gene copies per infected person and day
    double flow_base = 4.0e5;  // m³/d
    NoiseLevels noise;
    SamplingSchedule sampling = SamplingSchedule::Daily;
    std::uint64_t seed = 42;

    double rain_probability = 0.06;
    double rain_factor_max = 3.0;
    int flow_history_days = 365;

    double detection_fraction = 0.35;
    int indicator_lag_days = 8;
    double infectious_days = 10.0;
    double tests_base = 40000.0;
    /// Detection scales with (tests / tests_base)^elasticity.
    double test_elasticity = 0.0;

    double variant_midpoint_day = 250.0;
    double variant_width_days = 18.0;
    /// Relative increase of shedding when the variant is fully dominant.
    double variant_shed_effect = 0.0;

    /// Multiplier on each biomarker's standard load in the generated wastewater.
    std::map<preprocess::Biomarker, double> biomarker_bias{
        {preprocess::Biomarker::Nh4, 1.0}, {preprocess::Biomarker::Cod, 1.0}, {preprocess::Biomarker::Ntot, 1.0}};

    void validate() const;
};

struct DailyRecord {
    TimePoint date;
    std::optional<preprocess::Sample> sample;  // present on sampling days
    double flow = 0.0;                         // m³/d, every day
    double prevalence = 0.0;
    double true_load = 0.0;  // L_shed(t) · f_inf(t), gene copies / PE / d
    double new_infections = 0.0;
    double tests = 0.0;
    double variant_share_pct = 0.0;
};

struct Generated {
    std::vector<DailyRecord> days;
    std::vector<preprocess::Sample> samples;
    std::vector<double> flow_history;  // the year before the campaign

    RegularSeries prevalence() const;
    RegularSeries true_load() const;
    RegularSeries new_infections() const;
    RegularSeries tests() const;
    RegularSeries variant_share() const;
};

/// Prevalence at day offset t (may be negative) as a sum of Gaussian waves.
double prevalence_at(const Scenario& sc, double t);

/// Deterministic in the seed. The random stream is mt19937_64; uniforms take the top 53 bits,
/// normals use the cosine branch of Box-Muller (two uniforms each). Draw order: flow history
/// (rain, rain factor, flow noise per day), then per campaign day: rain, rain factor, flow noise,
/// virus noise, NH4, COD, N_tot noise, tests noise, infections noise, schedule uniform.
Generated generate(const Scenario& sc);

}  // namespace wbe::synthetic
