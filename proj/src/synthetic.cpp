#include "wbe/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "wbe/error.hpp"

namespace wbe::synthetic {

namespace {

using preprocess::Biomarker;

class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double lognormal(double sigma) { return std::exp(sigma * normal()); }

private:
    std::mt19937_64 engine_;
};

double rain_factor(Stream& rng, const Scenario& sc) {
    const double u = rng.uniform();
    const double f = rng.uniform();
    return u < sc.rain_probability ? 1.5 + f * (sc.rain_factor_max - 1.5) : 1.0;
}

double variant_share(const Scenario& sc, double t) {
    return 100.0 / (1.0 + std::exp(-(t - sc.variant_midpoint_day) / sc.variant_width_days));
}

RegularSeries daily(const Generated& g, double DailyRecord::*field) {
    std::vector<double> v;
    v.reserve(g.days.size());
    for (const auto& d : g.days) {
        v.push_back(d.*field);
    }
    return RegularSeries::dense(g.days.front().date, 1, v);
}

}  // namespace

void Scenario::validate() const {
    if (duration_days < 1) {
        throw ConfigError("scenario duration must be positive");
    }
    if (!(population > 0.0) || !(shed_load > 0.0) || !(flow_base > 0.0) || !(tests_base > 0.0) ||
        !(infectious_days > 0.0)) {
        throw ConfigError("scenario scales must be positive");
    }
    if (noise.virus < 0.0 || noise.biomarker < 0.0 || noise.flow < 0.0 || noise.indicator < 0.0) {
        throw ConfigError("noise levels must be >= 0");
    }
    if (!(detection_fraction > 0.0 && detection_fraction <= 1.0)) {
        throw ConfigError("detection fraction must be in (0, 1]");
    }
    if (rain_probability < 0.0 || rain_probability > 1.0 || rain_factor_max < 1.5) {
        throw ConfigError("rain probability must be in [0, 1] and rain_factor_max >= 1.5");
    }
    if (flow_history_days < 0 || indicator_lag_days < 0) {
        throw ConfigError("flow history length and indicator lag must be >= 0");
    }
    for (const auto& w : waves) {
        if (w.peak_prevalence < 0.0 || w.peak_prevalence > 1.0 || !(w.width_days > 0.0)) {
            throw ConfigError("wave peak prevalence must be in [0, 1] and width > 0");
        }
    }
    for (int d = -indicator_lag_days; d < duration_days; ++d) {
        if (prevalence_at(*this, d) > 1.0) {
            throw ConfigError("overlapping waves push prevalence above 1 on day " + std::to_string(d));
        }
    }
    for (const auto& [b, v] : biomarker_bias) {
        if (!(v > 0.0)) {
            throw ConfigError("biomarker bias must be > 0");
        }
    }
}

double prevalence_at(const Scenario& sc, double t) {
    double f = 0.0;
    for (const auto& w : sc.waves) {
        const double z = (t - w.peak_day) / w.width_days;
        f += w.peak_prevalence * std::exp(-0.5 * z * z);
    }
    return f;
}

Generated generate(const Scenario& sc) {
    sc.validate();
    Stream rng(sc.seed);
    const auto loads = preprocess::BiomarkerConfig::defaults().loads;
    auto bias = [&](Biomarker b) {
        auto it = sc.biomarker_bias.find(b);
        return it == sc.biomarker_bias.end() ? 1.0 : it->second;
    };

    Generated g;
    g.flow_history.reserve(static_cast<std::size_t>(sc.flow_history_days));
    for (int d = 0; d < sc.flow_history_days; ++d) {
        const double rain = rain_factor(rng, sc);
        g.flow_history.push_back(sc.flow_base * rain * rng.lognormal(sc.noise.flow));
    }

    for (int d = 0; d < sc.duration_days; ++d) {
        DailyRecord rec;
        rec.date = sc.start.plus_days(d);
        const double t = static_cast<double>(d);

        const double rain = rain_factor(rng, sc);
        rec.flow = sc.flow_base * rain * rng.lognormal(sc.noise.flow);
        const double virus_noise = rng.lognormal(sc.noise.virus);
        const double nh4_noise = rng.lognormal(sc.noise.biomarker);
        const double cod_noise = rng.lognormal(sc.noise.biomarker);
        const double ntot_noise = rng.lognormal(sc.noise.biomarker);
        const double tests_noise = rng.lognormal(sc.noise.indicator);
        const double infections_noise = rng.lognormal(sc.noise.indicator);
        const double schedule_u = rng.uniform();

        rec.prevalence = prevalence_at(sc, t);
        rec.variant_share_pct = variant_share(sc, t);
        const double shed = sc.shed_load * (1.0 + sc.variant_shed_effect * rec.variant_share_pct / 100.0);
        rec.true_load = shed * rec.prevalence;

        // Concentrations follow from daily loads diluted in the day's flow (L/d = m³/d · 1000).
        const double flow_l = rec.flow * 1000.0;
        const double c_virus = shed * sc.population * rec.prevalence / flow_l * virus_noise;
        auto conc_mgl = [&](Biomarker b, double noise) {
            return loads.at(b) * bias(b) * sc.population / flow_l * 1000.0 * noise;
        };

        rec.tests = sc.tests_base * (1.0 + 0.35 * std::sin(2.0 * std::numbers::pi * (t - 60.0) / 365.0)) *
                    tests_noise;
        const double detection =
            std::min(1.0, sc.detection_fraction * std::pow(rec.tests / sc.tests_base, sc.test_elasticity));
        const double lagged_prev = prevalence_at(sc, t - sc.indicator_lag_days);
        rec.new_infections = detection * sc.population * lagged_prev / sc.infectious_days * infections_noise;

        bool sampled = false;
        switch (sc.sampling) {
            case SamplingSchedule::Daily:
                sampled = true;
                break;
            case SamplingSchedule::TwiceWeekly: {
                const unsigned wd = rec.date.iso_weekday_index();
                sampled = wd == 0 || wd == 3;
                break;
            }
            case SamplingSchedule::Irregular:
                sampled = d == 0 || d == sc.duration_days - 1 || schedule_u < 0.4;
                break;
        }
        if (sampled) {
            preprocess::Sample s;
            s.date = rec.date;
            s.c_virus = c_virus;
            s.flow = rec.flow;
            s.c_nh4 = conc_mgl(Biomarker::Nh4, nh4_noise);
            s.c_cod = conc_mgl(Biomarker::Cod, cod_noise);
            s.c_ntot = conc_mgl(Biomarker::Ntot, ntot_noise);
            rec.sample = s;
            g.samples.push_back(s);
        }
        g.days.push_back(rec);
    }
    return g;
}

RegularSeries Generated::prevalence() const { return daily(*this, &DailyRecord::prevalence); }
RegularSeries Generated::true_load() const { return daily(*this, &DailyRecord::true_load); }
RegularSeries Generated::new_infections() const { return daily(*this, &DailyRecord::new_infections); }
RegularSeries Generated::tests() const { return daily(*this, &DailyRecord::tests); }
RegularSeries Generated::variant_share() const { return daily(*this, &DailyRecord::variant_share_pct); }

}  // namespace wbe::synthetic
