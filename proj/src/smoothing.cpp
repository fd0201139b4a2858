#include "wbe/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wbe/error.hpp"
#include "wbe/metrics.hpp"

namespace wbe::smoothing {

namespace {

constexpr double kTieEps = 1e-12;

double local_linear(std::span<const double> t, std::span<const double> y, std::size_t lo, std::size_t hi,
                    double at) {
    double d_max = 0.0;
    for (std::size_t j = lo; j < hi; ++j) {
        d_max = std::max(d_max, std::abs(t[j] - at));
    }
    if (d_max <= 0.0) {
        throw DataError("degenerate LOESS neighbourhood: all neighbours share one date");
    }
    std::vector<double> w(hi - lo);
    for (std::size_t j = lo; j < hi; ++j) {
        const double u = std::abs(t[j] - at) / d_max;
        const double c = 1.0 - u * u * u;
        w[j - lo] = u < 1.0 ? c * c * c : 0.0;
    }
    auto fit = [&](double& out) {
        double sw = 0.0;
        double swt = 0.0;
        double swy = 0.0;
        for (std::size_t j = lo; j < hi; ++j) {
            sw += w[j - lo];
            swt += w[j - lo] * t[j];
            swy += w[j - lo] * y[j];
        }
        const double t_bar = swt / sw;
        const double y_bar = swy / sw;
        double stt = 0.0;
        double sty = 0.0;
        for (std::size_t j = lo; j < hi; ++j) {
            const double dt = t[j] - t_bar;
            stt += w[j - lo] * dt * dt;
            sty += w[j - lo] * dt * (y[j] - y_bar);
        }
        if (stt <= 1e-12 * d_max * d_max * sw) {
            out = y_bar;
            return false;
        }
        out = y_bar + (sty / stt) * (at - t_bar);
        return true;
    };
    double value = 0.0;
    if (fit(value)) {
        return value;
    }
    // Only one date carries tricube weight: refit the neighbourhood unweighted.
    std::fill(w.begin(), w.end(), 1.0);
    fit(value);
    return value;
}

}  // namespace

RegularSeries sma(const RegularSeries& s, int k) {
    if (k < 1 || k % 2 == 0) {
        throw ConfigError("window must be odd");
    }
    const auto y = s.dense_values("SMA smoothing");
    const auto uk = static_cast<std::size_t>(k);
    if (uk > y.size()) {
        throw DataError("window " + std::to_string(k) + " exceeds series length " + std::to_string(y.size()));
    }
    const std::size_t h = uk / 2;
    std::vector<std::optional<double>> out(y.size());
    for (std::size_t i = h; i + h < y.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = i - h; j <= i + h; ++j) {
            acc += y[j];
        }
        out[i] = acc / static_cast<double>(k);
    }
    return RegularSeries(s.start(), s.step_days(), std::move(out));
}

std::vector<double> loess_values(std::span<const double> t, std::span<const double> y, int k_l,
                                 std::span<const double> at) {
    if (k_l < 3) {
        throw ConfigError("LOESS needs k_L >= 3");
    }
    if (t.size() != y.size()) {
        throw DataError("LOESS abscissa and values differ in length");
    }
    const auto k = static_cast<std::size_t>(k_l);
    if (k > t.size()) {
        throw DataError("k_L = " + std::to_string(k_l) + " exceeds series length " + std::to_string(t.size()));
    }
    std::vector<double> out;
    out.reserve(at.size());
    for (double x : at) {
        if (x < t.front() || x > t.back()) {
            throw DataError("LOESS evaluation outside the data range refused");
        }
        // Grow [lo, hi) outward from the insertion point, taking the nearer side (ties: left).
        std::size_t lo = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), x) - t.begin());
        std::size_t hi = lo;
        while (hi - lo < k) {
            if (lo == 0) {
                ++hi;
            } else if (hi == t.size()) {
                --lo;
            } else if (x - t[lo - 1] <= t[hi] - x) {
                --lo;
            } else {
                ++hi;
            }
        }
        out.push_back(local_linear(t, y, lo, hi, x));
    }
    return out;
}

ScatteredSeries loess(const ScatteredSeries& s, int k_l) {
    const auto t = s.day_offsets();
    const auto y = s.values();
    const auto fitted = loess_values(t, y, k_l, t);
    std::vector<SeriesPoint> pts;
    pts.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        pts.push_back({s[i].date, fitted[i]});
    }
    return ScatteredSeries(std::move(pts));
}

RegularSeries loess_on_grid(const ScatteredSeries& s, int k_l, TimePoint start, int step_days, std::size_t count) {
    if (s.empty()) {
        throw DataError("empty input");
    }
    const auto t = s.day_offsets();
    const auto y = s.values();
    std::vector<double> at;
    std::vector<std::size_t> slot;
    for (std::size_t i = 0; i < count; ++i) {
        const TimePoint d = start.plus_days(static_cast<long>(i) * step_days);
        if (d < s.first_date() || d > s.last_date()) {
            continue;
        }
        at.push_back(static_cast<double>(days_between(s.first_date(), d)));
        slot.push_back(i);
    }
    const auto fitted = loess_values(t, y, k_l, at);
    std::vector<std::optional<double>> out(count);
    for (std::size_t j = 0; j < slot.size(); ++j) {
        out[slot[j]] = fitted[j];
    }
    return RegularSeries(start, step_days, std::move(out));
}

RegularSeries loess_daily(const ScatteredSeries& s, int k_l) {
    if (s.empty()) {
        throw DataError("empty input");
    }
    const auto count = static_cast<std::size_t>(days_between(s.first_date(), s.last_date())) + 1;
    return loess_on_grid(s, k_l, s.first_date(), 1, count);
}

double sma_loocv(std::span<const double> y, int k) {
    if (k < 3 || k % 2 == 0) {
        throw ConfigError("LOOCV window must be odd and >= 3");
    }
    const auto uk = static_cast<std::size_t>(k);
    if (uk > y.size()) {
        throw DataError("window exceeds series length");
    }
    const std::size_t h = uk / 2;
    double ss = 0.0;
    std::size_t n = 0;
    for (std::size_t i = h; i + h < y.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = i - h; j <= i + h; ++j) {
            if (j != i) {
                acc += y[j];
            }
        }
        const double e = y[i] - acc / static_cast<double>(k - 1);
        ss += e * e;
        ++n;
    }
    return std::sqrt(ss / static_cast<double>(n));
}

WindowSelection select_sma_window(const RegularSeries& s, std::span<const int> candidates) {
    if (candidates.empty()) {
        throw ConfigError("no SMA window candidates");
    }
    const auto y = s.dense_values("SMA window selection");
    std::vector<int> ks(candidates.begin(), candidates.end());
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

    WindowSelection sel;
    for (int k : ks) {
        if (k < 3 || k % 2 == 0) {
            throw ConfigError("SMA candidate " + std::to_string(k) + " must be odd and >= 3");
        }
        if (static_cast<std::size_t>(k) > y.size()) {
            continue;
        }
        sel.scores.push_back({k, sma_loocv(y, k)});
    }
    if (sel.scores.empty()) {
        throw DataError("series shorter than every SMA candidate window");
    }
    const WindowScore* best = &sel.scores.front();
    for (const auto& sc : sel.scores) {
        if (sc.loocv < best->loocv) {
            best = &sc;
        }
    }
    sel.k = best->k;
    return sel;
}

LoessMatch match_loess_to_reference(const ScatteredSeries& s_daily, const RegularSeries& reference,
                                    std::span<const int> candidates) {
    if (candidates.empty()) {
        throw ConfigError("no LOESS candidates");
    }
    std::vector<int> ks(candidates.begin(), candidates.end());
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

    std::vector<double> at;
    std::vector<double> ref;
    const auto t0 = s_daily.first_date();
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const TimePoint d = reference.date_at(i);
        if (!reference[i] || d < s_daily.first_date() || d > s_daily.last_date()) {
            continue;
        }
        at.push_back(static_cast<double>(days_between(t0, d)));
        ref.push_back(*reference[i]);
    }
    if (at.empty()) {
        throw DataError("no overlapping dates between LOESS input and reference");
    }
    const auto t = s_daily.day_offsets();
    const auto y = s_daily.values();

    LoessMatch match;
    for (int k : ks) {
        if (static_cast<std::size_t>(k) > s_daily.size()) {
            continue;
        }
        const auto fitted = loess_values(t, y, k, at);
        match.scores.push_back({k, metrics::pearson_r(ref, fitted), metrics::msim(ref, fitted), at.size()});
    }
    if (match.scores.empty()) {
        throw DataError("series shorter than every LOESS candidate");
    }
    const LoessMatchScore* best = &match.scores.front();
    for (const auto& sc : match.scores) {
        if (sc.pearson > best->pearson + kTieEps ||
            (std::abs(sc.pearson - best->pearson) <= kTieEps && sc.msim > best->msim + kTieEps)) {
            best = &sc;
        }
    }
    match.k_l = best->k_l;
    return match;
}

std::size_t fill_interior_gaps(RegularSeries& s) {
    auto values = s.values();
    std::size_t filled = 0;
    std::optional<std::size_t> prev;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!values[i]) {
            continue;
        }
        if (prev && i > *prev + 1) {
            const double a = *values[*prev];
            const double b = *values[i];
            const double span = static_cast<double>(i - *prev);
            for (std::size_t j = *prev + 1; j < i; ++j) {
                values[j] = a + (b - a) * static_cast<double>(j - *prev) / span;
                ++filled;
            }
        }
        prev = i;
    }
    s = RegularSeries(s.start(), s.step_days(), std::move(values));
    return filled;
}

}  // namespace wbe::smoothing
