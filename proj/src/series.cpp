#include "wbe/series.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "wbe/error.hpp"

namespace wbe {

namespace {

void check_step(int step_days) {
    if (step_days != 1 && step_days != 7) {
        throw ConfigError("grid step must be 1 or 7 days, got " + std::to_string(step_days));
    }
}

void check_interpolation_input(const ScatteredSeries& s, TimePoint start, int step_days, std::size_t count) {
    check_step(step_days);
    if (s.size() < 2) {
        throw DataError("interpolation needs at least 2 points");
    }
    if (count == 0) {
        return;
    }
    const TimePoint last = start.plus_days(static_cast<long>(count - 1) * step_days);
    if (start < s.first_date() || last > s.last_date()) {
        throw DataError("extrapolation refused: grid " + start.iso() + ".." + last.iso() + " exceeds data range " +
                        s.first_date().iso() + ".." + s.last_date().iso());
    }
}

std::size_t default_count(const ScatteredSeries& s, int step_days) {
    return static_cast<std::size_t>(days_between(s.first_date(), s.last_date()) / step_days) + 1;
}

}  // namespace

ScatteredSeries::ScatteredSeries(std::vector<SeriesPoint> points) : points_(std::move(points)) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!std::isfinite(points_[i].value)) {
            throw DataError("non-finite value at " + points_[i].date.iso());
        }
        if (i > 0 && !(points_[i - 1].date < points_[i].date)) {
            throw DataError("dates must be strictly increasing (at " + points_[i].date.iso() + ")");
        }
    }
}

ScatteredSeries ScatteredSeries::from_unsorted(std::vector<SeriesPoint> points) {
    std::stable_sort(points.begin(), points.end(),
                     [](const SeriesPoint& a, const SeriesPoint& b) { return a.date < b.date; });
    return ScatteredSeries(std::move(points));
}

std::vector<double> ScatteredSeries::day_offsets() const {
    std::vector<double> t;
    t.reserve(points_.size());
    for (const auto& p : points_) {
        t.push_back(static_cast<double>(days_between(points_.front().date, p.date)));
    }
    return t;
}

std::vector<double> ScatteredSeries::values() const {
    std::vector<double> v;
    v.reserve(points_.size());
    for (const auto& p : points_) {
        v.push_back(p.value);
    }
    return v;
}

RegularSeries::RegularSeries(TimePoint start, int step_days, std::vector<std::optional<double>> values)
    : start_(start), step_days_(step_days), values_(std::move(values)) {
    check_step(step_days);
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (values_[i] && !std::isfinite(*values_[i])) {
            throw DataError("non-finite value at " + date_at(i).iso());
        }
    }
}

RegularSeries RegularSeries::dense(TimePoint start, int step_days, std::span<const double> values) {
    return RegularSeries(start, step_days, std::vector<std::optional<double>>(values.begin(), values.end()));
}

TimePoint RegularSeries::date_at(std::size_t i) const {
    return start_.plus_days(static_cast<long>(i) * step_days_);
}

std::optional<std::size_t> RegularSeries::index_of(TimePoint date) const {
    const long offset = days_between(start_, date);
    if (offset < 0 || offset % step_days_ != 0) {
        return std::nullopt;
    }
    const auto idx = static_cast<std::size_t>(offset / step_days_);
    if (idx >= values_.size()) {
        return std::nullopt;
    }
    return idx;
}

std::optional<double> RegularSeries::value_at(TimePoint date) const {
    auto idx = index_of(date);
    return idx ? values_[*idx] : std::nullopt;
}

bool RegularSeries::has_gaps() const {
    return std::any_of(values_.begin(), values_.end(), [](const auto& v) { return !v.has_value(); });
}

std::size_t RegularSeries::missing_count() const {
    return static_cast<std::size_t>(
        std::count_if(values_.begin(), values_.end(), [](const auto& v) { return !v.has_value(); }));
}

std::vector<double> RegularSeries::dense_values(const char* what_for) const {
    std::vector<double> out;
    out.reserve(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!values_[i]) {
            throw DataError(std::string("gaps must be filled before ") + what_for + " (missing at " +
                            date_at(i).iso() + ")");
        }
        out.push_back(*values_[i]);
    }
    return out;
}

RegularSeries RegularSeries::trimmed() const {
    std::size_t first = 0;
    while (first < values_.size() && !values_[first]) {
        ++first;
    }
    std::size_t last = values_.size();
    while (last > first && !values_[last - 1]) {
        --last;
    }
    return RegularSeries(date_at(first), step_days_,
                         std::vector<std::optional<double>>(values_.begin() + static_cast<long>(first),
                                                            values_.begin() + static_cast<long>(last)));
}

ScatteredSeries RegularSeries::to_scattered() const {
    std::vector<SeriesPoint> pts;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (values_[i]) {
            pts.push_back({date_at(i), *values_[i]});
        }
    }
    return ScatteredSeries(std::move(pts));
}

RegularSeries block_average_downsample(const ScatteredSeries& s, int step_days) {
    if (step_days != 7) {
        throw ConfigError("block averaging is defined for weekly slots only");
    }
    if (s.empty()) {
        throw DataError("empty input");
    }
    const TimePoint first_monday = s.first_date().iso_week_monday();
    const TimePoint last_monday = s.last_date().iso_week_monday();
    const auto weeks = static_cast<std::size_t>(days_between(first_monday, last_monday) / 7) + 1;

    std::vector<double> sum(weeks, 0.0);
    std::vector<std::size_t> count(weeks, 0);
    for (const auto& p : s.points()) {
        const auto w = static_cast<std::size_t>(days_between(first_monday, p.date.iso_week_monday()) / 7);
        sum[w] += p.value;
        ++count[w];
    }
    std::vector<std::optional<double>> out(weeks);
    for (std::size_t w = 0; w < weeks; ++w) {
        if (count[w] > 0) {
            out[w] = sum[w] / static_cast<double>(count[w]);
        }
    }
    return RegularSeries(first_monday, 7, std::move(out));
}

RegularSeries linear_interpolate(const ScatteredSeries& s, int step_days) {
    if (s.size() < 2) {
        throw DataError("interpolation needs at least 2 points");
    }
    return linear_interpolate(s, s.first_date(), step_days, default_count(s, step_days));
}

RegularSeries linear_interpolate(const ScatteredSeries& s, TimePoint start, int step_days, std::size_t count) {
    check_interpolation_input(s, start, step_days, count);
    const auto& pts = s.points();
    std::vector<std::optional<double>> out(count);
    std::size_t j = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const TimePoint t = start.plus_days(static_cast<long>(i) * step_days);
        while (j + 1 < pts.size() && pts[j + 1].date <= t) {
            ++j;
        }
        if (pts[j].date == t) {
            out[i] = pts[j].value;
            continue;
        }
        const auto& a = pts[j];
        const auto& b = pts[j + 1];
        const double span = static_cast<double>(days_between(a.date, b.date));
        const double w = static_cast<double>(days_between(a.date, t)) / span;
        out[i] = a.value + w * (b.value - a.value);
    }
    return RegularSeries(start, step_days, std::move(out));
}

RegularSeries shepard_interpolate(const ScatteredSeries& s, int step_days, double power) {
    if (s.size() < 2) {
        throw DataError("interpolation needs at least 2 points");
    }
    return shepard_interpolate(s, s.first_date(), step_days, default_count(s, step_days), power);
}

RegularSeries shepard_interpolate(const ScatteredSeries& s, TimePoint start, int step_days, std::size_t count,
                                  double power) {
    if (!(power > 0.0)) {
        throw ConfigError("Shepard power must be positive");
    }
    check_interpolation_input(s, start, step_days, count);
    const auto& pts = s.points();
    std::vector<std::optional<double>> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const TimePoint t = start.plus_days(static_cast<long>(i) * step_days);
        double num = 0.0;
        double den = 0.0;
        std::optional<double> exact;
        for (const auto& p : pts) {
            const long d = std::labs(days_between(p.date, t));
            if (d == 0) {
                exact = p.value;
                break;
            }
            const double w = std::pow(static_cast<double>(d), -power);
            num += w * p.value;
            den += w;
        }
        out[i] = exact ? *exact : num / den;
    }
    return RegularSeries(start, step_days, std::move(out));
}

std::vector<double> difference(std::span<const double> y) {
    if (y.size() < 2) {
        throw DataError("differencing needs at least 2 values");
    }
    std::vector<double> d(y.size() - 1);
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
        d[i] = y[i + 1] - y[i];
    }
    return d;
}

std::vector<double> undifference(std::span<const double> d, double anchor) {
    std::vector<double> y;
    y.reserve(d.size() + 1);
    y.push_back(anchor);
    for (double v : d) {
        y.push_back(y.back() + v);
    }
    return y;
}

RegularSeries difference(const RegularSeries& s) {
    const auto y = s.dense_values("differencing");
    return RegularSeries::dense(s.date_at(1), s.step_days(), difference(y));
}

RegularSeries undifference(const RegularSeries& d, double anchor) {
    const auto dv = d.dense_values("undifferencing");
    return RegularSeries::dense(d.start().plus_days(-d.step_days()), d.step_days(), undifference(dv, anchor));
}

}  // namespace wbe
