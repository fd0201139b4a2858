#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "wbe/date.hpp"

namespace wbe {

struct SeriesPoint {
    TimePoint date;
    double value = 0.0;
};

/// Irregularly spaced, strictly time-ordered observations (the raw monitoring record).
class ScatteredSeries {
public:
    ScatteredSeries() = default;

    /// Validates strictly increasing dates and finite values; throws DataError otherwise.
    explicit ScatteredSeries(std::vector<SeriesPoint> points);

    /// Sorts by date first; duplicate dates are rejected.
    static ScatteredSeries from_unsorted(std::vector<SeriesPoint> points);

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const std::vector<SeriesPoint>& points() const { return points_; }
    const SeriesPoint& operator[](std::size_t i) const { return points_[i]; }
    TimePoint first_date() const { return points_.front().date; }
    TimePoint last_date() const { return points_.back().date; }

    /// Day offsets relative to the first date.
    std::vector<double> day_offsets() const;
    std::vector<double> values() const;

private:
    std::vector<SeriesPoint> points_;
};

/// Equally spaced values on a 1-day or 7-day grid with explicit missing entries.
class RegularSeries {
public:
    RegularSeries() = default;
    RegularSeries(TimePoint start, int step_days, std::vector<std::optional<double>> values);
    static RegularSeries dense(TimePoint start, int step_days, std::span<const double> values);

    TimePoint start() const { return start_; }
    int step_days() const { return step_days_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    const std::vector<std::optional<double>>& values() const { return values_; }
    const std::optional<double>& operator[](std::size_t i) const { return values_[i]; }
    TimePoint date_at(std::size_t i) const;

    /// Index of `date` on this grid, if it lies exactly on a grid node within range.
    std::optional<std::size_t> index_of(TimePoint date) const;
    std::optional<double> value_at(TimePoint date) const;

    bool has_gaps() const;
    std::size_t missing_count() const;

    /// All values; throws DataError with `what_for` in the message if any are missing.
    std::vector<double> dense_values(const char* what_for = "operation") const;

    /// Drops leading and trailing missing entries.
    RegularSeries trimmed() const;

    /// Present entries as a scattered series.
    ScatteredSeries to_scattered() const;

private:
    TimePoint start_;
    int step_days_ = 1;
    std::vector<std::optional<double>> values_;
};

/// ISO-week block averages (slot label = Monday). Empty weeks stay missing.
RegularSeries block_average_downsample(const ScatteredSeries& s, int step_days = 7);

/// Linear interpolation onto a grid starting at the first sample date.
RegularSeries linear_interpolate(const ScatteredSeries& s, int step_days);
/// Linear interpolation onto an explicit grid; every node must lie within the data hull.
RegularSeries linear_interpolate(const ScatteredSeries& s, TimePoint start, int step_days, std::size_t count);

/// Global inverse-distance weighting (Shepard) with weights |t - t_j|^-power.
RegularSeries shepard_interpolate(const ScatteredSeries& s, int step_days, double power = 2.0);
RegularSeries shepard_interpolate(const ScatteredSeries& s, TimePoint start, int step_days, std::size_t count,
                                  double power = 2.0);

/// output_i = y_{i+1} - y_i; the start shifts by one step.
RegularSeries difference(const RegularSeries& s);
/// Cumulative sum seeded with `anchor`; inverse of difference().
RegularSeries undifference(const RegularSeries& d, double anchor);

std::vector<double> difference(std::span<const double> y);
std::vector<double> undifference(std::span<const double> d, double anchor);

}  // namespace wbe
