#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace wbe {

/// Calendar date at day resolution.
class TimePoint {
public:
    constexpr TimePoint() = default;
    constexpr explicit TimePoint(std::chrono::sys_days days) : days_(days) {}

    /// Throws DataError for impossible dates such as 2021-02-30.
    static TimePoint from_ymd(int year, unsigned month, unsigned day);

    /// Strict ISO 8601 "YYYY-MM-DD". Throws DataError on malformed input.
    static TimePoint parse(std::string_view text);

    static constexpr TimePoint from_serial(long serial) {
        return TimePoint(std::chrono::sys_days(std::chrono::days(serial)));
    }

    /// Days since 1970-01-01.
    constexpr long serial() const { return static_cast<long>(days_.time_since_epoch().count()); }

    constexpr std::chrono::sys_days sys_days() const { return days_; }

    std::string iso() const;

    /// Monday starting the ISO week containing this date.
    TimePoint iso_week_monday() const;

    /// 0 = Monday ... 6 = Sunday.
    unsigned iso_weekday_index() const;

    constexpr TimePoint plus_days(long n) const { return from_serial(serial() + n); }

    friend constexpr long days_between(TimePoint from, TimePoint to) { return to.serial() - from.serial(); }

    friend constexpr auto operator<=>(const TimePoint&, const TimePoint&) = default;

private:
    std::chrono::sys_days days_{};
};

}  // namespace wbe
