#include "wbe/date.hpp"

#include <charconv>
#include <cstdio>

#include "wbe/error.hpp"

namespace wbe {

TimePoint TimePoint::from_ymd(int year, unsigned month, unsigned day) {
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                          std::chrono::day{day}};
    if (!ymd.ok()) {
        throw DataError("invalid calendar date " + std::to_string(year) + "-" + std::to_string(month) +
                        "-" + std::to_string(day));
    }
    return TimePoint(std::chrono::sys_days(ymd));
}

TimePoint TimePoint::parse(std::string_view text) {
    auto fail = [&] { return DataError("malformed date '" + std::string(text) + "' (expected YYYY-MM-DD)"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw fail();
    }
    auto field = [&](std::size_t pos, std::size_t len) {
        int value = 0;
        const char* first = text.data() + pos;
        const char* last = first + len;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last) {
            throw fail();
        }
        return value;
    };
    const int year = field(0, 4);
    const int month = field(5, 2);
    const int day = field(8, 2);
    if (month < 1 || month > 12 || day < 1 || day > 31) {
        throw fail();
    }
    try {
        return from_ymd(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    } catch (const DataError&) {
        throw fail();
    }
}

std::string TimePoint::iso() const {
    const std::chrono::year_month_day ymd{days_};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

unsigned TimePoint::iso_weekday_index() const {
    // 1970-01-01 was a Thursday (index 3).
    const long s = serial() + 3;
    return static_cast<unsigned>(((s % 7) + 7) % 7);
}

TimePoint TimePoint::iso_week_monday() const { return plus_days(-static_cast<long>(iso_weekday_index())); }

}  // namespace wbe
