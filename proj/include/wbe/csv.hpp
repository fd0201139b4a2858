#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wbe/preprocess.hpp"
#include "wbe/series.hpp"

namespace wbe::io {

/// Columns of the measurement schema, in canonical order.
inline constexpr std::string_view kIngestColumns[] = {"date",    "c_virus_cpl", "flow_m3d",          "nh4_mgl",       "cod_mgl",
                                                      "ntot_mgl", "tests",      "variant_share_pct", "new_infections"};

struct IngestResult {
    std::vector<preprocess::Sample> samples;  // rows with a virus concentration
    /// "tests", "variant_share_pct", "new_infections" (only columns that have values).
    std::map<std::string, ScatteredSeries> indicators;
    /// Every recorded flow in the file, in date order (sample rows and flow-only rows).
    std::vector<double> flows;
    std::size_t rows = 0;
    std::vector<std::string> warnings;
};

/// Parses the measurement CSV. Empty cells are missing, rows are sorted by date. Malformed dates or
/// numbers and duplicate dates throw DataError naming the line; unknown columns only warn.
IngestResult parse_ingest_csv(std::istream& in, const std::string& source = "input");
IngestResult ingest_csv(const std::filesystem::path& path);

/// One row of the series schema (date, value, flags). Flags are '|'-separated tokens.
struct SeriesRow {
    TimePoint date;
    std::optional<double> value;
    std::string flags;

    bool has_flag(std::string_view token) const;
};

std::vector<SeriesRow> parse_series_csv(std::istream& in, const std::string& source = "input");
std::vector<SeriesRow> read_series_csv(const std::filesystem::path& path);

/// True when the header row is the series schema rather than the measurement schema.
bool is_series_csv(const std::filesystem::path& path);

/// Rows with a value become a grid when dates are evenly spaced by 1 or 7 days.
RegularSeries rows_to_regular(const std::vector<SeriesRow>& rows);

/// Shortest text that reads back to the same double; NaN and inf are written as empty cells.
std::string format_number(double v);
/// %.12g rounding used for report numbers.
double round_significant(double v, int digits = 12);

std::string series_csv(const RegularSeries& s, const std::vector<std::string>& flags = {});
std::string series_csv(const std::vector<SeriesRow>& rows);

struct NamedSeries {
    std::string name;
    std::vector<SeriesPoint> points;
};
/// Long format: date, series_name, value. Rows ordered by date, then by series order.
std::string long_csv(const std::vector<NamedSeries>& series);

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace wbe::io
