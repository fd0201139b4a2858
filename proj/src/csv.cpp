#include "wbe/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "wbe/error.hpp"

namespace wbe::io {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) {
            break;
        }
        pos = comma + 1;
    }
    return out;
}

std::string where(const std::string& source, std::size_t line) { return source + ":" + std::to_string(line); }

std::optional<double> parse_cell(std::string_view cell, const std::string& source, std::size_t line,
                                 std::string_view column) {
    if (cell.empty()) {
        return std::nullopt;
    }
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw DataError(where(source, line) + ": malformed number '" + std::string(cell) + "' in column " +
                        std::string(column));
    }
    return v;
}

TimePoint parse_date_cell(std::string_view cell, const std::string& source, std::size_t line) {
    try {
        return TimePoint::parse(cell);
    } catch (const DataError&) {
        throw DataError(where(source, line) + ": malformed date '" + std::string(cell) + "'");
    }
}

bool is_blank(std::string_view line) { return trim(line).empty(); }

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    return in;
}

}  // namespace

IngestResult parse_ingest_csv(std::istream& in, const std::string& source) {
    IngestResult out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!is_blank(line)) {
            break;
        }
    }
    if (is_blank(line)) {
        throw DataError(source + ": missing header row");
    }
    const auto header = split(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name(header[i]);
        const bool known = std::find(std::begin(kIngestColumns), std::end(kIngestColumns), name) != std::end(kIngestColumns);
        if (!known) {
            out.warnings.push_back(source + ": unknown column '" + name + "' ignored");
            continue;
        }
        if (col.count(name) != 0) {
            throw DataError(where(source, line_no) + ": duplicate column '" + name + "'");
        }
        col[name] = i;
    }
    if (col.count("date") == 0) {
        throw DataError(source + ": header has no 'date' column");
    }

    struct Row {
        std::size_t line = 0;
        TimePoint date;
        std::map<std::string, double> values;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw DataError(where(source, line_no) + ": expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(cells.size()));
        }
        Row r;
        r.line = line_no;
        r.date = parse_date_cell(cells[col.at("date")], source, line_no);
        for (const auto& [name, idx] : col) {
            if (name == "date") {
                continue;
            }
            if (auto v = parse_cell(cells[idx], source, line_no, name)) {
                r.values[name] = *v;
            }
        }
        rows.push_back(std::move(r));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].date == rows[i - 1].date) {
            throw DataError(where(source, rows[i].line) + ": duplicate date " + rows[i].date.iso() + " (also on line " +
                            std::to_string(rows[i - 1].line) + ")");
        }
    }

    std::map<std::string, std::vector<SeriesPoint>> indicator_points;
    for (const auto& r : rows) {
        auto get = [&](const char* name) -> std::optional<double> {
            auto it = r.values.find(name);
            return it == r.values.end() ? std::nullopt : std::optional<double>(it->second);
        };
        if (auto f = get("flow_m3d")) {
            out.flows.push_back(*f);
        }
        for (const char* name : {"tests", "variant_share_pct", "new_infections"}) {
            if (auto v = get(name)) {
                indicator_points[name].push_back({r.date, *v});
            }
        }
        const auto c_virus = get("c_virus_cpl");
        if (!c_virus) {
            continue;
        }
        preprocess::Sample s;
        s.date = r.date;
        s.c_virus = *c_virus;
        s.flow = get("flow_m3d");
        s.c_nh4 = get("nh4_mgl");
        s.c_cod = get("cod_mgl");
        s.c_ntot = get("ntot_mgl");
        try {
            preprocess::validate(s);
        } catch (const DataError& e) {
            throw DataError(where(source, r.line) + ": " + e.what());
        }
        out.samples.push_back(s);
    }
    for (auto& [name, pts] : indicator_points) {
        out.indicators.emplace(name, ScatteredSeries(std::move(pts)));
    }
    out.rows = rows.size();
    return out;
}

IngestResult ingest_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_ingest_csv(in, path.filename().string());
}

bool SeriesRow::has_flag(std::string_view token) const {
    std::string_view f = flags;
    while (!f.empty()) {
        const auto bar = f.find('|');
        if (f.substr(0, bar) == token) {
            return true;
        }
        if (bar == std::string_view::npos) {
            break;
        }
        f.remove_prefix(bar + 1);
    }
    return false;
}

std::vector<SeriesRow> parse_series_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!is_blank(line)) {
            break;
        }
    }
    const auto header = split(line);
    if (header.size() < 2 || header[0] != "date" || header[1] != "value") {
        throw DataError(source + ": expected header 'date,value,flags'");
    }
    const bool has_flags = header.size() >= 3 && header[2] == "flags";
    std::vector<SeriesRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw DataError(where(source, line_no) + ": expected " + std::to_string(header.size()) + " fields");
        }
        SeriesRow r;
        r.date = parse_date_cell(cells[0], source, line_no);
        r.value = parse_cell(cells[1], source, line_no, "value");
        if (has_flags) {
            r.flags = std::string(cells[2]);
        }
        if (!rows.empty() && !(rows.back().date < r.date)) {
            throw DataError(where(source, line_no) + ": dates must be strictly increasing");
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<SeriesRow> read_series_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_series_csv(in, path.filename().string());
}

bool is_series_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string line;
    while (std::getline(in, line) && is_blank(line)) {
    }
    const auto header = split(line);
    return header.size() >= 2 && header[0] == "date" && header[1] == "value";
}

RegularSeries rows_to_regular(const std::vector<SeriesRow>& rows) {
    if (rows.empty()) {
        throw DataError("empty input");
    }
    if (rows.size() == 1) {
        return RegularSeries(rows[0].date, 1, {rows[0].value});
    }
    const long step = days_between(rows[0].date, rows[1].date);
    if (step != 1 && step != 7) {
        throw DataError("series dates are not on a 1-day or 7-day grid");
    }
    std::vector<std::optional<double>> values;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (days_between(rows[0].date, rows[i].date) != static_cast<long>(i) * step) {
            throw DataError("series dates are not evenly spaced at " + rows[i].date.iso());
        }
        values.push_back(rows[i].value);
    }
    return RegularSeries(rows[0].date, static_cast<int>(step), std::move(values));
}

std::string format_number(double v) {
    if (!std::isfinite(v)) {
        return {};
    }
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double round_significant(double v, int digits) {
    if (!std::isfinite(v) || v == 0.0) {
        return v;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return std::strtod(buf, nullptr);
}

std::string series_csv(const RegularSeries& s, const std::vector<std::string>& flags) {
    std::ostringstream out;
    out << "date,value,flags\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out << s.date_at(i).iso() << ',';
        if (s[i]) {
            out << format_number(*s[i]);
        }
        out << ',';
        if (i < flags.size()) {
            out << flags[i];
        }
        out << '\n';
    }
    return out.str();
}

std::string series_csv(const std::vector<SeriesRow>& rows) {
    std::ostringstream out;
    out << "date,value,flags\n";
    for (const auto& r : rows) {
        out << r.date.iso() << ',' << (r.value ? format_number(*r.value) : std::string()) << ',' << r.flags << '\n';
    }
    return out.str();
}

std::string long_csv(const std::vector<NamedSeries>& series) {
    struct Entry {
        TimePoint date;
        std::size_t series;
        double value;
    };
    std::vector<Entry> entries;
    for (std::size_t k = 0; k < series.size(); ++k) {
        for (const auto& p : series[k].points) {
            entries.push_back({p.date, k, p.value});
        }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.date != b.date ? a.date < b.date : a.series < b.series;
    });
    std::ostringstream out;
    out << "date,series_name,value\n";
    for (const auto& e : entries) {
        out << e.date.iso() << ',' << series[e.series].name << ',' << format_number(e.value) << '\n';
    }
    return out.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write " + tmp.string());
        }
        out << content;
        out.flush();
        if (!out) {
            throw DataError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw DataError("cannot rename into " + path.string());
    }
}

}  // namespace wbe::io
