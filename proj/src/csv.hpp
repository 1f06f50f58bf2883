#pragma once

// Minimal CSV reader for the measurement and results tables: comma
// separated, no quoting, blank lines ignored.

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edgeperf/error.hpp"

namespace edgeperf::csv {

struct Row {
    std::size_t line = 0;  // 1-based source line
    std::vector<std::string_view> cells;
};

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

/// Returns data rows after checking the header matches `expected_header`.
inline std::vector<Row> read(std::string_view source, std::string_view expected_header) {
    std::vector<Row> rows;
    bool header_seen = false;
    std::size_t line_no = 0;
    const auto expected = split(expected_header);
    while (!source.empty()) {
        ++line_no;
        auto nl = source.find('\n');
        auto line = source.substr(0, nl);
        source.remove_prefix(nl == std::string_view::npos ? source.size() : nl + 1);
        if (trim(line).empty()) continue;
        auto cells = split(line);
        if (!header_seen) {
            if (cells != expected) {
                fail(ErrorCode::parse_error, "line " + std::to_string(line_no) +
                                                 ": expected header '" + std::string(expected_header) + "'");
            }
            header_seen = true;
            continue;
        }
        if (cells.size() != expected.size()) {
            fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(expected.size()) + " cells, found " +
                                             std::to_string(cells.size()));
        }
        rows.push_back({line_no, std::move(cells)});
    }
    return rows;
}

inline double parse_double(std::string_view cell, std::size_t line, std::string_view column) {
    std::string text(cell);
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
        fail(ErrorCode::parse_error, "line " + std::to_string(line) + ": column '" + std::string(column) +
                                         "' is not a finite number: '" + text + "'");
    }
    return v;
}

inline std::optional<double> parse_optional_double(std::string_view cell, std::size_t line,
                                                   std::string_view column) {
    if (cell.empty()) return std::nullopt;
    return parse_double(cell, line, column);
}

inline long long parse_int(std::string_view cell, std::size_t line, std::string_view column) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
        fail(ErrorCode::parse_error, "line " + std::to_string(line) + ": column '" + std::string(column) +
                                         "' is not an integer: '" + std::string(cell) + "'");
    }
    return v;
}

/// Shortest representation that round-trips.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace edgeperf::csv
