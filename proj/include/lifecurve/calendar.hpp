#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>

#include "lifecurve/error.hpp"

namespace lifecurve {

/// Months are indexed as months-since-year-0: index = year*12 + (month-1).
/// A continuous month coordinate x places the start of month m at x = m;
/// the midpoint of month m is m + 0.5.
using MonthIndex = int;

inline MonthIndex make_month(int year, int month) {
    return year * 12 + (month - 1);
}

inline int month_year(MonthIndex m) { return m >= 0 ? m / 12 : (m - 11) / 12; }
inline int month_of_year(MonthIndex m) { return m - month_year(m) * 12 + 1; }

/// Fractional calendar date in years for a continuous month coordinate.
inline double month_to_years(double month_coord) { return month_coord / 12.0; }

inline std::string month_to_string(MonthIndex m) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", month_year(m), month_of_year(m));
    return buf;
}

namespace detail {

inline bool parse_int(std::string_view s, int& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace detail

/// Parses "YYYY-MM" or "YYYY-MM-DD"; any time-of-day suffix after the day is
/// rejected only if it is not separated by 'T' or space (finer resolution is
/// accepted and discarded).
inline MonthIndex parse_month(std::string_view text) {
    if (text.size() < 7 || text[4] != '-')
        throw format_error("bad_date", "expected YYYY-MM[-DD]: '" + std::string(text) + "'");
    int year = 0, month = 0;
    if (!detail::parse_int(text.substr(0, 4), year) ||
        !detail::parse_int(text.substr(5, 2), month) || month < 1 || month > 12)
        throw format_error("bad_date", "expected YYYY-MM[-DD]: '" + std::string(text) + "'");
    if (text.size() > 7) {
        if (text[7] != '-' || text.size() < 10)
            throw format_error("bad_date", "expected YYYY-MM[-DD]: '" + std::string(text) + "'");
        int day = 0;
        if (!detail::parse_int(text.substr(8, 2), day) || day < 1 || day > 31)
            throw format_error("bad_date", "bad day in '" + std::string(text) + "'");
        if (text.size() > 10 && text[10] != 'T' && text[10] != ' ')
            throw format_error("bad_date", "trailing garbage in '" + std::string(text) + "'");
    }
    return make_month(year, month);
}

}  // namespace lifecurve
