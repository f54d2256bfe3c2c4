#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lifecurve/calendar.hpp"
#include "lifecurve/error.hpp"

namespace lifecurve {

struct EventRecord {
    std::string entity_id;
    MonthIndex month;  // timestamps are truncated to month
};

struct OccurrenceRecord {
    std::string entity_id;
    MonthIndex month;
    std::int64_t count;
};

/// Monthly activity counts for one entity, from its first active month
/// through the analysis end month.
struct ActivitySeries {
    std::string entity_id;
    MonthIndex start_month = 0;
    std::vector<std::int64_t> counts;

    MonthIndex end_month() const {
        return start_month + static_cast<MonthIndex>(counts.size()) - 1;
    }
    std::int64_t total() const {
        std::int64_t s = 0;
        for (auto c : counts) s += c;
        return s;
    }
    MonthIndex last_active_month() const {
        for (std::size_t k = counts.size(); k-- > 0;)
            if (counts[k] > 0) return start_month + static_cast<MonthIndex>(k);
        return start_month;
    }
};

struct ObservationWindow {
    MonthIndex epoch_month = 0;
    MonthIndex end_month = 0;
};

struct RowError {
    std::size_t line;  // 1-based, header is line 1
    std::string message;
};

template <typename Record>
struct ParseResult {
    std::vector<Record> records;
    std::vector<RowError> row_errors;
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return fields;
}

inline std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

}  // namespace detail

/// Event CSV: header "entity_id,timestamp", one event per row.
/// Unparseable rows are collected in the error report rather than dropped.
inline ParseResult<EventRecord> parse_events(std::istream& in) {
    ParseResult<EventRecord> out;
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != "entity_id,timestamp")
        throw format_error("bad_header", "event CSV must start with 'entity_id,timestamp'");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        auto sv = detail::strip_cr(line);
        if (sv.empty()) continue;
        auto fields = detail::split_csv_line(sv);
        if (fields.size() != 2) {
            out.row_errors.push_back({lineno, "expected 2 fields, got " +
                                                  std::to_string(fields.size())});
            continue;
        }
        if (fields[0].empty()) {
            out.row_errors.push_back({lineno, "empty entity_id"});
            continue;
        }
        try {
            out.records.push_back({std::string(fields[0]), parse_month(fields[1])});
        } catch (const Error& e) {
            out.row_errors.push_back({lineno, e.what()});
        }
    }
    return out;
}

/// Occurrence CSV: header "entity_id,month,count"; pre-binned monthly counts.
inline ParseResult<OccurrenceRecord> parse_occurrences(std::istream& in) {
    ParseResult<OccurrenceRecord> out;
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != "entity_id,month,count")
        throw format_error("bad_header",
                           "occurrence CSV must start with 'entity_id,month,count'");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        auto sv = detail::strip_cr(line);
        if (sv.empty()) continue;
        auto fields = detail::split_csv_line(sv);
        if (fields.size() != 3) {
            out.row_errors.push_back({lineno, "expected 3 fields, got " +
                                                  std::to_string(fields.size())});
            continue;
        }
        if (fields[0].empty()) {
            out.row_errors.push_back({lineno, "empty entity_id"});
            continue;
        }
        std::int64_t count = 0;
        auto cs = fields[2];
        auto [p, ec] = std::from_chars(cs.data(), cs.data() + cs.size(), count);
        if (ec != std::errc() || p != cs.data() + cs.size() || count < 0) {
            out.row_errors.push_back({lineno, "bad count '" + std::string(cs) + "'"});
            continue;
        }
        try {
            out.records.push_back({std::string(fields[0]), parse_month(fields[1]), count});
        } catch (const Error& e) {
            out.row_errors.push_back({lineno, e.what()});
        }
    }
    return out;
}

/// Bins events into one ActivitySeries per entity. counts[k] is the number of
/// events in month start_month + k; trailing months through window.end_month
/// are zero-filled.
inline std::map<std::string, ActivitySeries> bin_monthly(
    const std::vector<EventRecord>& events, const ObservationWindow& window) {
    if (window.end_month < window.epoch_month)
        throw data_error("bad_window", "end_month precedes epoch_month");
    std::map<std::string, ActivitySeries> out;
    for (const auto& ev : events) {
        if (ev.month < window.epoch_month || ev.month > window.end_month)
            throw data_error("event_outside_window",
                             "entity " + ev.entity_id + " at " + month_to_string(ev.month));
        auto [it, inserted] = out.try_emplace(ev.entity_id);
        auto& s = it->second;
        if (inserted) {
            s.entity_id = ev.entity_id;
            s.start_month = ev.month;
            s.counts.assign(static_cast<std::size_t>(window.end_month - ev.month + 1), 0);
        } else if (ev.month < s.start_month) {
            std::size_t extra = static_cast<std::size_t>(s.start_month - ev.month);
            s.counts.insert(s.counts.begin(), extra, 0);
            s.start_month = ev.month;
        }
        s.counts[static_cast<std::size_t>(ev.month - s.start_month)] += 1;
    }
    return out;
}

/// Bins a pre-aggregated occurrence table; same output contract as
/// bin_monthly. Zero-count rows contribute nothing (a series still starts at
/// the first month with positive count).
inline std::map<std::string, ActivitySeries> bin_occurrences(
    const std::vector<OccurrenceRecord>& rows, const ObservationWindow& window) {
    if (window.end_month < window.epoch_month)
        throw data_error("bad_window", "end_month precedes epoch_month");
    std::map<std::string, std::map<MonthIndex, std::int64_t>> acc;
    for (const auto& r : rows) {
        if (r.month < window.epoch_month || r.month > window.end_month)
            throw data_error("event_outside_window",
                             "entity " + r.entity_id + " at " + month_to_string(r.month));
        if (r.count > 0) acc[r.entity_id][r.month] += r.count;
    }
    std::map<std::string, ActivitySeries> out;
    for (auto& [id, months] : acc) {
        ActivitySeries s;
        s.entity_id = id;
        s.start_month = months.begin()->first;
        s.counts.assign(static_cast<std::size_t>(window.end_month - s.start_month + 1), 0);
        for (auto [m, c] : months)
            s.counts[static_cast<std::size_t>(m - s.start_month)] = c;
        out.emplace(id, std::move(s));
    }
    return out;
}

/// Entities whose first activity falls in the final two months of the window
/// lack the history needed for a stable fit.
inline bool insufficient_history(const ActivitySeries& s, const ObservationWindow& window) {
    return s.start_month >= window.end_month - 1;
}

/// Truncates a series at a cutoff month (inclusive). Returns false if the
/// series starts after the cutoff.
inline bool truncate_series(const ActivitySeries& s, MonthIndex cutoff,
                            ActivitySeries& out) {
    if (s.start_month > cutoff) return false;
    out.entity_id = s.entity_id;
    out.start_month = s.start_month;
    std::size_t n = std::min<std::size_t>(
        s.counts.size(), static_cast<std::size_t>(cutoff - s.start_month + 1));
    out.counts.assign(s.counts.begin(), s.counts.begin() + static_cast<std::ptrdiff_t>(n));
    return true;
}

}  // namespace lifecurve
