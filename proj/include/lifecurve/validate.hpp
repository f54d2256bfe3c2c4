#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "lifecurve/lifepath.hpp"

namespace lifecurve {

struct YearScore {
    double mean_expected_leave = 0;  // years
    double variance = 0;             // years^2
    double mean_error = 0;           // expected minus actual, years
    double within_1yr = 0;
    double within_2yr = 0;
    int scored = 0;  // entities with a defined prediction this year
};

struct CohortReport {
    int leave_year = 0;
    std::size_t cohort_size = 0;
    std::map<int, YearScore> per_year;
};

/// Entities whose last activity falls in leave_year with nothing afterward
/// through the end of the data.
inline std::vector<Lifepath> select_cohort(const std::vector<Lifepath>& paths,
                                           int leave_year) {
    std::vector<Lifepath> out;
    for (const auto& p : paths)
        if (month_year(p.last_activity_month) == leave_year) out.push_back(p);
    if (out.empty())
        throw data_error("empty_cohort",
                         "no entities left in " + std::to_string(leave_year));
    return out;
}

/// Per-analysis-year accuracy of the expected leaving time against the
/// actual one (midpoint of the last active month).
inline CohortReport score_cohort(const std::vector<Lifepath>& cohort, int leave_year) {
    CohortReport report;
    report.leave_year = leave_year;
    report.cohort_size = cohort.size();
    std::map<int, std::vector<std::pair<double, double>>> by_year;  // (expected, actual)
    for (const auto& path : cohort) {
        double actual = month_to_years(static_cast<double>(path.last_activity_month) + 0.5);
        for (const auto& pt : path.points)
            if (pt.expected_leave)
                by_year[pt.analysis_year].push_back({*pt.expected_leave, actual});
    }
    const double midpoint = static_cast<double>(leave_year) + 0.5;
    for (auto& [year, preds] : by_year) {
        YearScore s;
        s.scored = static_cast<int>(preds.size());
        double n = static_cast<double>(preds.size());
        for (auto [exp_leave, actual] : preds) {
            s.mean_expected_leave += exp_leave;
            s.mean_error += exp_leave - midpoint;
            double err = std::abs(exp_leave - actual);
            if (err <= 1.0) s.within_1yr += 1;
            if (err <= 2.0) s.within_2yr += 1;
        }
        s.mean_expected_leave /= n;
        s.mean_error /= n;
        s.within_1yr /= n;
        s.within_2yr /= n;
        for (auto [exp_leave, actual] : preds) {
            double d = exp_leave - s.mean_expected_leave;
            s.variance += d * d;
        }
        s.variance /= n;
        report.per_year[year] = s;
    }
    return report;
}

}  // namespace lifecurve
