#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lifecurve/fit.hpp"
#include "lifecurve/ingestion.hpp"
#include "lifecurve/series.hpp"

namespace lifecurve {

enum class Phase { acceleration, at_inflection, deceleration, deactivated };

inline const char* phase_name(Phase p) {
    switch (p) {
        case Phase::acceleration: return "acceleration";
        case Phase::at_inflection: return "at_inflection";
        case Phase::deceleration: return "deceleration";
        case Phase::deactivated: return "deactivated";
    }
    return "?";
}

struct LifepathOptions {
    FitOptions fit;
    double phase_delta_months = 1.0;   // half-width of the at_inflection window
    int dormancy_horizon_months = 6;   // no activity this long => candidate deactivated
    double deactivated_saturation_max = 1.05;
    double stabilization_epsilon = 0.05;
    // presentation-only sentinel for unreliable early-growth inflections
    double sentinel_year = 2030.0;
    double sentinel_lead_years = 5.0;
    double sentinel_saturation_min = 2.0;
};

struct LifepathPoint {
    int analysis_year = 0;
    MonthIndex cutoff_month = 0;
    SigmoidFit fit;          // normalized units
    CalendarParams calendar; // orders, per-month slope, month coordinate
    std::optional<double> expected_leave;  // fractional calendar years
    double expected_total = 0;             // orders
    Phase status = Phase::acceleration;

    double inflection_years() const { return calendar.inflection_years(); }
    double ln_slope_per_month() const { return std::log(calendar.slope_per_month); }
};

struct Lifepath {
    std::string entity_id;
    MonthIndex last_activity_month = 0;
    MonthIndex data_end_month = 0;
    std::vector<LifepathPoint> points;  // strictly increasing analysis_year
};

/// Date at which the fitted curve comes within half an event of its
/// asymptote: t0 + ln(2A - 1)/m. Reduces to t0 for A = 1.
inline double expected_leave_time(const CalendarParams& cal) {
    if (cal.amplitude < 1.0)
        throw data_error("amplitude_below_one",
                         "leave time undefined for amplitude < 1");
    double leave_month =
        cal.inflection_month + std::log(2.0 * cal.amplitude - 1.0) / cal.slope_per_month;
    return month_to_years(leave_month);
}

/// Euclidean distance between consecutive lifepath points in the
/// (inflection date in years, ln slope) plane.
inline double trajectory_step_distance(const LifepathPoint& p1,
                                       const LifepathPoint& p2) {
    return std::hypot(p2.inflection_years() - p1.inflection_years(),
                      p2.ln_slope_per_month() - p1.ln_slope_per_month());
}

namespace detail {

inline Phase classify_phase(const ActivitySeries& truncated, double inflection_month,
                            double saturation, MonthIndex cutoff,
                            const LifepathOptions& opts) {
    double c = static_cast<double>(cutoff) + 1.0;  // end of the analysis month
    if (c < inflection_month - opts.phase_delta_months) return Phase::acceleration;
    if (std::abs(c - inflection_month) <= opts.phase_delta_months)
        return Phase::at_inflection;
    bool dormant = truncated.last_active_month() <
                   cutoff - (opts.dormancy_horizon_months - 1);
    if (dormant && saturation <= opts.deactivated_saturation_max)
        return Phase::deactivated;
    return Phase::deceleration;
}

}  // namespace detail

/// Refits the entity with the series truncated at each year's final month.
/// Years before first activity, or where the fit cannot run, yield gaps.
inline Lifepath expanding_window_fits(const ActivitySeries& entity,
                                      const std::vector<int>& years,
                                      MonthIndex epoch_month,
                                      const LifepathOptions& opts = {}) {
    Lifepath path;
    path.entity_id = entity.entity_id;
    path.last_activity_month = entity.last_active_month();
    path.data_end_month = entity.end_month();
    for (int year : years) {
        MonthIndex cutoff = make_month(year, 12);
        ActivitySeries truncated;
        if (!truncate_series(entity, cutoff, truncated)) continue;
        // pad the truncated series out to the cutoff with zero months
        truncated.counts.resize(static_cast<std::size_t>(cutoff - truncated.start_month + 1), 0);
        if (insufficient_history(truncated, {epoch_month, cutoff})) continue;
        LifepathPoint point;
        point.analysis_year = year;
        point.cutoff_month = cutoff;
        try {
            auto norm = normalize(truncated, opts.fit.pad_length, epoch_month);
            point.fit = fit_sigmoid(norm, opts.fit);
            point.calendar = denormalize_params(point.fit.amplitude, point.fit.slope,
                                                point.fit.t0, norm.scale);
        } catch (const Error&) {
            continue;  // gap year, never an abort
        }
        point.expected_total = point.calendar.amplitude;
        point.status = detail::classify_phase(truncated, point.calendar.inflection_month,
                                              point.fit.saturation_status, cutoff, opts);
        if (point.fit.converged && point.calendar.amplitude >= 1.0)
            point.expected_leave = expected_leave_time(point.calendar);
        path.points.push_back(std::move(point));
    }
    return path;
}

/// First year whose incoming step distance (and outgoing one, when present)
/// drops below epsilon.
inline std::optional<int> stabilization_year(const Lifepath& path, double epsilon) {
    const auto& pts = path.points;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (trajectory_step_distance(pts[i - 1], pts[i]) >= epsilon) continue;
        if (i + 1 < pts.size() &&
            trajectory_step_distance(pts[i], pts[i + 1]) >= epsilon)
            continue;
        return pts[i].analysis_year;
    }
    return std::nullopt;
}

/// Presentation rule: fits still in steep early growth get a fixed sentinel
/// inflection year instead of their unreliable estimate. Never applied to
/// stored fits.
inline double display_inflection_years(const LifepathPoint& point,
                                       const LifepathOptions& opts = {}) {
    double cutoff_years = month_to_years(static_cast<double>(point.cutoff_month) + 1.0);
    if (point.inflection_years() > cutoff_years + opts.sentinel_lead_years &&
        point.fit.saturation_status > opts.sentinel_saturation_min)
        return opts.sentinel_year;
    return point.inflection_years();
}

}  // namespace lifecurve
