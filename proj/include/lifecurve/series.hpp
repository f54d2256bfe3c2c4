#pragma once

#include <cstdint>
#include <vector>

#include "lifecurve/error.hpp"
#include "lifecurve/ingestion.hpp"

namespace lifecurve {

/// Everything needed to invert the [0,1]x[0,1] rescaling.
struct ScaleInfo {
    int pad_length = 100;
    int total_points = 0;  // L = pad_length + (end_month - first_activity_month + 1)
    std::int64_t final_cumulative = 0;
    MonthIndex epoch_month = 0;
    MonthIndex end_month = 0;
    MonthIndex first_activity_month = 0;

    /// Month coordinate of normalized grid point / axis position t in [0,1].
    double month_of(double t_norm) const {
        return static_cast<double>(first_activity_month - pad_length) +
               t_norm * (total_points - 1);
    }
    /// Normalized axis position of a month coordinate.
    double t_of_month(double month_coord) const {
        return (month_coord - (first_activity_month - pad_length)) /
               (total_points - 1);
    }
    /// Fraction of the t-axis occupied by the zero padding.
    double pad_fraction() const {
        return static_cast<double>(pad_length) / (total_points - 1);
    }
};

/// Padded cumulative series rescaled onto [0,1]x[0,1].
struct NormalizedCumulative {
    std::vector<double> t;  // uniform on [0,1]
    std::vector<double> y;  // non-decreasing, ends at exactly 1
    ScaleInfo scale;
};

inline std::vector<std::int64_t> cumulative(const ActivitySeries& series) {
    if (series.counts.empty()) throw data_error("empty_series", series.entity_id);
    std::vector<std::int64_t> out(series.counts.size());
    std::int64_t run = 0;
    for (std::size_t k = 0; k < series.counts.size(); ++k) {
        run += series.counts[k];
        out[k] = run;
    }
    return out;
}

/// Prepends pad_length zero months, rescales both axes to [0,1].
inline NormalizedCumulative normalize(const std::vector<std::int64_t>& cum,
                                      int pad_length,
                                      MonthIndex first_activity_month,
                                      MonthIndex end_month,
                                      MonthIndex epoch_month) {
    if (cum.empty() || cum.back() < 1)
        throw data_error("no_activity", "cumulative series has no activity");
    NormalizedCumulative out;
    out.scale.pad_length = pad_length;
    out.scale.total_points = pad_length + static_cast<int>(cum.size());
    out.scale.final_cumulative = cum.back();
    out.scale.epoch_month = epoch_month;
    out.scale.end_month = end_month;
    out.scale.first_activity_month = first_activity_month;

    const int L = out.scale.total_points;
    out.t.resize(static_cast<std::size_t>(L));
    out.y.assign(static_cast<std::size_t>(L), 0.0);
    const double dt = 1.0 / (L - 1);
    const double denom = static_cast<double>(cum.back());
    for (int k = 0; k < L; ++k) out.t[static_cast<std::size_t>(k)] = k * dt;
    out.t.back() = 1.0;
    for (std::size_t j = 0; j < cum.size(); ++j)
        out.y[static_cast<std::size_t>(pad_length) + j] =
            static_cast<double>(cum[j]) / denom;
    out.y.back() = 1.0;
    return out;
}

inline NormalizedCumulative normalize(const ActivitySeries& series, int pad_length,
                                      MonthIndex epoch_month) {
    return normalize(cumulative(series), pad_length, series.start_month,
                     series.end_month(), epoch_month);
}

/// Sigmoid parameters mapped back to calendar units.
struct CalendarParams {
    double amplitude = 0;         // orders (events)
    double slope_per_month = 0;   // logistic rate per calendar month
    double inflection_month = 0;  // continuous month coordinate
    double inflection_years() const { return month_to_years(inflection_month); }
};

/// Inverts the normalization for a fitted (A, m, t0) triple.
inline CalendarParams denormalize_params(double amplitude_norm, double slope_norm,
                                         double t0_norm, const ScaleInfo& scale) {
    CalendarParams out;
    out.amplitude = amplitude_norm * static_cast<double>(scale.final_cumulative);
    out.slope_per_month = slope_norm / (scale.total_points - 1);
    out.inflection_month = scale.month_of(t0_norm);
    return out;
}

}  // namespace lifecurve
