#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lifecurve/fit.hpp"
#include "lifecurve/ingestion.hpp"
#include "lifecurve/rng.hpp"
#include "lifecurve/series.hpp"

namespace testing_helpers {

using namespace lifecurve;

inline ActivitySeries make_series(std::string id, MonthIndex start,
                                  std::vector<std::int64_t> counts) {
    ActivitySeries s;
    s.entity_id = std::move(id);
    s.start_month = start;
    s.counts = std::move(counts);
    return s;
}

/// Noiseless normalized sigmoid samples on a uniform grid, bypassing the
/// data pipeline (for fitter recovery checks).
inline NormalizedCumulative synthetic_sigmoid(double amplitude, double slope,
                                              double t0, int points,
                                              double noise_sigma = 0.0,
                                              std::uint64_t seed = 0) {
    NormalizedCumulative out;
    out.t.resize(static_cast<std::size_t>(points));
    out.y.resize(static_cast<std::size_t>(points));
    out.scale.total_points = points;
    out.scale.pad_length = 0;
    out.scale.final_cumulative = 1;
    RandomStream rng(seed);
    for (int k = 0; k < points; ++k) {
        double t = static_cast<double>(k) / (points - 1);
        out.t[static_cast<std::size_t>(k)] = t;
        double v = sigmoid_eval(amplitude, slope, t0, t);
        if (noise_sigma > 0) v += rng.normal(0, noise_sigma);
        out.y[static_cast<std::size_t>(k)] = v;
    }
    return out;
}

/// Orders drawn from the logistic CDF with planted calendar-unit parameters.
/// n_orders event times t_i = t0 + ln(u/(1-u))/m (month coordinates), binned
/// monthly and clipped to the window.
inline ActivitySeries logistic_order_process(std::string id, double t0_month,
                                             double slope_per_month,
                                             std::int64_t n_orders,
                                             MonthIndex window_start,
                                             MonthIndex window_end,
                                             RandomStream& rng,
                                             bool deterministic_quantiles = false) {
    std::vector<MonthIndex> months;
    months.reserve(static_cast<std::size_t>(n_orders));
    for (std::int64_t i = 0; i < n_orders; ++i) {
        double u = deterministic_quantiles
                       ? (static_cast<double>(i) + 0.5) / static_cast<double>(n_orders)
                       : rng.uniform();
        u = std::clamp(u, 1e-12, 1.0 - 1e-12);
        double time = t0_month + std::log(u / (1.0 - u)) / slope_per_month;
        MonthIndex m = static_cast<MonthIndex>(std::floor(time));
        months.push_back(std::clamp(m, window_start, window_end));
    }
    MonthIndex start = *std::min_element(months.begin(), months.end());
    ActivitySeries s;
    s.entity_id = std::move(id);
    s.start_month = start;
    s.counts.assign(static_cast<std::size_t>(window_end - start + 1), 0);
    for (MonthIndex m : months) ++s.counts[static_cast<std::size_t>(m - start)];
    return s;
}

/// Brute-force grid search over an (A, m, t0) lattice; independent oracle
/// for the global least-squares basin.
struct GridBest {
    double amplitude = 0, slope = 0, t0 = 0, rss = 0;
};

inline GridBest grid_search_sigmoid(const NormalizedCumulative& data,
                                    const std::vector<double>& amplitudes,
                                    const std::vector<double>& slopes,
                                    const std::vector<double>& t0s) {
    GridBest best;
    best.rss = 1e300;
    for (double a : amplitudes)
        for (double m : slopes)
            for (double t0 : t0s) {
                double rss = 0;
                for (std::size_t k = 0; k < data.t.size(); ++k) {
                    double r = data.y[k] - sigmoid_eval(a, m, t0, data.t[k]);
                    rss += r * r;
                }
                if (rss < best.rss) best = {a, m, t0, rss};
            }
    return best;
}

}  // namespace testing_helpers
