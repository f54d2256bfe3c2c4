#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "lifecurve/error.hpp"

namespace lifecurve {

/// Survival table: N[J-1] entities have cumulative activity >= J,
/// for J = 1..J_max.
struct SurvivalDistribution {
    int window_years = 0;
    std::vector<std::int64_t> counts;  // counts[j] = N(j+1)

    std::int64_t j_max() const { return static_cast<std::int64_t>(counts.size()); }
    std::int64_t n_at(std::int64_t j) const {
        return counts[static_cast<std::size_t>(j - 1)];
    }
};

inline SurvivalDistribution survival(const std::vector<std::int64_t>& sizes,
                                     int window_years = 0) {
    if (sizes.empty()) throw data_error("empty_population", "no entity sizes");
    std::int64_t jmax = 0;
    for (auto s : sizes) {
        if (s < 1) throw data_error("bad_size", "entity size must be positive");
        jmax = std::max(jmax, s);
    }
    std::vector<std::int64_t> hist(static_cast<std::size_t>(jmax) + 1, 0);
    for (auto s : sizes) ++hist[static_cast<std::size_t>(s)];
    SurvivalDistribution out;
    out.window_years = window_years;
    out.counts.resize(static_cast<std::size_t>(jmax));
    std::int64_t run = 0;
    for (std::int64_t j = jmax; j >= 1; --j) {
        run += hist[static_cast<std::size_t>(j)];
        out.counts[static_cast<std::size_t>(j - 1)] = run;
    }
    return out;
}

/// Two-regime power law N(J) ~ J^-alpha, continuous at the breakpoint in
/// log-log space. degenerate=true means no interior kink beat a single line.
struct SegmentedPowerLawFit {
    double alpha1 = 0;
    double alpha2 = 0;
    std::int64_t breakpoint = 0;  // J*, 0 when degenerate
    double alpha1_stderr = 0;
    double alpha2_stderr = 0;
    double sse = 0;
    bool degenerate = false;
};

namespace detail {

struct OlsLine {
    double slope = 0, intercept = 0, sse = 0, slope_stderr = 0;
    std::size_t n = 0;
};

inline OlsLine ols(const std::vector<double>& x, const std::vector<double>& y,
                   std::size_t lo, std::size_t hi) {  // [lo, hi)
    OlsLine out;
    out.n = hi - lo;
    double mx = 0, my = 0;
    for (std::size_t k = lo; k < hi; ++k) { mx += x[k]; my += y[k]; }
    mx /= static_cast<double>(out.n);
    my /= static_cast<double>(out.n);
    double sxx = 0, sxy = 0;
    for (std::size_t k = lo; k < hi; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    for (std::size_t k = lo; k < hi; ++k) {
        double r = y[k] - (out.intercept + out.slope * x[k]);
        out.sse += r * r;
    }
    if (out.n > 2)
        out.slope_stderr =
            std::sqrt(out.sse / (static_cast<double>(out.n) - 2.0) / sxx);
    return out;
}

// Continuous two-segment line hinged at xb: y = c + s1*(x-xb) left of the
// kink, y = c + s2*(x-xb) right of it. Linear least squares in (c, s1, s2).
struct HingeFit {
    double c = 0, s1 = 0, s2 = 0, sse = 0;
    bool ok = false;
};

// Prefix sums enabling an O(1) hinge fit per breakpoint candidate, so the
// exhaustive search stays linear in the number of distinct J values.
struct HingePrefix {
    std::vector<double> sx, sxx, sy, sxy, syy;

    explicit HingePrefix(const std::vector<double>& x, const std::vector<double>& y) {
        std::size_t n = x.size();
        sx.resize(n + 1);
        sxx.resize(n + 1);
        sy.resize(n + 1);
        sxy.resize(n + 1);
        syy.resize(n + 1);
        for (std::size_t k = 0; k < n; ++k) {
            sx[k + 1] = sx[k] + x[k];
            sxx[k + 1] = sxx[k] + x[k] * x[k];
            sy[k + 1] = sy[k] + y[k];
            sxy[k + 1] = sxy[k] + x[k] * y[k];
            syy[k + 1] = syy[k] + y[k] * y[k];
        }
    }
};

inline HingeFit fit_hinge(const std::vector<double>& x, const std::vector<double>& y,
                          double xb) {
    std::array<std::array<double, 3>, 3> m{};
    std::array<double, 3> b{};
    for (std::size_t k = 0; k < x.size(); ++k) {
        double d = x[k] - xb;
        std::array<double, 3> row{1.0, d <= 0 ? d : 0.0, d > 0 ? d : 0.0};
        for (int i = 0; i < 3; ++i) {
            b[static_cast<std::size_t>(i)] +=
                row[static_cast<std::size_t>(i)] * y[k];
            for (int j = 0; j < 3; ++j)
                m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +=
                    row[static_cast<std::size_t>(i)] * row[static_cast<std::size_t>(j)];
        }
    }
    // Gaussian elimination, partial pivoting.
    std::array<double, 3> sol{};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (std::abs(m[piv][col]) < 1e-300) return {};
        std::swap(m[col], m[piv]);
        std::swap(b[col], b[piv]);
        for (int r = col + 1; r < 3; ++r) {
            double f = m[r][col] / m[col][col];
            for (int c2 = col; c2 < 3; ++c2) m[r][c2] -= f * m[col][c2];
            b[r] -= f * b[col];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double s = b[r];
        for (int c2 = r + 1; c2 < 3; ++c2) s -= m[r][c2] * sol[c2];
        sol[r] = s / m[r][r];
    }
    HingeFit out;
    out.c = sol[0];
    out.s1 = sol[1];
    out.s2 = sol[2];
    for (std::size_t k = 0; k < x.size(); ++k) {
        double d = x[k] - xb;
        double f = out.c + (d <= 0 ? out.s1 : out.s2) * d;
        out.sse += (y[k] - f) * (y[k] - f);
    }
    out.ok = true;
    return out;
}

// Same least-squares problem as fit_hinge, evaluated from prefix sums for a
// breakpoint at data index b (left segment = indices [0, b]).
inline HingeFit fit_hinge_at(const HingePrefix& pre, const std::vector<double>& x,
                             std::size_t b) {
    const std::size_t n = x.size();
    const double xb = x[b];
    const double nl = static_cast<double>(b + 1), nr = static_cast<double>(n - b - 1);
    // left/right sums of d = x - xb, d^2, y, d*y
    const double sdl = pre.sx[b + 1] - nl * xb;
    const double sdr = (pre.sx[n] - pre.sx[b + 1]) - nr * xb;
    const double sd2l = pre.sxx[b + 1] - 2 * xb * pre.sx[b + 1] + nl * xb * xb;
    const double sd2r = (pre.sxx[n] - pre.sxx[b + 1]) -
                        2 * xb * (pre.sx[n] - pre.sx[b + 1]) + nr * xb * xb;
    const double syl = pre.sy[b + 1], syr = pre.sy[n] - pre.sy[b + 1];
    const double sdyl = pre.sxy[b + 1] - xb * syl;
    const double sdyr = (pre.sxy[n] - pre.sxy[b + 1]) - xb * syr;
    if (sd2l < 1e-300 || sd2r < 1e-300) return {};
    // normal equations [[n, sdl, sdr], [sdl, sd2l, 0], [sdr, 0, sd2r]];
    // eliminate s1, s2 to solve for the hinge level c first
    const double denom = static_cast<double>(n) - sdl * sdl / sd2l - sdr * sdr / sd2r;
    if (std::abs(denom) < 1e-300) return {};
    HingeFit out;
    out.c = (pre.sy[n] - sdl * sdyl / sd2l - sdr * sdyr / sd2r) / denom;
    out.s1 = (sdyl - sdl * out.c) / sd2l;
    out.s2 = (sdyr - sdr * out.c) / sd2r;
    out.sse = pre.syy[n] -
              2 * (out.c * pre.sy[n] + out.s1 * sdyl + out.s2 * sdyr) +
              out.c * out.c * static_cast<double>(n) +
              2 * out.c * (out.s1 * sdl + out.s2 * sdr) +
              out.s1 * out.s1 * sd2l + out.s2 * out.s2 * sd2r;
    out.sse = std::max(out.sse, 0.0);
    out.ok = true;
    return out;
}

}  // namespace detail

/// Exhaustive continuous-kink search over log N(J) vs log J, one point per
/// J value present in the data (i.e. where the survival function steps);
/// runs of constant N between observed sizes carry no extra points, exactly
/// as on an empirical survival plot. The segmented model must undercut a
/// single line's SSE by the acceptance factor (0.9), with a steeper second
/// regime, otherwise the single-regime result is returned with the
/// degenerate flag set.
inline SegmentedPowerLawFit fit_segmented_powerlaw(const SurvivalDistribution& dist,
                                                   std::int64_t j_min = 1) {
    std::vector<double> x, y;
    std::vector<std::int64_t> js;
    for (std::int64_t j = std::max<std::int64_t>(1, j_min); j <= dist.j_max(); ++j) {
        std::int64_t n = dist.n_at(j);
        bool observed = j == dist.j_max() || n > dist.n_at(j + 1);
        if (n >= 1 && observed) {
            x.push_back(std::log(static_cast<double>(j)));
            y.push_back(std::log(static_cast<double>(n)));
            js.push_back(j);
        }
    }
    if (x.size() < 8)
        throw data_error("insufficient_data",
                         "segmented power-law fit needs >= 8 distinct J values");

    auto single = detail::ols(x, y, 0, x.size());

    constexpr std::size_t min_segment = 4;
    double best_sse = std::numeric_limits<double>::infinity();
    std::size_t best_b = 0;
    detail::HingeFit best_hinge;
    detail::HingePrefix prefix(x, y);
    for (std::size_t b = min_segment - 1; b + min_segment <= x.size(); ++b) {
        auto h = detail::fit_hinge_at(prefix, x, b);
        if (h.ok && h.sse < best_sse) {
            best_sse = h.sse;
            best_b = b;
            best_hinge = h;
        }
    }

    SegmentedPowerLawFit out;
    bool two_regime = best_hinge.ok && single.sse > 1e-12 &&
                      best_sse < 0.9 * single.sse &&
                      -best_hinge.s2 > -best_hinge.s1;
    if (two_regime) {
        out.alpha1 = -best_hinge.s1;
        out.alpha2 = -best_hinge.s2;
        out.breakpoint = js[best_b];
        out.sse = best_sse;
        auto left = detail::ols(x, y, 0, best_b + 1);
        auto right = detail::ols(x, y, best_b, x.size());
        out.alpha1_stderr = left.slope_stderr;
        out.alpha2_stderr = right.slope_stderr;
    } else {
        out.degenerate = true;
        out.alpha1 = out.alpha2 = -single.slope;
        out.alpha1_stderr = out.alpha2_stderr = single.slope_stderr;
        out.sse = single.sse;
    }
    return out;
}

struct CollapseResult {
    double beta1 = 0;
    double beta2 = 0;
    double dispersion = 0;
};

struct CollapseOptions {
    int bins = 30;
    double grid_max = 1.5;
    double grid_step = 0.05;
};

namespace detail {

struct CurveLog {
    double ln_y = 0;  // ln of window length Y
    std::vector<double> ln_j, ln_n;
};

inline double collapse_dispersion(const std::vector<CurveLog>& curves, double b1,
                                  double b2, int bins) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    double lo = -inf, hi = inf;
    for (const auto& c : curves) {
        lo = std::max(lo, c.ln_j.front() - b2 * c.ln_y);
        hi = std::min(hi, c.ln_j.back() - b2 * c.ln_y);
    }
    if (!(hi > lo)) return inf;
    const double width = (hi - lo) / bins;
    // per-bin, per-curve accumulation of rescaled log-N
    std::vector<double> sum(static_cast<std::size_t>(bins)), cnt(sum.size());
    std::vector<double> bin_m2(sum.size(), 0.0), bin_mean(sum.size(), 0.0);
    std::vector<int> bin_curves(sum.size(), 0);
    for (const auto& c : curves) {
        std::fill(sum.begin(), sum.end(), 0.0);
        std::fill(cnt.begin(), cnt.end(), 0.0);
        for (std::size_t k = 0; k < c.ln_j.size(); ++k) {
            double u = c.ln_j[k] - b2 * c.ln_y;
            if (u < lo || u > hi) continue;
            int i = std::min(bins - 1, static_cast<int>((u - lo) / width));
            sum[static_cast<std::size_t>(i)] += c.ln_n[k] - b1 * c.ln_y;
            cnt[static_cast<std::size_t>(i)] += 1.0;
        }
        for (std::size_t i = 0; i < sum.size(); ++i) {
            if (cnt[i] == 0) continue;
            double v = sum[i] / cnt[i];
            // streaming mean/variance across curves
            ++bin_curves[i];
            double d = v - bin_mean[i];
            bin_mean[i] += d / bin_curves[i];
            bin_m2[i] += d * (v - bin_mean[i]);
        }
    }
    double total = 0;
    int used = 0;
    for (std::size_t i = 0; i < sum.size(); ++i) {
        if (bin_curves[i] < 2) continue;
        total += bin_m2[i] / bin_curves[i];
        ++used;
    }
    if (used == 0) return inf;
    return total / used;
}

// 2-D Nelder-Mead on the dispersion objective.
template <typename F>
inline std::pair<std::array<double, 2>, double> nelder_mead_2d(
    F&& f, std::array<double, 2> start, double scale) {
    struct Vertex {
        std::array<double, 2> x;
        double v;
    };
    std::array<Vertex, 3> s{Vertex{start, f(start)},
                            Vertex{{start[0] + scale, start[1]}, 0},
                            Vertex{{start[0], start[1] + scale}, 0}};
    s[1].v = f(s[1].x);
    s[2].v = f(s[2].x);
    auto by_value = [](const Vertex& a, const Vertex& b) { return a.v < b.v; };
    for (int iter = 0; iter < 400; ++iter) {
        std::sort(s.begin(), s.end(), by_value);
        double size = std::max(
            std::hypot(s[1].x[0] - s[0].x[0], s[1].x[1] - s[0].x[1]),
            std::hypot(s[2].x[0] - s[0].x[0], s[2].x[1] - s[0].x[1]));
        if (size < 1e-9) break;
        std::array<double, 2> centroid{(s[0].x[0] + s[1].x[0]) / 2,
                                       (s[0].x[1] + s[1].x[1]) / 2};
        auto point = [&](double coef) {
            return std::array<double, 2>{centroid[0] + coef * (centroid[0] - s[2].x[0]),
                                         centroid[1] + coef * (centroid[1] - s[2].x[1])};
        };
        auto xr = point(1.0);
        double vr = f(xr);
        if (vr < s[0].v) {
            auto xe = point(2.0);
            double ve = f(xe);
            s[2] = ve < vr ? Vertex{xe, ve} : Vertex{xr, vr};
        } else if (vr < s[1].v) {
            s[2] = {xr, vr};
        } else {
            auto xc = point(-0.5);
            double vc = f(xc);
            if (vc < s[2].v) {
                s[2] = {xc, vc};
            } else {
                for (int i = 1; i < 3; ++i) {
                    s[i].x[0] = (s[i].x[0] + s[0].x[0]) / 2;
                    s[i].x[1] = (s[i].x[1] + s[0].x[1]) / 2;
                    s[i].v = f(s[i].x);
                }
            }
        }
    }
    std::sort(s.begin(), s.end(), by_value);
    return {s[0].x, s[0].v};
}

}  // namespace detail

namespace detail {

inline std::vector<CurveLog> to_curve_logs(const std::vector<SurvivalDistribution>& dists) {
    std::vector<CurveLog> curves;
    for (const auto& d : dists) {
        if (d.window_years < 1)
            throw data_error("bad_window", "window_years must be >= 1");
        CurveLog c;
        c.ln_y = std::log(static_cast<double>(d.window_years));
        for (std::int64_t j = 1; j <= d.j_max(); ++j) {
            if (d.n_at(j) >= 1) {
                c.ln_j.push_back(std::log(static_cast<double>(j)));
                c.ln_n.push_back(std::log(static_cast<double>(d.n_at(j))));
            }
        }
        if (c.ln_j.empty()) throw data_error("empty_distribution", "no positive counts");
        curves.push_back(std::move(c));
    }
    return curves;
}

}  // namespace detail

/// Collapse objective at a fixed exponent pair (for diagnostics and tests).
inline double collapse_dispersion_at(const std::vector<SurvivalDistribution>& dists,
                                     double beta1, double beta2,
                                     const CollapseOptions& opts = {}) {
    auto curves = detail::to_curve_logs(dists);
    return detail::collapse_dispersion(curves, beta1, beta2, opts.bins);
}

/// Finds (beta1, beta2) collapsing the family N(Y,J)/Y^beta1 vs J/Y^beta2
/// onto one master curve: coarse grid sweep plus direct search from the best
/// grid point and from (0.5, 0.5). (0, 0) is always a grid candidate, so the
/// optimum never loses to no rescaling.
inline CollapseResult scaling_collapse(const std::vector<SurvivalDistribution>& dists,
                                       const CollapseOptions& opts = {}) {
    if (dists.size() < 3)
        throw data_error("insufficient_data", "collapse needs >= 3 windows");
    auto curves = detail::to_curve_logs(dists);

    auto objective = [&](std::array<double, 2> b) {
        return detail::collapse_dispersion(curves, b[0], b[1], opts.bins);
    };

    std::array<double, 2> best{0, 0};
    double best_v = objective(best);
    for (double b1 = 0; b1 <= opts.grid_max + 1e-12; b1 += opts.grid_step)
        for (double b2 = 0; b2 <= opts.grid_max + 1e-12; b2 += opts.grid_step) {
            double v = objective({b1, b2});
            if (v < best_v) {
                best_v = v;
                best = {b1, b2};
            }
        }
    for (auto start : {best, std::array<double, 2>{0.5, 0.5}}) {
        auto [x, v] = detail::nelder_mead_2d(objective, start, 0.1);
        if (v < best_v) {
            best_v = v;
            best = x;
        }
    }
    if (!std::isfinite(best_v))
        throw data_error("no_overlap", "rescaled curve supports do not overlap");
    return {best[0], best[1], best_v};
}

/// Minimal per-entity summary used when locating the parameter-space
/// threshold implied by a distribution breakpoint.
struct EntitySummary {
    double ln_slope = 0;       // ln of normalized fitted slope
    double total_activity = 0;
};

/// Median ln(slope) among entities whose total activity falls in a
/// multiplicative band around the breakpoint J*. The band widens once
/// (squared half-width) if initially empty.
inline double breakpoint_slope_line(const SegmentedPowerLawFit& fit,
                                    const std::vector<EntitySummary>& population,
                                    double band_factor = 1.5) {
    if (fit.degenerate || fit.breakpoint < 1)
        throw data_error("no_breakpoint", "segmented fit has no breakpoint");
    auto collect = [&](double factor) {
        std::vector<double> slopes;
        double lo = static_cast<double>(fit.breakpoint) / factor;
        double hi = static_cast<double>(fit.breakpoint) * factor;
        for (const auto& e : population)
            if (e.total_activity >= lo && e.total_activity <= hi)
                slopes.push_back(e.ln_slope);
        return slopes;
    };
    auto slopes = collect(band_factor);
    if (slopes.empty()) slopes = collect(band_factor * band_factor);
    if (slopes.empty())
        throw data_error("empty_band", "no entities near the breakpoint");
    std::size_t mid = slopes.size() / 2;
    std::nth_element(slopes.begin(), slopes.begin() + static_cast<std::ptrdiff_t>(mid),
                     slopes.end());
    double m = slopes[mid];
    if (slopes.size() % 2 == 0) {
        double below = *std::max_element(
            slopes.begin(), slopes.begin() + static_cast<std::ptrdiff_t>(mid));
        m = (m + below) / 2;
    }
    return m;
}

}  // namespace lifecurve
