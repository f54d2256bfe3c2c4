#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lifecurve/error.hpp"
#include "lifecurve/series.hpp"

namespace lifecurve {

/// Logistic value A / (1 + exp(-m (t - t0))), overflow-guarded so it
/// saturates to 0 or A for large |m (t - t0)|.
inline double sigmoid_eval(double amplitude, double slope, double t0, double t) {
    double u = slope * (t - t0);
    if (u > 500.0) return amplitude;
    if (u < -500.0) return 0.0;
    return amplitude / (1.0 + std::exp(-u));
}

struct FitOptions {
    int pad_length = 100;
    double amplitude_max = 10.0;       // normalized units
    double ln_slope_max = 9.5;         // ln of normalized slope bound
    double t0_max = 2.0;
    double step_tol = 1e-10;
    double grad_tol = 1e-12;
    int max_iterations = 200;
    std::array<double, 5> restart_slope_factors{0.1, 0.5, 2.0, 10.0, 50.0};
};

/// Fitted sigmoid in normalized units. saturation_status equals the
/// amplitude because the observed final cumulative is rescaled to 1.
struct SigmoidFit {
    double amplitude = 0;   // A > 0
    double slope = 0;       // m > 0
    double t0 = 0;          // may exceed 1 for still-growing entities
    double reduced_chi2 = 0;
    double saturation_status = 0;
    bool converged = false;
    int iterations = 0;
    double rss = 0;
};

struct LinearFit {
    double intercept = 0;
    double slope = 0;
    double reduced_chi2 = 0;
};

enum class Saturation { saturated, unsaturated };

/// Saturated iff the fitted asymptote does not exceed the observed total.
inline Saturation classify(const SigmoidFit& fit) {
    return fit.amplitude <= 1.0 ? Saturation::saturated : Saturation::unsaturated;
}

namespace detail {

// Internal parameterization: p = (ln A, ln m, t0); the log transform keeps
// A, m positive and makes the box bounds simple clamps.
struct FitBox {
    double ln_a_min, ln_a_max;
    double ln_m_min, ln_m_max;
    double t0_min, t0_max;

    void clamp(std::array<double, 3>& p) const {
        p[0] = std::clamp(p[0], ln_a_min, ln_a_max);
        p[1] = std::clamp(p[1], ln_m_min, ln_m_max);
        p[2] = std::clamp(p[2], t0_min, t0_max);
    }
};

inline double rss_at(std::span<const double> t, std::span<const double> y,
                     const std::array<double, 3>& p) {
    double a = std::exp(p[0]), m = std::exp(p[1]);
    double rss = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        double r = y[k] - sigmoid_eval(a, m, p[2], t[k]);
        rss += r * r;
    }
    return rss;
}

// Solves the 3x3 system M x = b by Gaussian elimination with partial
// pivoting. Returns false when M is numerically singular.
inline bool solve3(std::array<std::array<double, 3>, 3> m, std::array<double, 3> b,
                   std::array<double, 3>& x) {
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (std::abs(m[piv][col]) < 1e-300) return false;
        std::swap(m[col], m[piv]);
        std::swap(b[col], b[piv]);
        for (int r = col + 1; r < 3; ++r) {
            double f = m[r][col] / m[col][col];
            for (int c = col; c < 3; ++c) m[r][c] -= f * m[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < 3; ++c) s -= m[r][c] * x[c];
        x[r] = s / m[r][r];
    }
    return true;
}

struct LmResult {
    std::array<double, 3> p{};
    double rss = 0;
    bool converged = false;
    int iterations = 0;
};

// Damped Gauss-Newton with analytic Jacobian of the logistic model.
inline LmResult levenberg_marquardt(std::span<const double> t,
                                    std::span<const double> y,
                                    std::array<double, 3> p, const FitBox& box,
                                    const FitOptions& opts) {
    box.clamp(p);
    const std::size_t n = t.size();
    LmResult res;
    double rss = rss_at(t, y, p);
    double lambda = 1e-3;

    std::array<std::array<double, 3>, 3> jtj{};
    std::array<double, 3> jtr{};

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        res.iterations = iter + 1;
        double a = std::exp(p[0]), m = std::exp(p[1]);
        for (auto& row : jtj) row.fill(0.0);
        jtr.fill(0.0);
        for (std::size_t k = 0; k < n; ++k) {
            double u = m * (t[k] - p[2]);
            double s, s1s;  // logistic and its derivative factor s(1-s)
            if (u > 500.0) { s = 1.0; s1s = 0.0; }
            else if (u < -500.0) { s = 0.0; s1s = 0.0; }
            else {
                s = 1.0 / (1.0 + std::exp(-u));
                s1s = s * (1.0 - s);
            }
            double f = a * s;
            double r = y[k] - f;
            // derivatives w.r.t. (ln A, ln m, t0)
            std::array<double, 3> row{f, a * s1s * u, -a * m * s1s};
            for (int i = 0; i < 3; ++i) {
                jtr[i] += row[i] * r;
                for (int j = i; j < 3; ++j) jtj[i][j] += row[i] * row[j];
            }
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < i; ++j) jtj[i][j] = jtj[j][i];

        double gmax = std::max({std::abs(jtr[0]), std::abs(jtr[1]), std::abs(jtr[2])});
        if (gmax < opts.grad_tol) {
            res.converged = true;
            break;
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            auto damped = jtj;
            for (int i = 0; i < 3; ++i)
                damped[i][i] += lambda * std::max(jtj[i][i], 1e-12);
            std::array<double, 3> delta{};
            if (!solve3(damped, jtr, delta)) {
                lambda *= 10.0;
                continue;
            }
            std::array<double, 3> cand{p[0] + delta[0], p[1] + delta[1],
                                       p[2] + delta[2]};
            box.clamp(cand);
            double cand_rss = rss_at(t, y, cand);
            if (cand_rss <= rss) {
                double rel_step = 0;
                for (int i = 0; i < 3; ++i)
                    rel_step = std::max(rel_step,
                                        std::abs(cand[i] - p[i]) / (1.0 + std::abs(p[i])));
                p = cand;
                rss = cand_rss;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (rel_step < opts.step_tol) res.converged = true;
                break;
            }
            lambda *= 10.0;
            if (lambda > 1e15) break;
        }
        if (!stepped || res.converged) {
            // No downhill step at any damping: stationary within precision.
            if (!stepped) res.converged = true;
            break;
        }
    }
    res.p = p;
    res.rss = rss;
    return res;
}

}  // namespace detail

/// Least-squares sigmoid fit over the box A in (0, A_max], m in (0, m_max],
/// t0 in [0, t0_max], with multi-start on the initial slope.
inline SigmoidFit fit_sigmoid(const NormalizedCumulative& series,
                              const FitOptions& opts = {}) {
    const auto& t = series.t;
    const auto& y = series.y;
    if (t.size() < 4)
        throw data_error("insufficient_data", "sigmoid fit needs at least 4 points");

    detail::FitBox box{std::log(1e-8), std::log(opts.amplitude_max),
                       std::log(1e-8), opts.ln_slope_max,
                       0.0,            opts.t0_max};

    const double y_final = y.back();  // 1 by construction
    double a0 = 1.05 * y_final;
    double t_half = 1.0;
    for (std::size_t k = 0; k < y.size(); ++k)
        if (y[k] >= 0.5 * y_final) { t_half = t[k]; break; }
    double dt = t[1] - t[0];
    double max_slope = 0;
    for (std::size_t k = 0; k + 1 < y.size(); ++k)
        max_slope = std::max(max_slope, (y[k + 1] - y[k]) / dt);
    double m0 = 4.0 * max_slope / a0;  // logistic peak derivative is m*A/4
    if (!(m0 > 0)) m0 = 1.0;

    auto run = [&](double m_init) {
        std::array<double, 3> p{std::log(a0), std::log(m_init), t_half};
        return detail::levenberg_marquardt(t, y, p, box, opts);
    };

    detail::LmResult best = run(m0);
    int total_iters = best.iterations;
    if (!best.converged) {
        for (double f : opts.restart_slope_factors) {
            auto r = run(m0 * f);
            total_iters += r.iterations;
            bool better = r.rss < best.rss - 1e-12 ||
                          (std::abs(r.rss - best.rss) <= 1e-12 && r.p[1] < best.p[1]);
            if (better) best = r;
        }
    }

    SigmoidFit fit;
    fit.amplitude = std::exp(best.p[0]);
    fit.slope = std::exp(best.p[1]);
    fit.t0 = best.p[2];
    fit.rss = best.rss;
    fit.reduced_chi2 = best.rss / static_cast<double>(t.size() - 3);
    fit.saturation_status = fit.amplitude / y_final;
    fit.converged = best.converged;
    fit.iterations = total_iters;
    return fit;
}

/// Ordinary least-squares straight line, the reference model for the
/// reduced-chi^2 comparison.
inline LinearFit fit_linear(const NormalizedCumulative& series) {
    const auto& t = series.t;
    const auto& y = series.y;
    if (t.size() < 3)
        throw data_error("insufficient_data", "linear fit needs at least 3 points");
    const double n = static_cast<double>(t.size());
    double mt = 0, my = 0;
    for (std::size_t k = 0; k < t.size(); ++k) { mt += t[k]; my += y[k]; }
    mt /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        sxx += (t[k] - mt) * (t[k] - mt);
        sxy += (t[k] - mt) * (y[k] - my);
    }
    if (sxx <= 0) throw data_error("degenerate_axis", "all t values equal");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mt;
    double rss = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        double r = y[k] - (fit.intercept + fit.slope * t[k]);
        rss += r * r;
    }
    fit.reduced_chi2 = rss / (n - 2.0);
    return fit;
}

}  // namespace lifecurve
