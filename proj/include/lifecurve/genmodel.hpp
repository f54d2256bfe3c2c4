#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lifecurve/error.hpp"
#include "lifecurve/rng.hpp"

namespace lifecurve {

/// Constants of the factorized parameter model
/// p(t0, m', A') = p(A'|m',t0) p(m'|t0) p(t0), with m' = ln(slope) and
/// A' = ln(total activity). Defaults parameterize the analysis at the end of
/// the observation window; the two ln-slope gaps (6.5, 8.9) and (9.1, 9.3)
/// carry zero probability.
struct GenerativeModelParams {
    double t0a = 0.32;
    double t0b = 1.0;
    std::array<double, 3> regime_weights{0.57, 0.03, 0.40};
    // fixed outer bands; the first band's lower edge is m_prime_floor(t0)
    double band1_hi = 6.5;
    double band2_lo = 8.9, band2_hi = 9.1;
    double band3_lo = 9.3, band3_hi = 9.4;
    double n0 = 0.5, n1 = 1.5;                 // m'_a(t0) = n0 + exp(n1 t0^4)
    double a0 = 0.13, a1 = -2.12, a2 = 9.86;   // mu1(m') = a0 m'^2 + a1 m' + a2
    double b0 = -0.20, b1 = 1.93;              // sigma1(m') = b0 m' + b1
    double mu2 = 1.0;
    double sigma2 = std::log(1.5);

    double m_prime_floor(double t0) const {
        return n0 + std::exp(n1 * t0 * t0 * t0 * t0);
    }
    double mu1(double m_prime) const {
        return a0 * m_prime * m_prime + a1 * m_prime + a2;
    }
    double sigma1(double m_prime) const { return b0 * m_prime + b1; }

    void validate() const {
        double wsum = regime_weights[0] + regime_weights[1] + regime_weights[2];
        if (std::abs(wsum - 1.0) > 1e-12)
            throw data_error("bad_model", "regime weights must sum to 1");
        if (!(t0a < t0b)) throw data_error("bad_model", "t0a must be below t0b");
        if (!(m_prime_floor(t0b) < band1_hi))
            throw data_error("bad_model", "first slope band is empty at t0b");
        if (!(band2_lo < band2_hi) || !(band3_lo < band3_hi) ||
            !(band1_hi < band2_lo) || !(band2_hi < band3_lo))
            throw data_error("bad_model", "slope bands out of order");
        // sigma1 is decreasing in m', so its minimum over the band is at band1_hi
        if (!(sigma1(band1_hi) > 0) || !(sigma2 > 0))
            throw data_error("bad_model", "amplitude stddev must stay positive");
    }
};

struct EntityParams {
    double t0 = 0;       // normalized start time
    double m_prime = 0;  // ln(slope)
    double a_prime = 0;  // ln(total activity)
};

inline double m_prime_floor(double t0, const GenerativeModelParams& model) {
    return model.m_prime_floor(t0);
}

namespace detail {

inline double gauss_pdf(double x, double mu, double sigma) {
    double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * 3.14159265358979323846));
}

}  // namespace detail

/// Joint density; zero outside the supports, including the unmodeled
/// ln-slope gaps.
inline double density(const EntityParams& p, const GenerativeModelParams& model) {
    if (p.t0 < model.t0a || p.t0 > model.t0b) return 0.0;
    double p_t0 = 1.0 / (model.t0b - model.t0a);

    double floor1 = model.m_prime_floor(p.t0);
    double p_m = 0, p_a = 0;
    if (p.m_prime > floor1 && p.m_prime < model.band1_hi) {
        p_m = model.regime_weights[0] / (model.band1_hi - floor1);
        p_a = detail::gauss_pdf(p.a_prime, model.mu1(p.m_prime),
                                model.sigma1(p.m_prime));
    } else if (p.m_prime > model.band2_lo && p.m_prime < model.band2_hi) {
        p_m = model.regime_weights[1] / (model.band2_hi - model.band2_lo);
        p_a = detail::gauss_pdf(p.a_prime, model.mu2, model.sigma2);
    } else if (p.m_prime > model.band3_lo && p.m_prime < model.band3_hi) {
        p_m = model.regime_weights[2] / (model.band3_hi - model.band3_lo);
        p_a = detail::gauss_pdf(p.a_prime, model.mu2, model.sigma2);
    } else {
        return 0.0;
    }
    return p_a * p_m * p_t0;
}

/// i.i.d. draws from the model. The first band's amplitude Gaussian is
/// truncated at A' >= 0 by rejection; its mass below zero is negligible over
/// the admissible slope range.
inline std::vector<EntityParams> sample_population(std::size_t n,
                                                   const GenerativeModelParams& model,
                                                   std::uint64_t seed) {
    if (n < 1) throw data_error("bad_count", "sample count must be >= 1");
    model.validate();
    RandomStream rng(seed);
    std::vector<EntityParams> out;
    out.reserve(n);
    const double w01 = model.regime_weights[0];
    const double w012 = w01 + model.regime_weights[1];
    for (std::size_t i = 0; i < n; ++i) {
        EntityParams p;
        p.t0 = rng.uniform(model.t0a, model.t0b);
        double u = rng.uniform();
        if (u < w01) {
            p.m_prime = rng.uniform(model.m_prime_floor(p.t0), model.band1_hi);
            double mu = model.mu1(p.m_prime);
            double sigma = model.sigma1(p.m_prime);
            do { p.a_prime = rng.normal(mu, sigma); } while (p.a_prime < 0);
        } else if (u < w012) {
            p.m_prime = rng.uniform(model.band2_lo, model.band2_hi);
            p.a_prime = rng.normal(model.mu2, model.sigma2);
        } else {
            p.m_prime = rng.uniform(model.band3_lo, model.band3_hi);
            p.a_prime = rng.normal(model.mu2, model.sigma2);
        }
        out.push_back(p);
    }
    return out;
}

/// A' is the natural log of the total activity count; each entity gets at
/// least one event.
inline std::vector<std::int64_t> to_order_counts(const std::vector<EntityParams>& pop) {
    if (pop.empty()) throw data_error("empty_population", "no entities");
    std::vector<std::int64_t> out;
    out.reserve(pop.size());
    for (const auto& p : pop)
        out.push_back(std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::llround(std::exp(p.a_prime)))));
    return out;
}

}  // namespace lifecurve
