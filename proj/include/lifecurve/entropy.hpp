#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lifecurve/error.hpp"

namespace lifecurve {

/// A term's occurrence counts across states (or any categorical labels).
struct OccurrenceVector {
    std::vector<std::string> labels;
    std::vector<double> counts;  // non-negative, at least one positive
};

/// H = -sum p_i ln p_i with p_i = counts_i / sum(counts); 0 ln 0 := 0.
inline double shannon_entropy(const OccurrenceVector& v) {
    double total = 0;
    for (double c : v.counts) {
        if (c < 0) throw data_error("negative_count", "counts must be non-negative");
        total += c;
    }
    if (total <= 0) throw data_error("no_occurrences", "all counts are zero");
    double h = 0;
    for (double c : v.counts) {
        if (c <= 0) continue;
        double p = c / total;
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace lifecurve
