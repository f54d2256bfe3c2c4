#pragma once

#include <cstdio>
#include <string>

namespace lifecurve {

/// All numeric CLI output uses 9 significant digits so reruns and golden
/// files round-trip exactly.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace lifecurve
