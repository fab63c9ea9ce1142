#pragma once

#include <cstdio>
#include <string>

namespace cml {

// Shortest-round-trip style formatting used by every CSV and JSON emitter:
// 17 significant digits recover the exact double on read-back.
inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace cml
