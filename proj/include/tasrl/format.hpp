#pragma once

#include <cstdio>
#include <string>

namespace tasrl {

/// Round-trippable decimal text for a double.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace tasrl
