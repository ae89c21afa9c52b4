#pragma once

#include <cstdio>
#include <string>

namespace atelab {

// 17 significant digits: round-trip exact for IEEE double, so CSV output is
// byte-stable across runs.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace atelab
