#pragma once

#include <cstdio>
#include <string>

namespace lcd {

// %.17g survives a text round trip bit-exactly, which keeps report files
// byte-stable across identical runs.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace lcd
