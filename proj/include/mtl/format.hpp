#pragma once

#include <cstdio>
#include <string>

namespace mtl {

// %.{digits}g formatting; all file output goes through this so identical
// doubles always produce identical bytes.
inline std::string fmt_g(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

}  // namespace mtl
