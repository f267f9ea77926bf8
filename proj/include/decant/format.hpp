#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace decant {

// Shortest decimal text that round-trips to the same double; "nan" for NaN.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace decant
