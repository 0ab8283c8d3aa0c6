#pragma once

#include <charconv>
#include <string>

namespace tierprobe {

/// Shortest decimal text that reads back to exactly `v`.
inline std::string format_shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

/// Fixed-point text with `digits` decimals.
inline std::string format_fixed(double v, int digits) {
  char buf[128];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
  return std::string(buf, ptr);
}

}  // namespace tierprobe
