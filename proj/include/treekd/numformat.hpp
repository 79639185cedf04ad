#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace treekd {

// Number rendering shared by tree verbalization and prompt targets. Trees
// store the value parsed back from the rendered text, so the printed rule and
// the in-memory model can never disagree on a boundary comparison. Both
// formatters must therefore be stable under format -> parse -> format.

// Thresholds: fixed notation, up to 4 decimal places, trailing zeros trimmed.
inline std::string format_fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  std::string s(buf);
  const auto dot = s.find('.');
  if (dot != std::string::npos) {
    auto last = s.find_last_not_of('0');
    if (last == dot) --last;
    s.erase(last + 1);
  }
  if (s == "-0") s = "0";
  return s;
}

// Leaf values and regression targets: 4 significant digits.
inline std::string format_sig4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  std::string s(buf);
  if (s == "-0") s = "0";
  return s;
}

inline double parse_number(const std::string& s) {
  return std::strtod(s.c_str(), nullptr);
}

inline double round_fixed4(double v) { return parse_number(format_fixed4(v)); }
inline double round_sig4(double v) { return parse_number(format_sig4(v)); }

}  // namespace treekd
