#pragma once

#include <charconv>
#include <string>

namespace promptevo::detail {

/// Fixed-point rendering, locale independent; a value that rounds to zero
/// always renders unsigned.
inline std::string fixed(double value, int decimals) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
  std::string out(buf, ec == std::errc{} ? end : buf);
  if (!out.empty() && out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos)
    out.erase(0, 1);
  return out;
}

}  // namespace promptevo::detail
