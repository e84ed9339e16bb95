#include "cnndse/format.h"

#include <array>

namespace cnndse {

namespace {

std::string scaled(Count value, const std::array<const char*, 6>& units) {
  double v = static_cast<double>(value);
  std::size_t unit = 0;
  while (unit + 1 < units.size() && v >= 999.5) {
    v /= 1000.0;
    ++unit;
  }
  // Keep trailing zeros so "5.90 GB" reads like a table cell.
  std::string text = format_significant(v, 3);
  auto digits = [&] {
    int n = 0;
    bool leading = true;
    for (char c : text) {
      if (c < '0' || c > '9') continue;
      if (leading && c == '0') continue;
      leading = false;
      ++n;
    }
    return n;
  };
  if (unit > 0 && digits() < 3) {
    if (text.find('.') == std::string::npos) text += '.';
    while (digits() < 3) text += '0';
  }
  return text + " " + units[unit];
}

}  // namespace

std::string format_bytes(Count bytes) {
  return scaled(bytes, {"B", "KB", "MB", "GB", "TB", "PB"});
}

std::string format_flops(Count flops) {
  return scaled(flops, {"F", "KF", "MF", "GF", "TF", "PF"});
}

std::string format_multiplier(const Ratio& ratio) {
  if (!ratio.defined()) return ratio.num == 0 ? "1x" : "new";
  return format_significant(ratio.value(), 2) + "x";
}

}  // namespace cnndse
