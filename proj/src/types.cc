#include "cnndse/types.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>

namespace cnndse {

std::string to_string(Count value) {
  if (value == 0) return "0";
  std::string digits;
  while (value > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

namespace {

Count gcd(Count a, Count b) {
  while (b != 0) {
    Count t = a % b;
    a = b;
    b = t;
  }
  return a;
}

}  // namespace

Ratio Ratio::of(Count num, Count den) {
  if (den == 0) return Ratio{num == 0 ? Count{0} : Count{1}, 0};
  Count g = gcd(num, den);
  if (g == 0) g = 1;
  return Ratio{num / g, den / g};
}

double Ratio::value() const {
  if (den == 0) return num == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string format_significant(double value, int digits) {
  if (value == 0.0) return "0";
  if (!std::isfinite(value)) return "inf";
  int magnitude = static_cast<int>(std::floor(std::log10(std::fabs(value))));
  int decimals = std::max(0, digits - 1 - magnitude);
  double scale = std::pow(10.0, digits - 1 - magnitude);
  double rounded = std::round(value * scale) / scale;
  // Rounding can carry into a new decade (9.96 -> 10.0).
  if (std::fabs(rounded) >= std::pow(10.0, magnitude + 1)) {
    decimals = std::max(0, decimals - 1);
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, rounded);
  std::string text = buf;
  if (text.find('.') != std::string::npos) {
    while (text.back() == '0') text.pop_back();
    if (text.back() == '.') text.pop_back();
  }
  return text;
}

namespace {

std::int64_t parse_int(const std::string& text, const std::string& whole) {
  if (text.empty() ||
      !std::all_of(text.begin(), text.end(),
                   [](unsigned char c) { return std::isdigit(c) != 0; })) {
    throw ValidationError("not a number: '" + whole + "'");
  }
  if (text.size() > 15) throw ValidationError("number too long: '" + whole + "'");
  return std::stoll(text);
}

}  // namespace

Rational parse_rational(const std::string& raw) {
  std::string text = raw;
  text.erase(std::remove_if(text.begin(), text.end(),
                            [](unsigned char c) { return std::isspace(c) != 0; }),
             text.end());
  bool negative = false;
  if (!text.empty() && (text[0] == '-' || text[0] == '+')) {
    negative = text[0] == '-';
    text.erase(0, 1);
  }
  Rational value;
  if (auto slash = text.find('/'); slash != std::string::npos) {
    auto num = parse_int(text.substr(0, slash), raw);
    auto den = parse_int(text.substr(slash + 1), raw);
    if (den == 0) throw ValidationError("zero denominator: '" + raw + "'");
    value = Rational(num, den);
  } else if (auto dot = text.find('.'); dot != std::string::npos) {
    std::string whole = text.substr(0, dot);
    std::string frac = text.substr(dot + 1);
    if (whole.empty() && frac.empty()) throw ValidationError("not a number: '" + raw + "'");
    if (frac.size() > 12) throw ValidationError("too many decimals: '" + raw + "'");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    std::int64_t num = (whole.empty() ? 0 : parse_int(whole, raw)) * den +
                       (frac.empty() ? 0 : parse_int(frac, raw));
    value = Rational(num, den);
  } else {
    value = Rational(parse_int(text, raw));
  }
  return negative ? -value : value;
}

std::string to_string(const Rational& value) {
  if (value.denominator() == 1) return std::to_string(value.numerator());
  return std::to_string(value.numerator()) + "/" +
         std::to_string(value.denominator());
}

double to_double(const Rational& value) {
  return static_cast<double>(value.numerator()) /
         static_cast<double>(value.denominator());
}

}  // namespace cnndse
