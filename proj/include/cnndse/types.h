#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <boost/rational.hpp>

namespace cnndse {

// Exact element/byte/FLOP counts. 128 bits covers batch <= 2^20 with every
// tensor and filter dimension <= 2^16.
using Count = unsigned __int128;

// Positive rational used for modification factors and metaparameters.
using Rational = boost::rational<std::int64_t>;

// Bad user input: malformed file, invariant violation, illegal modification.
// `field` carries a path such as "layers[3].inputs" when one is known.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what, std::string field = {})
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Lookup of an architecture, layer or entry name that does not exist.
class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_string(Count value);

// Exact quotient of two counts, reduced on construction. den == 0 marks an
// undefined ratio (x/0).
struct Ratio {
  Count num = 0;
  Count den = 1;

  static Ratio of(Count num, Count den);
  bool defined() const { return den != 0; }
  double value() const;
  bool operator==(const Ratio& o) const { return num * o.den == o.num * den; }
};

// Rounds to `digits` significant figures and drops trailing zeros:
// 3.81 -> "3.8", 4.0 -> "4", 0.852 -> "0.85".
std::string format_significant(double value, int digits);


// Parses "3", "1.5", "3/2" or "0.125" into an exact rational.
Rational parse_rational(const std::string& text);
std::string to_string(const Rational& value);
double to_double(const Rational& value);

}  // namespace cnndse
