#include "doctest.h"

#include "cnndse/format.h"
#include "cnndse/types.h"

using namespace cnndse;

TEST_CASE("count to_string beyond 64 bits") {
  CHECK(to_string(Count{0}) == "0");
  Count big = Count{1} << 100;
  CHECK(to_string(big) == "1267650600228229401496703205376");
}

TEST_CASE("ratio reduces and compares exactly") {
  const auto r = Ratio::of(6, 4);
  CHECK(r.num == 3);
  CHECK(r.den == 2);
  CHECK(r == Ratio::of(30, 20));
  CHECK(r.value() == doctest::Approx(1.5));
  CHECK_FALSE(Ratio::of(1, 0).defined());
}

TEST_CASE("format_significant") {
  CHECK(format_significant(3.81, 2) == "3.8");
  CHECK(format_significant(4.0, 2) == "4");
  CHECK(format_significant(0.852, 2) == "0.85");
  CHECK(format_significant(1.05, 2) == "1.1");
  CHECK(format_significant(999.6, 3) == "1000");
}

TEST_CASE("parse_rational") {
  CHECK(parse_rational("3") == Rational(3));
  CHECK(parse_rational("0.125") == Rational(1, 8));
  CHECK(parse_rational("3/2") == Rational(3, 2));
  CHECK(parse_rational(" 1.5 ") == Rational(3, 2));
  CHECK(parse_rational("-2/4") == Rational(-1, 2));
  CHECK(to_string(Rational(3, 2)) == "3/2");
  CHECK(to_string(Rational(4)) == "4");
  CHECK_THROWS_AS(parse_rational("x"), ValidationError);
  CHECK_THROWS_AS(parse_rational("1/0"), ValidationError);
  CHECK_THROWS_AS(parse_rational("."), ValidationError);
  CHECK_THROWS_AS(parse_rational("0.1234567890123456789"), ValidationError);
}

TEST_CASE("unit formatting keeps three significant figures") {
  CHECK(format_bytes(30'380'704) == "30.4 MB");
  CHECK(format_bytes(5'895'073'792) == "5.90 GB");
  CHECK(format_bytes(139'392) == "139 KB");
  CHECK(format_bytes(0) == "0 B");
  CHECK(format_bytes(512) == "512 B");
  CHECK(format_bytes(999'600) == "1.00 MB");
  CHECK(format_flops(2'266'838'155'264) == "2.27 TF");
  CHECK(format_flops(57'100'000'000) == "57.1 GF");
}

TEST_CASE("multiplier formatting") {
  CHECK(format_multiplier(Ratio::of(38, 10)) == "3.8x");
  CHECK(format_multiplier(Ratio::of(1, 1)) == "1x");
  CHECK(format_multiplier(Ratio{0, 0}) == "1x");
  CHECK(format_multiplier(Ratio::of(13, 10)) == "1.3x");
}
