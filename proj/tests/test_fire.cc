#include "doctest.h"

#include "cnndse/catalog.h"
#include "cnndse/fire.h"

using namespace cnndse;

namespace {

double mb(Count bytes) { return static_cast<double>(bytes) / 1e6; }

Count params(const Architecture& a) { return analyze(a, 1).totals.param_bytes; }

}  // namespace

TEST_CASE("squeezenet builtin") {
  const auto arch = builtin("squeezenet").architecture;
  const double size = mb(params(arch));
  CHECK(size >= 4.7);
  CHECK(size <= 5.1);
  CHECK(analyze(arch, 1).row("conv1").output.height == 111);
  CHECK(find_fire_modules(arch).size() == 8);
}

TEST_CASE("default metaparameters regenerate squeezenet") {
  const auto g = generate(FireMeta{});
  CHECK(structurally_equal(g.architecture, builtin("squeezenet").architecture));
  CHECK(g.modules.front() == FireSpec{16, 64, 64});
  CHECK(g.modules.back() == FireSpec{64, 256, 256});
  CHECK(g.rounding_notes.empty());
  CHECK(g.unsqueezed_modules.empty());
}

TEST_CASE("module dimensions") {
  FireMeta m;
  CHECK(m.module(0) == FireSpec{16, 64, 64});
  CHECK(m.module(1) == FireSpec{16, 64, 64});
  CHECK(m.module(2) == FireSpec{32, 128, 128});
  CHECK(m.module(7) == FireSpec{64, 256, 256});
  m.pct_3x3 = Rational(1, 8);
  CHECK(m.module(0) == FireSpec{16, 112, 16});
  m.pct_3x3 = Rational(3, 16);
  // 128 * 3/16 = 24 exactly; 256 * 3/16 = 48.
  CHECK(m.module(0).e3x3 == 24);
  m.sr = Rational(3, 100);
  // 128 * 0.03 = 3.84 -> 4
  CHECK(m.module(0).s1x1 == 4);
  m.sr = Rational(1, 256);
  // 0.5 rounds half up
  CHECK(m.module(0).s1x1 == 1);
}

TEST_CASE("sr = 1 is generable but flagged, sr > 1 is not") {
  FireMeta m;
  m.sr = 1;
  const auto g = generate(m);
  CHECK(g.unsqueezed_modules.size() == 8);
  m.sr = Rational(5, 4);
  CHECK_THROWS_AS(generate(m), ValidationError);
  m.sr = 0;
  CHECK_THROWS_AS(generate(m), ValidationError);
}

TEST_CASE("squeeze is narrower than expand below sr = 1") {
  for (int n = 1; n < 8; ++n) {
    FireMeta m;
    m.sr = Rational(n, 8);
    for (const auto& spec : generate(m).modules) {
      CHECK(spec.s1x1 < spec.expand());
      CHECK(spec.s1x1 >= 1);
    }
  }
}

TEST_CASE("invalid metaparameters") {
  FireMeta m;
  m.freq = 0;
  CHECK_THROWS_AS(validate(m), ValidationError);
  m = {};
  m.pct_3x3 = Rational(3, 2);
  CHECK_THROWS_AS(validate(m), ValidationError);
  m = {};
  m.num_modules = 0;
  CHECK_THROWS_AS(validate(m), ValidationError);
  m = {};
  m.base_e = 0;
  CHECK_THROWS_AS(validate(m), ValidationError);
}

TEST_CASE("sr sweep sizes") {
  AnalysisOptions no_bias{1, 4, false};
  std::vector<Rational> srs;
  for (int i = 1; i <= 8; ++i) srs.push_back(Rational(i, 8));
  const auto points = sweep(FireMeta{}, MetaParameter::kSr, srs, {}, no_bias);
  REQUIRE(points.size() == 8);
  for (std::size_t i = 1; i < points.size(); ++i) {
    CHECK(points[i].report.totals.param_bytes > points[i - 1].report.totals.param_bytes);
    CHECK(points[i].value == srs[i]);
  }
  CHECK(mb(points[3].report.totals.param_bytes) == doctest::Approx(13).epsilon(0.10));
  CHECK(mb(points[5].report.totals.param_bytes) == doctest::Approx(19).epsilon(0.10));
}

TEST_CASE("pct_3x3 sweep is monotone") {
  std::vector<Rational> pcts;
  for (int i = 1; i <= 9; ++i) pcts.push_back(Rational(i, 10));
  const auto points = sweep(FireMeta{}, MetaParameter::kPct3x3, pcts);
  for (std::size_t i = 1; i < points.size(); ++i) {
    CHECK(points[i].report.totals.param_bytes >= points[i - 1].report.totals.param_bytes);
  }
  CHECK(points.back().report.totals.param_bytes > points.front().report.totals.param_bytes);
  const auto csv = sweep_csv(points);
  CHECK(csv.rfind("value,param_bytes,flops,activation_bytes\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
}

TEST_CASE("sweep rejects bad values") {
  CHECK_THROWS_AS(sweep(FireMeta{}, MetaParameter::kSr, {Rational(3, 2)}), ValidationError);
  CHECK_THROWS_AS(sweep(FireMeta{}, MetaParameter::kFreq, {Rational(1, 2)}), ValidationError);
  CHECK(parse_meta_parameter("pct_3x3") == MetaParameter::kPct3x3);
  CHECK(parse_meta_parameter("sr") == MetaParameter::kSr);
  CHECK_THROWS_AS(parse_meta_parameter("depth"), ValidationError);
}

TEST_CASE("bypass variants") {
  const auto base = builtin("squeezenet").architecture;
  const auto simple = builtin("squeezenet-simple-bypass").architecture;
  const auto complex = builtin("squeezenet-complex-bypass").architecture;
  CHECK(params(simple) == params(base));
  CHECK(params(complex) > params(base));
  CHECK(simple.find("fire3/bypass") != nullptr);
  CHECK(simple.find("fire2/bypass") == nullptr);
  CHECK(complex.find("fire2/bypass1x1") != nullptr);
  CHECK(simple.layer("fire4/squeeze1x1").inputs == std::vector<std::string>{"fire3/bypass"});

  // Added bytes are exactly the 1x1 bypass convolutions (weights + bias).
  Count added = 0;
  const auto r = analyze(complex, 1);
  for (const auto& row : r.rows) {
    if (row.name.find("/bypass1x1") != std::string::npos) added += row.param_bytes;
  }
  CHECK(params(complex) == params(base) + added);

  BypassOptions bad;
  bad.simple = {"fire2"};
  CHECK_THROWS_AS(with_bypass(base, BypassVariant::kSimple, bad), ValidationError);
  CHECK_THROWS_AS(with_bypass(builtin("nin").architecture, BypassVariant::kSimple),
                  ValidationError);
  CHECK(structurally_equal(with_bypass(base, BypassVariant::kVanilla), base));
}

TEST_CASE("design space count") {
  CHECK(count_design_space(16, 5) == "152587890625");
  CHECK(count_design_space(15, 5) == "30517578125");
  CHECK(count_design_space(0, 5) == "1");
  CHECK(count_design_space(3, 0) == "0");
  CHECK(count_design_space(64, 2) == "18446744073709551616");
  CHECK(count_design_space(100, 10).size() == 101);
  CHECK_THROWS_AS(count_design_space(-1, 5), ValidationError);
}
