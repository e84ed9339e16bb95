#include "doctest.h"

#include "oracle.h"

using namespace cnndse;
using namespace oracle;

TEST_CASE("sliding-window reference agrees with the closed form on known cases") {
  CHECK(*slide(227, 11, 4, 0, false) == 55);
  CHECK(*slide(55, 3, 2, 0, true) == 27);
  CHECK(*slide(13, 3, 2, 0, true) == 6);
  CHECK(*slide(56, 3, 2, 0, true) == 28);
  CHECK(*slide(4, 2, 3, 1, true) == 2);
  CHECK_FALSE(slide(3, 6, 1, 1, false).has_value());
}

TEST_CASE("200 random architectures match the enumeration oracle") {
  std::mt19937_64 rng(20160101);
  int layers_checked = 0;
  for (int i = 0; i < 200; ++i) {
    const std::int64_t batch = 1 + static_cast<std::int64_t>(rng() % 3);
    const bool bias = rng() % 2 == 0;
    const auto c = random_case(rng, batch, bias);
    CAPTURE(i);
    REQUIRE_NOTHROW(validate(c.arch));
    const auto r = analyze(c.arch, {batch, 4, bias});
    for (const auto& [name, o] : c.expected) {
      CAPTURE(name);
      const auto& row = r.row(name);
      CHECK(row.output == o.out);
      CHECK(row.forward_flops == o.flops);
      CHECK(row.param_bytes == o.weights * 4);
      CHECK(row.activation_bytes == o.elements * 4);
      ++layers_checked;
    }
  }
  CHECK(layers_checked > 400);
}

TEST_CASE("splitting a concat branch list leaves totals unchanged") {
  Architecture flat;
  flat.name = "flat";
  flat.input_shape = {1, 3, 8, 8};
  flat.layers = {LayerSpec::input("data"), LayerSpec::conv("a", "data", 2, 1),
                 LayerSpec::conv("b", "data", 3, 3, 1, 1), LayerSpec::conv("c", "data", 4, 1),
                 LayerSpec::concat("cat", {"a", "b", "c"}), LayerSpec::conv("head", "cat", 5, 1)};
  Architecture nested = flat;
  nested.layers[4] = LayerSpec::concat("ab", {"a", "b"});
  nested.layers.insert(nested.layers.begin() + 5, LayerSpec::concat("cat", {"ab", "c"}));
  const auto rf = analyze(flat, 2);
  const auto rn = analyze(nested, 2);
  CHECK(rf.totals.param_bytes == rn.totals.param_bytes);
  CHECK(rf.totals.forward_flops == rn.totals.forward_flops);
  CHECK(rf.totals.data_bytes == rn.totals.data_bytes);
  CHECK(rf.row("head").output == rn.row("head").output);
}
