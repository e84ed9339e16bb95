#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cnndse/accounting.h"
#include "cnndse/architecture.h"
#include "cnndse/types.h"

namespace cnndse {

// Squeeze (1x1, s1x1 filters) feeding two parallel expand convolutions
// (1x1 e1x1; 3x3 e3x3 with 1-pixel padding) whose outputs are concatenated.
struct FireSpec {
  std::int64_t s1x1 = 0;
  std::int64_t e1x1 = 0;
  std::int64_t e3x3 = 0;

  std::int64_t expand() const { return e1x1 + e3x3; }
  bool operator==(const FireSpec&) const = default;
};

// Appends the layers of one Fire module named `module` ("fire2/squeeze1x1",
// "fire2/expand1x1", "fire2/expand3x3", "fire2/concat") and returns the name
// of the module's output layer. A zero-width expand branch is omitted, and
// the concat with it. Throws ValidationError if s1x1 < 1, both expands are
// empty, or s1x1 > e1x1 + e3x3.
std::string append_fire_module(std::vector<LayerSpec>& layers,
                               const std::string& module,
                               const std::string& input, const FireSpec& spec);

struct FireMeta {
  std::int64_t base_e = 128;
  std::int64_t incr_e = 128;
  std::int64_t freq = 2;
  Rational pct_3x3{1, 2};
  Rational sr{1, 8};
  std::int64_t num_modules = 8;

  // Dimensions of module i in [0, num_modules), before validation.
  // e_i = base_e + incr_e * floor(i / freq); e3x3 = round(e_i * pct_3x3);
  // e1x1 = e_i - e3x3; s = round(sr * e_i), rounding half up.
  FireSpec module(std::int64_t i) const;
  bool operator==(const FireMeta&) const = default;
};

// Stem and classifier around the Fire chain.
struct HeadTail {
  std::int64_t input_channels = 3;
  std::int64_t input_height = 227;
  std::int64_t input_width = 227;
  std::int64_t conv1_filters = 96;
  std::int64_t conv1_kernel = 7;
  std::int64_t conv1_stride = 2;
  // 0-based module indices followed by a 3x3/2 max-pool (fire4, fire8).
  std::vector<std::int64_t> pool_after = {2, 6};
  std::int64_t num_categories = 1000;
  bool dropout = true;
};

struct GeneratedArchitecture {
  Architecture architecture;
  std::vector<FireSpec> modules;
  // One note per module whose e3x3 or s1x1 needed rounding.
  std::vector<std::string> rounding_notes;
  // Modules with s1x1 == e1x1 + e3x3 (the squeeze layer does not reduce).
  std::vector<std::string> unsqueezed_modules;
};

void validate(const FireMeta& meta);

// conv1 -> maxpool1 -> fire2..fire(num_modules+1) with pools per HeadTail ->
// [drop] -> conv10 -> global average pool. Module names start at fire2.
GeneratedArchitecture generate(const FireMeta& meta, const HeadTail& head_tail = {});

enum class MetaParameter { kBaseE, kIncrE, kFreq, kPct3x3, kSr, kNumModules };
MetaParameter parse_meta_parameter(const std::string& name);
std::string to_string(MetaParameter parameter);

struct SweepPoint {
  Rational value;
  GeneratedArchitecture generated;
  AccountingReport report;
};

// One generated architecture per value, analyzed at `options`. Points are
// evaluated concurrently; output order follows `values`.
std::vector<SweepPoint> sweep(const FireMeta& meta_template, MetaParameter vary,
                              const std::vector<Rational>& values,
                              const HeadTail& head_tail = {},
                              const AnalysisOptions& options = {});

// CSV: value,param_bytes,flops,activation_bytes (activation = |D|).
std::string sweep_csv(const std::vector<SweepPoint>& points);

enum class BypassVariant { kVanilla, kSimple, kComplex };
BypassVariant parse_bypass_variant(const std::string& text);
std::string to_string(BypassVariant variant);

struct FireModuleView {
  std::string name;    // "fire3"
  std::string squeeze;
  std::string input;   // layer feeding the squeeze
  std::string output;  // concat (or sole expand)
  TensorShape input_shape;
  TensorShape output_shape;
};

// Fire modules found structurally, in topological order.
std::vector<FireModuleView> find_fire_modules(const Architecture& arch);

struct BypassOptions {
  // Modules receiving a parameter-free residual add. Empty = every module
  // whose input and output channel counts match.
  std::vector<std::string> simple;
  // Modules receiving a 1x1-convolution bypass (complex variant only).
  // Empty = every module not given a simple bypass.
  std::vector<std::string> complex;
};

// Throws ValidationError if a simple bypass is requested around a module
// whose channel counts differ, or the architecture has no Fire modules.
Architecture with_bypass(const Architecture& arch, BypassVariant variant,
                         const BypassOptions& options = {});

// options_per_slot ^ num_slots, exact, as a decimal string.
std::string count_design_space(std::int64_t num_slots, std::int64_t options_per_slot);

}  // namespace cnndse
