#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cnndse/types.h"

namespace cnndse {

struct TensorShape {
  std::int64_t batch = 1;
  std::int64_t channels = 1;
  std::int64_t height = 1;
  std::int64_t width = 1;

  Count elements() const {
    return static_cast<Count>(batch) * static_cast<Count>(channels) *
           static_cast<Count>(height) * static_cast<Count>(width);
  }
  bool same_spatial(const TensorShape& other) const {
    return height == other.height && width == other.width;
  }
  bool operator==(const TensorShape&) const = default;
};

std::string to_string(const TensorShape& shape);  // "96x55x55" (CxHxW)

enum class LayerKind {
  kInput,
  kConvolution,
  kMaxPool,
  kAvgPool,
  kGlobalAvgPool,
  kFullyConnected,
  kConcat,
  kElementwiseAdd,
  kRelu,
  kDropout,
};

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view text);

// Output-size rounding. kDefault resolves to floor for convolution and ceil
// for pooling, which is what Caffe-era tables were produced with.
enum class Rounding { kDefault, kFloor, kCeil };

std::string_view to_string(Rounding rounding);
Rounding parse_rounding(std::string_view text);

bool is_pooling(LayerKind kind);
bool has_filters(LayerKind kind);  // convolution, fully-connected
bool has_window(LayerKind kind);   // convolution, max-pool, avg-pool

// One node of the architecture DAG. Fields that do not apply to `kind` stay
// zero (stride and groups stay at 1).
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kInput;
  std::int64_t num_filters = 0;
  std::int64_t filter_h = 0;
  std::int64_t filter_w = 0;
  std::int64_t stride = 1;
  std::int64_t pad_h = 0;
  std::int64_t pad_w = 0;
  std::int64_t groups = 1;
  Rounding rounding = Rounding::kDefault;
  std::vector<std::string> inputs;

  bool operator==(const LayerSpec&) const = default;

  static LayerSpec input(std::string name);
  static LayerSpec conv(std::string name, std::string input, std::int64_t filters,
                        std::int64_t kernel, std::int64_t stride = 1,
                        std::int64_t pad = 0);
  static LayerSpec max_pool(std::string name, std::string input,
                            std::int64_t kernel, std::int64_t stride,
                            std::int64_t pad = 0);
  static LayerSpec avg_pool(std::string name, std::string input,
                            std::int64_t kernel, std::int64_t stride,
                            std::int64_t pad = 0);
  static LayerSpec global_avg_pool(std::string name, std::string input);
  static LayerSpec fully_connected(std::string name, std::string input,
                                   std::int64_t outputs);
  static LayerSpec concat(std::string name, std::vector<std::string> inputs);
  static LayerSpec add(std::string name, std::vector<std::string> inputs);
  static LayerSpec relu(std::string name, std::string input);
  static LayerSpec dropout(std::string name, std::string input);
};

// Checks the per-kind field rules (filters present exactly where required,
// arity). Throws ValidationError naming the layer.
void validate_layer(const LayerSpec& layer);

struct Architecture {
  std::string name;
  TensorShape input_shape;  // batch here is a default; analysis supplies its own
  std::vector<LayerSpec> layers;
  std::map<std::string, std::string> metadata;

  const LayerSpec& layer(std::string_view name) const;  // NotFoundError
  LayerSpec& layer(std::string_view name);
  const LayerSpec* find(std::string_view name) const;
  const LayerSpec& input_layer() const;

  bool operator==(const Architecture&) const = default;
};

// Layers and input shape equal; name and metadata ignored.
bool structurally_equal(const Architecture& a, const Architecture& b);

// Full invariant check: unique names, exactly one input, known predecessors,
// per-layer field rules, acyclic, everything reachable from the input.
// Throws ValidationError; cycles are reported as "a -> b -> a".
void validate(const Architecture& arch);

// Indices into arch.layers in a topological order that keeps declaration
// order wherever dependencies allow. Requires validate() to pass.
std::vector<std::size_t> topological_order(const Architecture& arch);

// name -> names of layers that list it as an input, in declaration order.
std::map<std::string, std::vector<std::string>> successors(
    const Architecture& arch);

// Layers nobody consumes.
std::vector<std::string> sinks(const Architecture& arch);

}  // namespace cnndse
