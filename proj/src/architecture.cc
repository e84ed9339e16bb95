#include "cnndse/architecture.h"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>
#include <unordered_map>

namespace cnndse {

std::string to_string(const TensorShape& shape) {
  return std::to_string(shape.channels) + "x" + std::to_string(shape.height) +
         "x" + std::to_string(shape.width);
}

namespace {

struct KindName {
  LayerKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {LayerKind::kInput, "input"},
    {LayerKind::kConvolution, "convolution"},
    {LayerKind::kMaxPool, "max-pool"},
    {LayerKind::kAvgPool, "avg-pool"},
    {LayerKind::kGlobalAvgPool, "global-avg-pool"},
    {LayerKind::kFullyConnected, "fully-connected"},
    {LayerKind::kConcat, "concat"},
    {LayerKind::kElementwiseAdd, "elementwise-add"},
    {LayerKind::kRelu, "relu"},
    {LayerKind::kDropout, "dropout"},
};

}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& entry : kKindNames) {
    if (entry.kind == kind) return entry.name;
  }
  return "unknown";
}

LayerKind parse_layer_kind(std::string_view text) {
  for (const auto& entry : kKindNames) {
    if (entry.name == text) return entry.kind;
  }
  // Short aliases accepted on input only.
  if (text == "conv") return LayerKind::kConvolution;
  if (text == "fc") return LayerKind::kFullyConnected;
  if (text == "add") return LayerKind::kElementwiseAdd;
  throw ValidationError("unknown layer kind '" + std::string(text) + "'");
}

std::string_view to_string(Rounding rounding) {
  switch (rounding) {
    case Rounding::kFloor:
      return "floor";
    case Rounding::kCeil:
      return "ceil";
    case Rounding::kDefault:
      break;
  }
  return "default";
}

Rounding parse_rounding(std::string_view text) {
  if (text == "floor") return Rounding::kFloor;
  if (text == "ceil") return Rounding::kCeil;
  if (text == "default") return Rounding::kDefault;
  throw ValidationError("unknown rounding mode '" + std::string(text) + "'");
}

bool is_pooling(LayerKind kind) {
  return kind == LayerKind::kMaxPool || kind == LayerKind::kAvgPool ||
         kind == LayerKind::kGlobalAvgPool;
}

bool has_filters(LayerKind kind) {
  return kind == LayerKind::kConvolution || kind == LayerKind::kFullyConnected;
}

bool has_window(LayerKind kind) {
  return kind == LayerKind::kConvolution || kind == LayerKind::kMaxPool ||
         kind == LayerKind::kAvgPool;
}

LayerSpec LayerSpec::input(std::string name) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::kInput;
  return l;
}

LayerSpec LayerSpec::conv(std::string name, std::string input,
                          std::int64_t filters, std::int64_t kernel,
                          std::int64_t stride, std::int64_t pad) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::kConvolution;
  l.num_filters = filters;
  l.filter_h = l.filter_w = kernel;
  l.stride = stride;
  l.pad_h = l.pad_w = pad;
  l.inputs = {std::move(input)};
  return l;
}

namespace {

LayerSpec pool(LayerKind kind, std::string name, std::string input,
               std::int64_t kernel, std::int64_t stride, std::int64_t pad) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = kind;
  l.filter_h = l.filter_w = kernel;
  l.stride = stride;
  l.pad_h = l.pad_w = pad;
  l.inputs = {std::move(input)};
  return l;
}

LayerSpec unary(LayerKind kind, std::string name, std::string input) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = kind;
  l.inputs = {std::move(input)};
  return l;
}

}  // namespace

LayerSpec LayerSpec::max_pool(std::string name, std::string input,
                              std::int64_t kernel, std::int64_t stride,
                              std::int64_t pad) {
  return pool(LayerKind::kMaxPool, std::move(name), std::move(input), kernel,
              stride, pad);
}

LayerSpec LayerSpec::avg_pool(std::string name, std::string input,
                              std::int64_t kernel, std::int64_t stride,
                              std::int64_t pad) {
  return pool(LayerKind::kAvgPool, std::move(name), std::move(input), kernel,
              stride, pad);
}

LayerSpec LayerSpec::global_avg_pool(std::string name, std::string input) {
  return unary(LayerKind::kGlobalAvgPool, std::move(name), std::move(input));
}

LayerSpec LayerSpec::fully_connected(std::string name, std::string input,
                                     std::int64_t outputs) {
  LayerSpec l = unary(LayerKind::kFullyConnected, std::move(name), std::move(input));
  l.num_filters = outputs;
  return l;
}

LayerSpec LayerSpec::concat(std::string name, std::vector<std::string> inputs) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::kConcat;
  l.inputs = std::move(inputs);
  return l;
}

LayerSpec LayerSpec::add(std::string name, std::vector<std::string> inputs) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::kElementwiseAdd;
  l.inputs = std::move(inputs);
  return l;
}

LayerSpec LayerSpec::relu(std::string name, std::string input) {
  return unary(LayerKind::kRelu, std::move(name), std::move(input));
}

LayerSpec LayerSpec::dropout(std::string name, std::string input) {
  return unary(LayerKind::kDropout, std::move(name), std::move(input));
}

void validate_layer(const LayerSpec& l) {
  auto fail = [&](const std::string& msg) {
    throw ValidationError("layer '" + l.name + "': " + msg);
  };
  if (l.name.empty()) throw ValidationError("layer with empty name");

  const bool filters = has_filters(l.kind);
  const bool window = has_window(l.kind);
  if (filters && l.num_filters < 1) fail("num_filters must be >= 1");
  if (!filters && l.num_filters != 0) fail("num_filters not allowed on " + std::string(to_string(l.kind)));
  if (window) {
    if (l.filter_h < 1 || l.filter_w < 1) fail("filter size must be >= 1");
    if (l.stride < 1) fail("stride must be >= 1");
    if (l.pad_h < 0 || l.pad_w < 0) fail("padding must be >= 0");
  } else {
    if (l.filter_h != 0 || l.filter_w != 0) fail("filter size not allowed on " + std::string(to_string(l.kind)));
    if (l.stride != 1) fail("stride not allowed on " + std::string(to_string(l.kind)));
    if (l.pad_h != 0 || l.pad_w != 0) fail("padding not allowed on " + std::string(to_string(l.kind)));
    if (l.rounding != Rounding::kDefault) fail("rounding not allowed on " + std::string(to_string(l.kind)));
  }
  if (l.kind == LayerKind::kConvolution) {
    if (l.groups < 1) fail("groups must be >= 1");
    if (l.num_filters % l.groups != 0) fail("num_filters not divisible by groups");
  } else if (l.groups != 1) {
    fail("groups only allowed on convolution");
  }

  const auto arity = l.inputs.size();
  switch (l.kind) {
    case LayerKind::kInput:
      if (arity != 0) fail("input layer takes no inputs");
      break;
    case LayerKind::kConcat:
    case LayerKind::kElementwiseAdd:
      if (arity < 2) fail(std::string(to_string(l.kind)) + " needs at least 2 inputs");
      break;
    default:
      if (arity != 1) fail("expects exactly 1 input, got " + std::to_string(arity));
  }
}

const LayerSpec* Architecture::find(std::string_view name) const {
  for (const auto& l : layers) {
    if (l.name == name) return &l;
  }
  return nullptr;
}

const LayerSpec& Architecture::layer(std::string_view name) const {
  if (const auto* l = find(name)) return *l;
  throw NotFoundError("unknown layer '" + std::string(name) + "'");
}

LayerSpec& Architecture::layer(std::string_view name) {
  return const_cast<LayerSpec&>(std::as_const(*this).layer(name));
}

const LayerSpec& Architecture::input_layer() const {
  for (const auto& l : layers) {
    if (l.kind == LayerKind::kInput) return l;
  }
  throw ValidationError("architecture '" + name + "' has no input layer");
}

bool structurally_equal(const Architecture& a, const Architecture& b) {
  return a.input_shape == b.input_shape && a.layers == b.layers;
}

void validate(const Architecture& arch) {
  const auto& s = arch.input_shape;
  if (s.batch < 1 || s.channels < 1 || s.height < 1 || s.width < 1) {
    throw ValidationError("input shape dimensions must all be >= 1", "input");
  }

  std::unordered_map<std::string, std::size_t> index;
  std::size_t inputs = 0;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& l = arch.layers[i];
    const std::string field = "layers[" + std::to_string(i) + "]";
    try {
      validate_layer(l);
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), field);
    }
    if (!index.emplace(l.name, i).second) {
      throw ValidationError("duplicate layer name '" + l.name + "'", field + ".name");
    }
    if (l.kind == LayerKind::kInput) ++inputs;
  }
  if (inputs != 1) {
    throw ValidationError("architecture must have exactly one input layer, found " +
                          std::to_string(inputs), "layers");
  }
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    for (const auto& in : arch.layers[i].inputs) {
      if (!index.count(in)) {
        throw ValidationError("layer '" + arch.layers[i].name +
                                  "' references unknown input '" + in + "'",
                              "layers[" + std::to_string(i) + "].inputs");
      }
    }
  }

  // Cycle detection by DFS; report the first cycle found.
  enum class Mark { kNone, kActive, kDone };
  std::vector<Mark> mark(arch.layers.size(), Mark::kNone);
  std::vector<std::size_t> stack;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    mark[v] = Mark::kActive;
    stack.push_back(v);
    for (const auto& in : arch.layers[v].inputs) {
      std::size_t u = index.at(in);
      if (mark[u] == Mark::kActive) {
        auto it = std::find(stack.begin(), stack.end(), u);
        // Edges point from consumer to producer here; print in data-flow order.
        std::vector<std::string> cycle;
        for (auto jt = stack.end(); jt != it;) {
          --jt;
          cycle.push_back(arch.layers[*jt].name);
        }
        cycle.push_back(arch.layers[v].name);
        std::string text;
        for (std::size_t k = 0; k < cycle.size(); ++k) {
          if (k) text += " -> ";
          text += cycle[k];
        }
        throw ValidationError("cycle detected: " + text, "layers");
      }
      if (mark[u] == Mark::kNone) visit(u);
    }
    stack.pop_back();
    mark[v] = Mark::kDone;
  };
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    if (mark[i] == Mark::kNone) visit(i);
  }

  // Reachability from the input layer.
  auto succ = successors(arch);
  std::set<std::string> seen;
  std::vector<std::string> frontier = {arch.input_layer().name};
  while (!frontier.empty()) {
    auto n = frontier.back();
    frontier.pop_back();
    if (!seen.insert(n).second) continue;
    for (const auto& s2 : succ[n]) frontier.push_back(s2);
  }
  for (const auto& l : arch.layers) {
    if (!seen.count(l.name)) {
      throw ValidationError("layer '" + l.name + "' is not reachable from the input",
                            "layers");
    }
  }
}

std::vector<std::size_t> topological_order(const Architecture& arch) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) index[arch.layers[i].name] = i;

  std::vector<std::size_t> pending(arch.layers.size(), 0);
  std::vector<std::vector<std::size_t>> consumers(arch.layers.size());
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    for (const auto& in : arch.layers[i].inputs) {
      ++pending[i];
      consumers[index.at(in)].push_back(i);
    }
  }
  // Min-heap on declaration index keeps the order stable.
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    if (pending[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  order.reserve(arch.layers.size());
  while (!ready.empty()) {
    auto v = ready.top();
    ready.pop();
    order.push_back(v);
    for (auto c : consumers[v]) {
      if (--pending[c] == 0) ready.push(c);
    }
  }
  if (order.size() != arch.layers.size()) {
    throw ValidationError("architecture '" + arch.name + "' contains a cycle", "layers");
  }
  return order;
}

std::map<std::string, std::vector<std::string>> successors(const Architecture& arch) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& l : arch.layers) {
    out[l.name];
    for (const auto& in : l.inputs) out[in].push_back(l.name);
  }
  return out;
}

std::vector<std::string> sinks(const Architecture& arch) {
  auto succ = successors(arch);
  std::vector<std::string> out;
  for (const auto& l : arch.layers) {
    if (succ[l.name].empty()) out.push_back(l.name);
  }
  return out;
}

}  // namespace cnndse
