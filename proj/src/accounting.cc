#include "cnndse/accounting.h"

#include <unordered_map>

namespace cnndse {

namespace {

std::int64_t windowed_extent(const LayerSpec& layer, std::int64_t in,
                             std::int64_t pad, std::int64_t filter,
                             const char* axis) {
  const std::int64_t padded = in + 2 * pad;
  if (filter > padded) {
    throw ValidationError("layer '" + layer.name + "': filter " + axis + " " +
                          std::to_string(filter) + " exceeds padded input " +
                          std::to_string(padded));
  }
  Rounding mode = layer.rounding;
  if (mode == Rounding::kDefault) {
    mode = layer.kind == LayerKind::kConvolution ? Rounding::kFloor : Rounding::kCeil;
  }
  const std::int64_t span = padded - filter;
  const std::int64_t steps = mode == Rounding::kFloor
                                 ? span / layer.stride
                                 : (span + layer.stride - 1) / layer.stride;
  std::int64_t out = steps + 1;
  // The extra ceil-mode window must start inside the input or its leading padding.
  if (mode == Rounding::kCeil && span % layer.stride != 0 && steps * layer.stride >= in + pad) {
    --out;
  }
  return out;
}

void expect_arity(const LayerSpec& layer, std::span<const TensorShape> inputs,
                  std::size_t n) {
  if (inputs.size() != n) {
    throw ValidationError("layer '" + layer.name + "': expected " +
                          std::to_string(n) + " input shape(s), got " +
                          std::to_string(inputs.size()));
  }
}

}  // namespace

TensorShape propagate_shape(const LayerSpec& layer,
                            std::span<const TensorShape> inputs) {
  switch (layer.kind) {
    case LayerKind::kInput:
      throw ValidationError("layer '" + layer.name +
                            "': input layers take their shape from the architecture");

    case LayerKind::kConvolution:
    case LayerKind::kMaxPool:
    case LayerKind::kAvgPool: {
      expect_arity(layer, inputs, 1);
      const auto& in = inputs[0];
      TensorShape out = in;
      out.height = windowed_extent(layer, in.height, layer.pad_h, layer.filter_h, "height");
      out.width = windowed_extent(layer, in.width, layer.pad_w, layer.filter_w, "width");
      if (layer.kind == LayerKind::kConvolution) {
        if (in.channels % layer.groups != 0) {
          throw ValidationError("layer '" + layer.name + "': " +
                                std::to_string(in.channels) +
                                " input channels not divisible by groups=" +
                                std::to_string(layer.groups));
        }
        out.channels = layer.num_filters;
      }
      return out;
    }

    case LayerKind::kGlobalAvgPool: {
      expect_arity(layer, inputs, 1);
      TensorShape out = inputs[0];
      out.height = out.width = 1;
      return out;
    }

    case LayerKind::kFullyConnected: {
      expect_arity(layer, inputs, 1);
      return TensorShape{inputs[0].batch, layer.num_filters, 1, 1};
    }

    case LayerKind::kConcat: {
      if (inputs.size() < 2) {
        throw ValidationError("layer '" + layer.name + "': concat needs at least 2 inputs");
      }
      TensorShape out = inputs[0];
      out.channels = 0;
      for (const auto& in : inputs) {
        if (in.batch != inputs[0].batch || !in.same_spatial(inputs[0])) {
          throw ValidationError("layer '" + layer.name +
                                "': concat inputs differ in spatial size (" +
                                to_string(inputs[0]) + " vs " + to_string(in) + ")");
        }
        out.channels += in.channels;
      }
      return out;
    }

    case LayerKind::kElementwiseAdd: {
      if (inputs.size() < 2) {
        throw ValidationError("layer '" + layer.name +
                              "': elementwise-add needs at least 2 inputs");
      }
      for (const auto& in : inputs) {
        if (!(in == inputs[0])) {
          throw ValidationError("layer '" + layer.name +
                                "': elementwise-add shape mismatch (" +
                                to_string(inputs[0]) + " vs " + to_string(in) + ")");
        }
      }
      return inputs[0];
    }

    case LayerKind::kRelu:
    case LayerKind::kDropout:
      expect_arity(layer, inputs, 1);
      return inputs[0];
  }
  throw ValidationError("layer '" + layer.name + "': unsupported kind");
}

Count layer_params_bytes(const LayerSpec& layer, const TensorShape& input,
                         std::int64_t bytes_per_value) {
  const Count bpv = static_cast<Count>(bytes_per_value);
  switch (layer.kind) {
    case LayerKind::kConvolution:
      return static_cast<Count>(input.channels / layer.groups) *
             static_cast<Count>(layer.num_filters) *
             static_cast<Count>(layer.filter_h) *
             static_cast<Count>(layer.filter_w) * bpv;
    case LayerKind::kFullyConnected:
      return static_cast<Count>(input.channels) * static_cast<Count>(input.height) *
             static_cast<Count>(input.width) *
             static_cast<Count>(layer.num_filters) * bpv;
    default:
      return 0;
  }
}

Count layer_bias_bytes(const LayerSpec& layer, std::int64_t bytes_per_value) {
  if (!has_filters(layer.kind)) return 0;
  return static_cast<Count>(layer.num_filters) * static_cast<Count>(bytes_per_value);
}

Count layer_forward_flops(const LayerSpec& layer, const TensorShape& input,
                          const TensorShape& out) {
  const Count out_plane = static_cast<Count>(out.batch) *
                          static_cast<Count>(out.height) *
                          static_cast<Count>(out.width);
  switch (layer.kind) {
    case LayerKind::kConvolution:
      return static_cast<Count>(input.channels / layer.groups) *
             static_cast<Count>(layer.num_filters) *
             static_cast<Count>(layer.filter_h) *
             static_cast<Count>(layer.filter_w) * out_plane * 2;
    case LayerKind::kFullyConnected:
      return static_cast<Count>(input.channels) * static_cast<Count>(input.height) *
             static_cast<Count>(input.width) *
             static_cast<Count>(layer.num_filters) *
             static_cast<Count>(out.batch) * 2;
    case LayerKind::kMaxPool:
    case LayerKind::kAvgPool: {
      const Count per_window = static_cast<Count>(layer.filter_h) *
                               static_cast<Count>(layer.filter_w) *
                               (layer.kind == LayerKind::kAvgPool ? 2 : 1);
      return static_cast<Count>(out.channels) * out_plane * per_window;
    }
    case LayerKind::kGlobalAvgPool:
      // One window spanning the whole input plane.
      return static_cast<Count>(out.channels) * static_cast<Count>(out.batch) *
             static_cast<Count>(input.height) * static_cast<Count>(input.width) * 2;
    default:
      return 0;
  }
}

Count layer_activation_bytes(const TensorShape& out, std::int64_t bytes_per_value) {
  return out.elements() * static_cast<Count>(bytes_per_value);
}

const LayerRow* AccountingReport::find(std::string_view name) const {
  for (const auto& r : rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const LayerRow& AccountingReport::row(std::string_view name) const {
  if (const auto* r = find(name)) return *r;
  throw NotFoundError("no row for layer '" + std::string(name) + "'");
}

namespace {

std::vector<TensorShape> gather_inputs(
    const LayerSpec& layer,
    const std::unordered_map<std::string, TensorShape>& shapes) {
  std::vector<TensorShape> in;
  in.reserve(layer.inputs.size());
  for (const auto& name : layer.inputs) in.push_back(shapes.at(name));
  return in;
}

}  // namespace

AccountingReport analyze(const Architecture& arch, const AnalysisOptions& options) {
  if (options.batch < 1) throw ValidationError("batch must be >= 1", "batch");
  if (options.bytes_per_value < 1) {
    throw ValidationError("bytes per value must be >= 1", "bytes");
  }
  validate(arch);

  AccountingReport report;
  report.architecture = arch.name;
  report.options = options;

  std::unordered_map<std::string, TensorShape> shapes;
  for (auto idx : topological_order(arch)) {
    const auto& layer = arch.layers[idx];
    LayerRow row;
    row.name = layer.name;
    row.kind = layer.kind;

    if (layer.kind == LayerKind::kInput) {
      row.output = arch.input_shape;
      row.output.batch = options.batch;
      row.activation_bytes = layer_activation_bytes(row.output, options.bytes_per_value);
    } else {
      auto inputs = gather_inputs(layer, shapes);
      try {
        row.output = propagate_shape(layer, inputs);
      } catch (const ValidationError& e) {
        throw ValidationError(std::string("shape propagation failed at layer '") +
                                  layer.name + "': " + e.what(),
                              "layers." + layer.name);
      }
      const auto& in = inputs.front();
      row.param_bytes = layer_params_bytes(layer, in, options.bytes_per_value);
      if (options.include_bias) {
        row.param_bytes += layer_bias_bytes(layer, options.bytes_per_value);
      }
      row.forward_flops = layer_forward_flops(layer, in, row.output);
      const bool in_place =
          layer.kind == LayerKind::kRelu || layer.kind == LayerKind::kDropout;
      row.activation_bytes =
          in_place ? 0 : layer_activation_bytes(row.output, options.bytes_per_value);
      if (has_filters(layer.kind)) {
        row.data_bytes = layer_activation_bytes(in, options.bytes_per_value);
      }
    }
    shapes[layer.name] = row.output;

    report.totals.param_bytes += row.param_bytes;
    report.totals.activation_bytes += row.activation_bytes;
    report.totals.data_bytes += row.data_bytes;
    report.totals.forward_flops += row.forward_flops;
    report.rows.push_back(std::move(row));
  }
  report.train_flops_per_batch = 3 * report.totals.forward_flops;
  return report;
}

AccountingReport analyze(const Architecture& arch, std::int64_t batch,
                         std::int64_t bytes_per_value) {
  AnalysisOptions options;
  options.batch = batch;
  options.bytes_per_value = bytes_per_value;
  return analyze(arch, options);
}

std::vector<std::pair<std::string, TensorShape>> propagate_all(
    const Architecture& arch, std::int64_t batch) {
  auto report = analyze(arch, batch);
  std::vector<std::pair<std::string, TensorShape>> out;
  out.reserve(report.rows.size());
  for (auto& r : report.rows) out.emplace_back(r.name, r.output);
  return out;
}

Ratio data_weight_ratio(const AccountingReport& report) {
  if (report.totals.param_bytes == 0) {
    throw ValidationError("data/weight ratio undefined: architecture '" +
                          report.architecture + "' has no parameters");
  }
  return Ratio::of(report.totals.data_bytes, report.totals.param_bytes);
}

}  // namespace cnndse
