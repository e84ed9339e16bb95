#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cnndse/architecture.h"
#include "cnndse/types.h"

namespace cnndse {

struct AnalysisOptions {
  std::int64_t batch = 1;
  std::int64_t bytes_per_value = 4;
  // Per-filter bias terms. Table-style per-layer model sizes include them.
  bool include_bias = true;
};

// Output shape of `layer` given the shapes of its inputs (in `layer.inputs`
// order). Throws ValidationError on arity mismatch, a filter larger than the
// padded input, or mismatched concat/add operands.
TensorShape propagate_shape(const LayerSpec& layer,
                            std::span<const TensorShape> inputs);

// Weight bytes only: (in_channels / groups) * num_filters * filter_h *
// filter_w * bytes_per_value. Fully-connected layers use the whole input
// plane as their filter. Zero for every non-parametric kind.
Count layer_params_bytes(const LayerSpec& layer, const TensorShape& input,
                         std::int64_t bytes_per_value);

// num_filters * bytes_per_value for parametric layers, else 0.
Count layer_bias_bytes(const LayerSpec& layer, std::int64_t bytes_per_value);

// Forward FLOPs at out.batch. Multiply-adds count 2; max-pool costs 1 op
// per window element, average pooling 2; activations, dropout, concat and
// add are free.
Count layer_forward_flops(const LayerSpec& layer, const TensorShape& input,
                          const TensorShape& out);

Count layer_activation_bytes(const TensorShape& out, std::int64_t bytes_per_value);

struct LayerRow {
  std::string name;
  LayerKind kind = LayerKind::kInput;
  TensorShape output;
  Count param_bytes = 0;
  // Bytes of this layer's output tensor (0 for in-place relu/dropout).
  Count activation_bytes = 0;
  // Bytes of input data this layer reads against its weights (conv/FC
  // only). Summed over layers this is the |D| of data-parallel analysis.
  Count data_bytes = 0;
  Count forward_flops = 0;
};

struct ReportTotals {
  Count param_bytes = 0;
  Count activation_bytes = 0;
  Count data_bytes = 0;
  Count forward_flops = 0;
  bool operator==(const ReportTotals&) const = default;
};

struct AccountingReport {
  std::string architecture;
  AnalysisOptions options;
  std::vector<LayerRow> rows;  // topological order
  ReportTotals totals;
  Count train_flops_per_batch = 0;  // 3 x forward (forward + backward)

  const LayerRow& row(std::string_view name) const;  // NotFoundError
  const LayerRow* find(std::string_view name) const;
};

// Walks the DAG in topological order. Shape failures are rethrown naming
// the offending layer.
AccountingReport analyze(const Architecture& arch, const AnalysisOptions& options = {});
AccountingReport analyze(const Architecture& arch, std::int64_t batch,
                         std::int64_t bytes_per_value = 4);

// Output shapes only, keyed by layer name (order = topological).
std::vector<std::pair<std::string, TensorShape>> propagate_all(
    const Architecture& arch, std::int64_t batch = 1);

// |D| / |W| at the report's batch. Throws ValidationError if |W| is 0.
Ratio data_weight_ratio(const AccountingReport& report);

}  // namespace cnndse
