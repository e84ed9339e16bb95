#pragma once

#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "cnndse/accounting.h"
#include "cnndse/architecture.h"
#include "cnndse/types.h"

namespace cnndse {

struct ScaleInputChannels {
  Rational factor{1};
};
struct ScaleFilters {
  std::string layer;
  Rational factor{1};
};
struct SetFilterSize {
  std::string layer;
  std::int64_t filter_h = 1;
  std::int64_t filter_w = 1;
  std::int64_t pad_h = 0;
  std::int64_t pad_w = 0;
};
// Rewrites the last parametric layer before the output.
struct ScaleCategories {
  Rational factor{1};
};
// The layer's single predecessor is wired to each of its consumers.
struct RemoveLayer {
  std::string layer;
};
struct ScaleInputResolution {
  Rational factor_h{1};
  Rational factor_w{1};
};

using ModSpec = std::variant<ScaleInputChannels, ScaleFilters, SetFilterSize,
                             ScaleCategories, RemoveLayer, ScaleInputResolution>;

struct AppliedMod {
  Architecture architecture;
  // Set when a scaled dimension was not an integer and got rounded.
  std::vector<std::string> rounding_notes;
};

// Never touches `arch`. Scaled dimensions round half up and must stay >= 1.
AppliedMod apply(const Architecture& arch, const ModSpec& mod);
AppliedMod apply(const Architecture& arch, const std::vector<ModSpec>& mods);

std::string describe(const ModSpec& mod);

// Tagged-union wire format: {"kind":"scale_filters","layer":"conv8","factor":4}.
nlohmann::json to_json(const ModSpec& mod);
ModSpec mod_from_json(const nlohmann::json& doc, const std::string& where = "mod");

// Command-line shorthand:
//   remove:pool3            filters:conv8:4         categories:4
//   input-channels:4        resolution:2 | 2x3      filter-size:conv7:6x6:2x2
ModSpec parse_mod_inline(const std::string& text);

enum class ChangeScope { kLocal, kGlobal };
std::string to_string(ChangeScope scope);

struct DeltaRow {
  std::string name;
  LayerKind kind = LayerKind::kInput;
  bool in_baseline = true;
  bool in_modified = true;
  TensorShape baseline_output;
  TensorShape modified_output;
  bool shape_changed = false;
  // modified / baseline; 0/0 reads as unchanged. Undefined for one-sided rows.
  Ratio activation;
  Ratio params;
  Ratio flops;
};

struct DeltaTotals {
  Ratio params;
  Ratio flops;
  Ratio data;        // |D|, the headline activation figure
  Ratio activation;  // sum of per-layer outputs
};

struct DeltaReport {
  AccountingReport baseline;
  AccountingReport modified;
  std::vector<DeltaRow> rows;  // modified order, then baseline-only rows
  DeltaTotals totals;
  ChangeScope scope = ChangeScope::kLocal;
  // First layer (topological) whose spec, inputs or shapes differ. Empty when
  // the two architectures are structurally equal.
  std::string first_affected;
  std::vector<std::string> neighborhood;
  std::string reason;
  std::vector<std::string> rounding_notes;

  const DeltaRow& row(std::string_view name) const;  // NotFoundError
};

// Structural local/global rule. Let F be the first affected layer. Its
// neighborhood is F, F's consumers, and every layer reachable from them
// without crossing a resolution boundary (pooling, stride > 1,
// fully-connected); the boundary layer itself is included. The change is
// global if a layer outside the neighborhood changes output shape, or if a
// changed spatial size reaches a global reduction or a network output.
DeltaReport diff(const Architecture& baseline, const Architecture& modified,
                 const AnalysisOptions& options = {});

}  // namespace cnndse
