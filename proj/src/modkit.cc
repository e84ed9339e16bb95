#include "cnndse/modkit.h"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>

namespace cnndse {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_positive(const Rational& factor, const std::string& field) {
  if (factor <= 0) {
    throw ValidationError("factor must be positive, got " + to_string(factor), field);
  }
}

std::int64_t scaled(std::int64_t value, const Rational& factor, const std::string& what,
                    std::vector<std::string>& notes) {
  const Rational exact = Rational(value) * factor;
  const std::int64_t n = exact.numerator();
  const std::int64_t d = exact.denominator();
  const std::int64_t rounded = (2 * n + d) / (2 * d);
  if (rounded < 1) {
    throw ValidationError(what + ": " + std::to_string(value) + " x " + to_string(factor) +
                          " rounds to " + std::to_string(rounded) + ", below 1");
  }
  if (d != 1) {
    notes.push_back(what + ": " + std::to_string(value) + " x " + to_string(factor) +
                    " = " + to_string(exact) + " rounded to " + std::to_string(rounded));
  }
  return rounded;
}

LayerSpec& parametric(Architecture& arch, const std::string& name) {
  auto& l = arch.layer(name);
  if (!has_filters(l.kind)) {
    throw ValidationError("layer '" + name + "' (" + std::string(to_string(l.kind)) +
                              ") has no filters",
                          "layer");
  }
  return l;
}

void apply_one(Architecture& arch, const ModSpec& mod, std::vector<std::string>& notes) {
  std::visit(
      overloaded{
          [&](const ScaleInputChannels& m) {
            require_positive(m.factor, "factor");
            arch.input_shape.channels =
                scaled(arch.input_shape.channels, m.factor, "input channels", notes);
          },
          [&](const ScaleFilters& m) {
            require_positive(m.factor, "factor");
            auto& l = parametric(arch, m.layer);
            const auto filters = scaled(l.num_filters, m.factor, m.layer + " filters", notes);
            if (filters % l.groups != 0) {
              throw ValidationError("layer '" + m.layer + "': " + std::to_string(filters) +
                                        " filters not divisible by groups=" +
                                        std::to_string(l.groups),
                                    "factor");
            }
            l.num_filters = filters;
          },
          [&](const SetFilterSize& m) {
            auto& l = arch.layer(m.layer);
            if (!has_window(l.kind)) {
              throw ValidationError("layer '" + m.layer + "' (" +
                                        std::string(to_string(l.kind)) + ") has no filter window",
                                    "layer");
            }
            if (m.filter_h < 1 || m.filter_w < 1) {
              throw ValidationError("filter size must be >= 1", "filter");
            }
            if (m.pad_h < 0 || m.pad_w < 0) throw ValidationError("pad must be >= 0", "pad");
            l.filter_h = m.filter_h;
            l.filter_w = m.filter_w;
            l.pad_h = m.pad_h;
            l.pad_w = m.pad_w;
          },
          [&](const ScaleCategories& m) {
            require_positive(m.factor, "factor");
            const auto order = topological_order(arch);
            for (auto it = order.rbegin(); it != order.rend(); ++it) {
              auto& l = arch.layers[*it];
              if (has_filters(l.kind)) {
                l.num_filters = scaled(l.num_filters, m.factor, l.name + " categories", notes);
                return;
              }
            }
            throw ValidationError("architecture '" + arch.name + "' has no parametric layer");
          },
          [&](const RemoveLayer& m) {
            const auto& target = arch.layer(m.layer);
            if (target.kind == LayerKind::kInput) {
              throw ValidationError("cannot remove the input layer", "layer");
            }
            if (target.inputs.size() != 1) {
              throw ValidationError("layer '" + m.layer + "' has " +
                                        std::to_string(target.inputs.size()) +
                                        " predecessors; only single-input layers can be removed",
                                    "layer");
            }
            const auto succ = successors(arch);
            auto it = succ.find(m.layer);
            if (it == succ.end() || it->second.empty()) {
              throw ValidationError("cannot remove '" + m.layer + "': it is a final layer",
                                    "layer");
            }
            const std::string upstream = target.inputs[0];
            const std::string name = m.layer;
            std::erase_if(arch.layers, [&](const LayerSpec& l) { return l.name == name; });
            for (auto& l : arch.layers) {
              for (auto& in : l.inputs) {
                if (in == name) in = upstream;
              }
            }
          },
          [&](const ScaleInputResolution& m) {
            require_positive(m.factor_h, "factor_h");
            require_positive(m.factor_w, "factor_w");
            arch.input_shape.height =
                scaled(arch.input_shape.height, m.factor_h, "input height", notes);
            arch.input_shape.width =
                scaled(arch.input_shape.width, m.factor_w, "input width", notes);
          },
      },
      mod);
}

Rational factor_from_json(const json& v, const std::string& field) {
  try {
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
    if (v.is_number_float()) return parse_rational(v.dump());
    if (v.is_string()) return parse_rational(v.get<std::string>());
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), field);
  }
  throw ValidationError("expected a number or a \"p/q\" string", field);
}

json factor_to_json(const Rational& r) {
  if (r.denominator() == 1) return r.numerator();
  return to_string(r);
}

std::string text_field(const json& doc, const char* key, const std::string& where) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    throw ValidationError(std::string("missing required key '") + key + "'",
                          where + "." + key);
  }
  if (!it->is_string()) throw ValidationError("expected a string", where + "." + key);
  return it->get<std::string>();
}

const json& field(const json& doc, const char* key, const std::string& where) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    throw ValidationError(std::string("missing required key '") + key + "'",
                          where + "." + key);
  }
  return *it;
}

std::pair<std::int64_t, std::int64_t> int_pair(const json& v, const std::string& f) {
  auto one = [&](const json& x, const std::string& ff) {
    if (!x.is_number_integer()) throw ValidationError("expected an integer", ff);
    return x.get<std::int64_t>();
  };
  if (v.is_number_integer()) {
    const auto n = one(v, f);
    return {n, n};
  }
  if (!v.is_array() || v.size() != 2) throw ValidationError("expected [h, w]", f);
  return {one(v[0], f + "[0]"), one(v[1], f + "[1]")};
}

void only_keys(const json& doc, std::initializer_list<const char*> keys,
               const std::string& where) {
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(),
                     [&](const char* k) { return it.key() == k; })) {
      throw ValidationError("unknown key '" + it.key() + "'", where + "." + it.key());
    }
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::pair<std::int64_t, std::int64_t> dims(const std::string& text) {
  auto parts = split(text, 'x');
  auto num = [&](const std::string& p) {
    try {
      std::size_t used = 0;
      const auto n = std::stoll(p, &used);
      if (used != p.size()) throw std::invalid_argument(p);
      return static_cast<std::int64_t>(n);
    } catch (const std::exception&) {
      throw ValidationError("bad dimension '" + text + "'", "mod");
    }
  };
  if (parts.size() == 1) return {num(parts[0]), num(parts[0])};
  if (parts.size() == 2) return {num(parts[0]), num(parts[1])};
  throw ValidationError("bad dimension '" + text + "' (expected N or HxW)", "mod");
}

const TensorShape* shape_in(const AccountingReport& r, const std::string& name) {
  const auto* row = r.find(name);
  return row ? &row->output : nullptr;
}

bool is_boundary(const LayerSpec& l) {
  return is_pooling(l.kind) || l.kind == LayerKind::kFullyConnected ||
         (has_window(l.kind) && l.stride > 1);
}

bool is_global_reduction(LayerKind kind) {
  return kind == LayerKind::kGlobalAvgPool || kind == LayerKind::kFullyConnected;
}

}  // namespace

AppliedMod apply(const Architecture& arch, const ModSpec& mod) {
  return cnndse::apply(arch, std::vector<ModSpec>{mod});
}

AppliedMod apply(const Architecture& arch, const std::vector<ModSpec>& mods) {
  AppliedMod out;
  out.architecture = arch;
  for (std::size_t i = 0; i < mods.size(); ++i) {
    try {
      apply_one(out.architecture, mods[i], out.rounding_notes);
    } catch (const ValidationError& e) {
      const std::string prefix = mods.size() > 1 ? "mods[" + std::to_string(i) + "]" : "mod";
      throw ValidationError(describe(mods[i]) + ": " + e.what(),
                            e.field().empty() ? prefix : prefix + "." + e.field());
    } catch (const NotFoundError& e) {
      const std::string where = mods.size() > 1 ? "mods[" + std::to_string(i) + "] " : "";
      throw NotFoundError(where + describe(mods[i]) + ": " + e.what());
    }
  }
  validate(out.architecture);
  try {
    analyze(out.architecture, 1);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("modified architecture is invalid: ") + e.what(),
                          e.field());
  }
  return out;
}

std::string describe(const ModSpec& mod) {
  return std::visit(
      overloaded{
          [](const ScaleInputChannels& m) {
            return "scale input channels x" + to_string(m.factor);
          },
          [](const ScaleFilters& m) {
            return "scale " + m.layer + " filters x" + to_string(m.factor);
          },
          [](const SetFilterSize& m) {
            return "set " + m.layer + " filter " + std::to_string(m.filter_h) + "x" +
                   std::to_string(m.filter_w) + " pad " + std::to_string(m.pad_h) + "x" +
                   std::to_string(m.pad_w);
          },
          [](const ScaleCategories& m) { return "scale categories x" + to_string(m.factor); },
          [](const RemoveLayer& m) { return "remove " + m.layer; },
          [](const ScaleInputResolution& m) {
            return "scale input resolution x" + to_string(m.factor_h) + ",x" +
                   to_string(m.factor_w);
          },
      },
      mod);
}

json to_json(const ModSpec& mod) {
  return std::visit(
      overloaded{
          [](const ScaleInputChannels& m) {
            return json{{"kind", "scale_input_channels"}, {"factor", factor_to_json(m.factor)}};
          },
          [](const ScaleFilters& m) {
            return json{{"kind", "scale_filters"},
                        {"layer", m.layer},
                        {"factor", factor_to_json(m.factor)}};
          },
          [](const SetFilterSize& m) {
            return json{{"kind", "set_filter_size"},
                        {"layer", m.layer},
                        {"filter", {m.filter_h, m.filter_w}},
                        {"pad", {m.pad_h, m.pad_w}}};
          },
          [](const ScaleCategories& m) {
            return json{{"kind", "scale_categories"}, {"factor", factor_to_json(m.factor)}};
          },
          [](const RemoveLayer& m) { return json{{"kind", "remove_layer"}, {"layer", m.layer}}; },
          [](const ScaleInputResolution& m) {
            return json{{"kind", "scale_input_resolution"},
                        {"factor_h", factor_to_json(m.factor_h)},
                        {"factor_w", factor_to_json(m.factor_w)}};
          },
      },
      mod);
}

ModSpec mod_from_json(const json& doc, const std::string& where) {
  if (!doc.is_object()) throw ValidationError("modification must be an object", where);
  const std::string kind = text_field(doc, "kind", where);
  if (kind == "scale_input_channels") {
    only_keys(doc, {"kind", "factor"}, where);
    return ScaleInputChannels{factor_from_json(field(doc, "factor", where), where + ".factor")};
  }
  if (kind == "scale_filters") {
    only_keys(doc, {"kind", "layer", "factor"}, where);
    return ScaleFilters{text_field(doc, "layer", where),
                        factor_from_json(field(doc, "factor", where), where + ".factor")};
  }
  if (kind == "set_filter_size") {
    only_keys(doc, {"kind", "layer", "filter", "pad"}, where);
    SetFilterSize m;
    m.layer = text_field(doc, "layer", where);
    std::tie(m.filter_h, m.filter_w) = int_pair(field(doc, "filter", where), where + ".filter");
    if (doc.contains("pad")) std::tie(m.pad_h, m.pad_w) = int_pair(doc["pad"], where + ".pad");
    return m;
  }
  if (kind == "scale_categories") {
    only_keys(doc, {"kind", "factor"}, where);
    return ScaleCategories{factor_from_json(field(doc, "factor", where), where + ".factor")};
  }
  if (kind == "remove_layer") {
    only_keys(doc, {"kind", "layer"}, where);
    return RemoveLayer{text_field(doc, "layer", where)};
  }
  if (kind == "scale_input_resolution") {
    only_keys(doc, {"kind", "factor", "factor_h", "factor_w"}, where);
    ScaleInputResolution m;
    if (doc.contains("factor")) {
      m.factor_h = m.factor_w = factor_from_json(doc["factor"], where + ".factor");
    }
    if (doc.contains("factor_h")) m.factor_h = factor_from_json(doc["factor_h"], where + ".factor_h");
    if (doc.contains("factor_w")) m.factor_w = factor_from_json(doc["factor_w"], where + ".factor_w");
    if (!doc.contains("factor") && !doc.contains("factor_h") && !doc.contains("factor_w")) {
      throw ValidationError("missing required key 'factor'", where + ".factor");
    }
    return m;
  }
  throw ValidationError("unknown modification kind '" + kind +
                            "' (expected scale_input_channels, scale_filters, "
                            "set_filter_size, scale_categories, remove_layer, "
                            "scale_input_resolution)",
                        where + ".kind");
}

ModSpec parse_mod_inline(const std::string& text) {
  const auto parts = split(text, ':');
  std::string op = parts[0];
  std::replace(op.begin(), op.end(), '_', '-');
  auto need = [&](std::size_t n, const char* usage) {
    if (parts.size() != n || std::any_of(parts.begin(), parts.end(),
                                         [](const std::string& p) { return p.empty(); })) {
      throw ValidationError("malformed modification '" + text + "' (expected " + usage + ")",
                            "mod");
    }
  };
  auto factor = [&](const std::string& s) {
    try {
      return parse_rational(s);
    } catch (const ValidationError& e) {
      throw ValidationError("malformed factor in '" + text + "': " + e.what(), "mod");
    }
  };
  if (op == "remove" || op == "remove-layer") {
    need(2, "remove:LAYER");
    return RemoveLayer{parts[1]};
  }
  if (op == "filters" || op == "scale-filters") {
    need(3, "filters:LAYER:FACTOR");
    return ScaleFilters{parts[1], factor(parts[2])};
  }
  if (op == "categories" || op == "scale-categories") {
    need(2, "categories:FACTOR");
    return ScaleCategories{factor(parts[1])};
  }
  if (op == "input-channels" || op == "channels" || op == "scale-input-channels") {
    need(2, "input-channels:FACTOR");
    return ScaleInputChannels{factor(parts[1])};
  }
  if (op == "resolution" || op == "scale-input-resolution") {
    need(2, "resolution:FACTOR or resolution:FHxFW");
    const auto f = split(parts[1], 'x');
    if (f.size() == 1) return ScaleInputResolution{factor(f[0]), factor(f[0])};
    if (f.size() == 2) return ScaleInputResolution{factor(f[0]), factor(f[1])};
    throw ValidationError("malformed resolution factor in '" + text + "'", "mod");
  }
  if (op == "filter-size" || op == "set-filter-size") {
    if (parts.size() != 3) need(4, "filter-size:LAYER:HxW[:PADHxPADW]");
    if (parts[1].empty()) need(0, "filter-size:LAYER:HxW[:PADHxPADW]");
    SetFilterSize m;
    m.layer = parts[1];
    std::tie(m.filter_h, m.filter_w) = dims(parts[2]);
    if (parts.size() == 4) std::tie(m.pad_h, m.pad_w) = dims(parts[3]);
    return m;
  }
  throw ValidationError("unknown modification '" + parts[0] +
                            "' (expected remove, filters, categories, input-channels, "
                            "resolution, filter-size)",
                        "mod");
}

std::string to_string(ChangeScope scope) {
  return scope == ChangeScope::kLocal ? "local" : "global";
}

const DeltaRow& DeltaReport::row(std::string_view name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw NotFoundError("no delta row for layer '" + std::string(name) + "'");
}

DeltaReport diff(const Architecture& baseline, const Architecture& modified,
                 const AnalysisOptions& options) {
  DeltaReport d;
  d.baseline = analyze(baseline, options);
  d.modified = analyze(modified, options);

  for (const auto& m : d.modified.rows) {
    DeltaRow row;
    row.name = m.name;
    row.kind = m.kind;
    row.modified_output = m.output;
    if (const auto* b = d.baseline.find(m.name)) {
      row.baseline_output = b->output;
      row.shape_changed = !(b->output == m.output);
      row.activation = Ratio::of(m.activation_bytes, b->activation_bytes);
      row.params = Ratio::of(m.param_bytes, b->param_bytes);
      row.flops = Ratio::of(m.forward_flops, b->forward_flops);
    } else {
      row.in_baseline = false;
      row.shape_changed = true;
      row.activation = row.params = row.flops = Ratio{1, 0};
    }
    d.rows.push_back(std::move(row));
  }
  for (const auto& b : d.baseline.rows) {
    if (d.modified.find(b.name)) continue;
    DeltaRow row;
    row.name = b.name;
    row.kind = b.kind;
    row.in_modified = false;
    row.baseline_output = b.output;
    row.shape_changed = true;
    row.activation = Ratio::of(0, b.activation_bytes);
    row.params = Ratio::of(0, b.param_bytes);
    row.flops = Ratio::of(0, b.forward_flops);
    d.rows.push_back(std::move(row));
  }
  const auto& bt = d.baseline.totals;
  const auto& mt = d.modified.totals;
  d.totals.params = Ratio::of(mt.param_bytes, bt.param_bytes);
  d.totals.flops = Ratio::of(mt.forward_flops, bt.forward_flops);
  d.totals.data = Ratio::of(mt.data_bytes, bt.data_bytes);
  d.totals.activation = Ratio::of(mt.activation_bytes, bt.activation_bytes);

  // First affected layer, in the modified architecture's order.
  const auto order = topological_order(modified);
  for (auto idx : order) {
    const auto& l = modified.layers[idx];
    const auto* before = baseline.find(l.name);
    bool affected = before == nullptr || !(*before == l);
    if (!affected) {
      const auto* bs = shape_in(d.baseline, l.name);
      affected = !(*bs == *shape_in(d.modified, l.name));
      for (const auto& in : l.inputs) {
        const auto* a = shape_in(d.baseline, in);
        if (!a || !(*a == *shape_in(d.modified, in))) affected = true;
      }
    }
    if (affected) {
      d.first_affected = l.name;
      break;
    }
  }
  if (d.first_affected.empty()) {
    d.scope = ChangeScope::kLocal;
    d.reason = "architectures are structurally equal";
    return d;
  }

  const auto succ = successors(modified);
  std::set<std::string> hood = {d.first_affected};
  std::deque<std::string> frontier;
  if (auto it = succ.find(d.first_affected); it != succ.end()) {
    for (const auto& s : it->second) {
      if (hood.insert(s).second) frontier.push_back(s);
    }
  }
  while (!frontier.empty()) {
    const auto name = frontier.front();
    frontier.pop_front();
    if (is_boundary(modified.layer(name))) continue;
    if (auto it = succ.find(name); it != succ.end()) {
      for (const auto& s : it->second) {
        if (hood.insert(s).second) frontier.push_back(s);
      }
    }
  }
  for (auto idx : order) {
    if (hood.contains(modified.layers[idx].name)) {
      d.neighborhood.push_back(modified.layers[idx].name);
    }
  }

  d.scope = ChangeScope::kLocal;
  for (const auto& row : d.rows) {
    if (!row.in_baseline || !row.in_modified) continue;
    if (row.shape_changed && !hood.contains(row.name)) {
      d.scope = ChangeScope::kGlobal;
      d.reason = "output of '" + row.name + "' changes from " +
                 to_string(row.baseline_output) + " to " + to_string(row.modified_output) +
                 " outside the neighborhood of '" + d.first_affected + "'";
      return d;
    }
  }
  for (const auto& name : d.neighborhood) {
    const auto& l = modified.layer(name);
    const auto* b = d.baseline.find(name);
    if (!b) continue;
    const auto& m = d.modified.row(name);
    const bool is_sink = !succ.contains(name) || succ.at(name).empty();
    if (is_sink && !b->output.same_spatial(m.output)) {
      d.scope = ChangeScope::kGlobal;
      d.reason = "spatial change reaches network output '" + name + "'";
      return d;
    }
    if (is_global_reduction(l.kind) && l.inputs.size() == 1) {
      const auto* bi = shape_in(d.baseline, l.inputs[0]);
      const auto* mi = shape_in(d.modified, l.inputs[0]);
      if (bi && mi && !bi->same_spatial(*mi)) {
        d.scope = ChangeScope::kGlobal;
        d.reason = "spatial change reaches global reduction '" + name + "'";
        return d;
      }
    }
  }
  d.reason = "shape changes confined to '" + d.first_affected + "' and its neighborhood";
  return d;
}

}  // namespace cnndse
