#include "cnndse/fire.h"

#include <algorithm>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

namespace cnndse {

namespace {

std::int64_t round_half_up(const Rational& r) {
  // floor(r + 1/2) for r >= 0
  const auto n = r.numerator();
  const auto d = r.denominator();
  return (2 * n + d) / (2 * d);
}

std::string decimal(const Rational& r) {
  auto d = r.denominator();
  int twos = 0, fives = 0;
  while (d % 2 == 0) { d /= 2; ++twos; }
  while (d % 5 == 0) { d /= 5; ++fives; }
  if (d != 1) return to_string(r);
  const int places = std::max(twos, fives);
  if (places == 0) return std::to_string(r.numerator());
  std::int64_t scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  const auto scaled = r.numerator() * (scale / r.denominator());
  std::string digits = std::to_string(scaled < 0 ? -scaled : scaled);
  if (static_cast<int>(digits.size()) <= places) {
    digits.insert(0, places + 1 - digits.size(), '0');
  }
  digits.insert(digits.size() - places, ".");
  return (scaled < 0 ? "-" : "") + digits;
}

std::int64_t as_integer(const Rational& value, const char* field) {
  if (value.denominator() != 1) {
    throw ValidationError(std::string(field) + " must be an integer, got " +
                              to_string(value),
                          field);
  }
  return value.numerator();
}

}  // namespace

std::string append_fire_module(std::vector<LayerSpec>& layers,
                               const std::string& module,
                               const std::string& input, const FireSpec& spec) {
  if (spec.s1x1 < 1) {
    throw ValidationError(module + ": squeeze1x1 must have at least one filter",
                          module + ".s1x1");
  }
  if (spec.e1x1 < 0 || spec.e3x3 < 0 || spec.expand() < 1) {
    throw ValidationError(module + ": expand layers need at least one filter",
                          module + ".expand");
  }
  if (spec.s1x1 > spec.expand()) {
    throw ValidationError(module + ": s1x1=" + std::to_string(spec.s1x1) +
                              " exceeds e1x1+e3x3=" + std::to_string(spec.expand()),
                          module + ".s1x1");
  }
  const std::string squeeze = module + "/squeeze1x1";
  layers.push_back(LayerSpec::conv(squeeze, input, spec.s1x1, 1));
  std::vector<std::string> branches;
  if (spec.e1x1 > 0) {
    branches.push_back(module + "/expand1x1");
    layers.push_back(LayerSpec::conv(branches.back(), squeeze, spec.e1x1, 1));
  }
  if (spec.e3x3 > 0) {
    branches.push_back(module + "/expand3x3");
    layers.push_back(LayerSpec::conv(branches.back(), squeeze, spec.e3x3, 3, 1, 1));
  }
  if (branches.size() == 1) return branches.front();
  layers.push_back(LayerSpec::concat(module + "/concat", branches));
  return module + "/concat";
}

FireSpec FireMeta::module(std::int64_t i) const {
  const std::int64_t e = base_e + incr_e * (i / freq);
  FireSpec spec;
  spec.e3x3 = round_half_up(Rational(e) * pct_3x3);
  spec.e1x1 = e - spec.e3x3;
  spec.s1x1 = round_half_up(Rational(e) * sr);
  return spec;
}

void validate(const FireMeta& meta) {
  if (meta.base_e < 1) throw ValidationError("base_e must be >= 1", "base_e");
  if (meta.incr_e < 0) throw ValidationError("incr_e must be >= 0", "incr_e");
  if (meta.freq < 1) throw ValidationError("freq must be >= 1", "freq");
  if (meta.pct_3x3 < 0 || meta.pct_3x3 > 1) {
    throw ValidationError("pct_3x3 must lie in [0, 1]", "pct_3x3");
  }
  if (meta.sr <= 0 || meta.sr > 1) {
    throw ValidationError("sr must lie in (0, 1]", "sr");
  }
  if (meta.num_modules < 1) {
    throw ValidationError("num_modules must be >= 1", "num_modules");
  }
}

GeneratedArchitecture generate(const FireMeta& meta, const HeadTail& ht) {
  validate(meta);
  if (ht.num_categories < 1) {
    throw ValidationError("num_categories must be >= 1", "num_categories");
  }
  GeneratedArchitecture out;
  auto& arch = out.architecture;
  arch.name = "squeezenet-generated";
  arch.input_shape = TensorShape{1, ht.input_channels, ht.input_height, ht.input_width};
  arch.metadata["base_e"] = std::to_string(meta.base_e);
  arch.metadata["incr_e"] = std::to_string(meta.incr_e);
  arch.metadata["freq"] = std::to_string(meta.freq);
  arch.metadata["pct_3x3"] = to_string(meta.pct_3x3);
  arch.metadata["sr"] = to_string(meta.sr);
  arch.metadata["num_modules"] = std::to_string(meta.num_modules);

  auto& layers = arch.layers;
  layers.push_back(LayerSpec::input("data"));
  layers.push_back(LayerSpec::conv("conv1", "data", ht.conv1_filters, ht.conv1_kernel,
                                   ht.conv1_stride));
  layers.push_back(LayerSpec::max_pool("maxpool1", "conv1", 3, 2));
  std::string prev = "maxpool1";

  const std::set<std::int64_t> pools(ht.pool_after.begin(), ht.pool_after.end());
  for (std::int64_t i = 0; i < meta.num_modules; ++i) {
    const std::string module = "fire" + std::to_string(i + 2);
    const FireSpec spec = meta.module(i);
    const std::int64_t e = spec.expand();
    if (spec.s1x1 == 0) {
      throw ValidationError(module + ": squeeze ratio " + to_string(meta.sr) +
                                " leaves 0 squeeze filters for e=" + std::to_string(e),
                            "sr");
    }
    if (Rational(e) * meta.pct_3x3 != Rational(spec.e3x3) ||
        Rational(e) * meta.sr != Rational(spec.s1x1)) {
      std::ostringstream note;
      note << module << ": e=" << e << " rounded to s1x1=" << spec.s1x1
           << " e1x1=" << spec.e1x1 << " e3x3=" << spec.e3x3;
      out.rounding_notes.push_back(note.str());
    }
    if (spec.s1x1 == e) out.unsqueezed_modules.push_back(module);
    prev = append_fire_module(layers, module, prev, spec);
    out.modules.push_back(spec);
    if (pools.contains(i)) {
      const std::string pool = "maxpool" + std::to_string(i + 2);
      layers.push_back(LayerSpec::max_pool(pool, prev, 3, 2));
      prev = pool;
    }
  }
  const std::string tail = std::to_string(meta.num_modules + 2);
  if (ht.dropout) {
    const std::string drop = "drop" + std::to_string(meta.num_modules + 1);
    layers.push_back(LayerSpec::dropout(drop, prev));
    prev = drop;
  }
  layers.push_back(LayerSpec::conv("conv" + tail, prev, ht.num_categories, 1));
  layers.push_back(LayerSpec::global_avg_pool("avgpool" + tail, "conv" + tail));
  validate(arch);
  return out;
}

MetaParameter parse_meta_parameter(const std::string& name) {
  static const std::map<std::string, MetaParameter> kNames = {
      {"base_e", MetaParameter::kBaseE},   {"incr_e", MetaParameter::kIncrE},
      {"freq", MetaParameter::kFreq},      {"pct_3x3", MetaParameter::kPct3x3},
      {"pct", MetaParameter::kPct3x3},     {"sr", MetaParameter::kSr},
      {"num_modules", MetaParameter::kNumModules},
  };
  auto it = kNames.find(name);
  if (it == kNames.end()) {
    throw ValidationError("unknown metaparameter '" + name +
                              "' (expected base_e, incr_e, freq, pct_3x3, sr, num_modules)",
                          "vary");
  }
  return it->second;
}

std::string to_string(MetaParameter parameter) {
  switch (parameter) {
    case MetaParameter::kBaseE: return "base_e";
    case MetaParameter::kIncrE: return "incr_e";
    case MetaParameter::kFreq: return "freq";
    case MetaParameter::kPct3x3: return "pct_3x3";
    case MetaParameter::kSr: return "sr";
    case MetaParameter::kNumModules: return "num_modules";
  }
  return "?";
}

std::vector<SweepPoint> sweep(const FireMeta& meta_template, MetaParameter vary,
                              const std::vector<Rational>& values,
                              const HeadTail& head_tail,
                              const AnalysisOptions& options) {
  if (values.empty()) throw ValidationError("sweep needs at least one value", "values");
  std::vector<FireMeta> metas;
  for (const auto& v : values) {
    FireMeta m = meta_template;
    switch (vary) {
      case MetaParameter::kBaseE: m.base_e = as_integer(v, "base_e"); break;
      case MetaParameter::kIncrE: m.incr_e = as_integer(v, "incr_e"); break;
      case MetaParameter::kFreq: m.freq = as_integer(v, "freq"); break;
      case MetaParameter::kPct3x3: m.pct_3x3 = v; break;
      case MetaParameter::kSr: m.sr = v; break;
      case MetaParameter::kNumModules: m.num_modules = as_integer(v, "num_modules"); break;
    }
    validate(m);
    metas.push_back(m);
  }

  std::vector<std::future<SweepPoint>> jobs;
  for (std::size_t i = 0; i < metas.size(); ++i) {
    jobs.push_back(std::async(std::launch::async, [&, i] {
      SweepPoint p;
      p.value = values[i];
      p.generated = generate(metas[i], head_tail);
      p.report = analyze(p.generated.architecture, options);
      return p;
    }));
  }
  std::vector<SweepPoint> points;
  for (auto& j : jobs) points.push_back(j.get());
  return points;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::string out = "value,param_bytes,flops,activation_bytes\n";
  for (const auto& p : points) {
    out += decimal(p.value) + "," + to_string(p.report.totals.param_bytes) + "," +
           to_string(p.report.totals.forward_flops) + "," +
           to_string(p.report.totals.data_bytes) + "\n";
  }
  return out;
}

BypassVariant parse_bypass_variant(const std::string& text) {
  if (text == "vanilla" || text == "none") return BypassVariant::kVanilla;
  if (text == "simple") return BypassVariant::kSimple;
  if (text == "complex") return BypassVariant::kComplex;
  throw ValidationError("unknown bypass variant '" + text +
                            "' (expected vanilla, simple, complex)",
                        "variant");
}

std::string to_string(BypassVariant variant) {
  switch (variant) {
    case BypassVariant::kVanilla: return "vanilla";
    case BypassVariant::kSimple: return "simple";
    case BypassVariant::kComplex: return "complex";
  }
  return "?";
}

std::vector<FireModuleView> find_fire_modules(const Architecture& arch) {
  validate(arch);
  const auto succ = successors(arch);
  const auto report = analyze(arch, 1);
  auto is_1x1 = [](const LayerSpec& l) {
    return l.kind == LayerKind::kConvolution && l.filter_h == 1 && l.filter_w == 1 &&
           l.stride == 1 && l.groups == 1;
  };
  auto is_expand = [&](const LayerSpec& l) {
    if (l.kind != LayerKind::kConvolution || l.stride != 1 || l.groups != 1) return false;
    return (l.filter_h == 1 && l.filter_w == 1 && l.pad_h == 0 && l.pad_w == 0) ||
           (l.filter_h == 3 && l.filter_w == 3 && l.pad_h == 1 && l.pad_w == 1);
  };

  std::vector<FireModuleView> found;
  for (auto idx : topological_order(arch)) {
    const auto& sq = arch.layers[idx];
    if (!is_1x1(sq)) continue;
    auto it = succ.find(sq.name);
    if (it == succ.end() || it->second.empty()) continue;
    std::vector<std::string> expands;
    bool ok = true;
    for (const auto& s : it->second) {
      const auto& l = arch.layer(s);
      if (!is_expand(l) || l.inputs.size() != 1) { ok = false; break; }
      expands.push_back(s);
    }
    if (!ok || expands.size() > 2) continue;
    std::string output;
    if (expands.size() == 2) {
      auto c0 = succ.find(expands[0]);
      auto c1 = succ.find(expands[1]);
      if (c0 == succ.end() || c1 == succ.end() || c0->second.size() != 1 ||
          c1->second.size() != 1 || c0->second[0] != c1->second[0]) {
        continue;
      }
      const auto& cat = arch.layer(c0->second[0]);
      if (cat.kind != LayerKind::kConcat || cat.inputs.size() != 2) continue;
      output = cat.name;
    } else {
      // A single expand only counts when named as part of a Fire module.
      if (sq.name.find('/') == std::string::npos) continue;
      output = expands[0];
    }
    FireModuleView view;
    view.squeeze = sq.name;
    const auto slash = sq.name.find('/');
    view.name = slash == std::string::npos ? sq.name : sq.name.substr(0, slash);
    view.input = sq.inputs.at(0);
    view.output = output;
    view.input_shape = report.row(view.input).output;
    view.output_shape = report.row(view.output).output;
    found.push_back(std::move(view));
  }
  return found;
}

Architecture with_bypass(const Architecture& arch, BypassVariant variant,
                         const BypassOptions& options) {
  if (variant == BypassVariant::kVanilla) return arch;
  const auto modules = find_fire_modules(arch);
  if (modules.empty()) {
    throw ValidationError("architecture '" + arch.name + "' has no Fire modules");
  }
  std::map<std::string, const FireModuleView*> by_name;
  for (const auto& m : modules) by_name[m.name] = &m;
  auto lookup = [&](const std::string& name, const char* field) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw ValidationError("no Fire module named '" + name + "'", field);
    }
    return it->second;
  };
  auto matches = [](const FireModuleView& m) {
    return m.input_shape == m.output_shape;
  };

  std::vector<const FireModuleView*> simple, complex;
  if (options.simple.empty()) {
    for (const auto& m : modules) {
      if (matches(m)) simple.push_back(&m);
    }
  } else {
    for (const auto& name : options.simple) {
      const auto* m = lookup(name, "simple");
      if (!matches(*m)) {
        throw ValidationError(
            "simple bypass around '" + name + "' needs matching shapes, got " +
                to_string(m->input_shape) + " in and " + to_string(m->output_shape) +
                " out",
            "simple");
      }
      simple.push_back(m);
    }
  }
  if (variant == BypassVariant::kComplex) {
    std::set<std::string> taken;
    for (const auto* m : simple) taken.insert(m->name);
    if (options.complex.empty()) {
      for (const auto& m : modules) {
        if (!taken.contains(m.name)) complex.push_back(&m);
      }
    } else {
      for (const auto& name : options.complex) {
        const auto* m = lookup(name, "complex");
        if (taken.contains(name)) {
          throw ValidationError("module '" + name + "' given both bypass kinds", "complex");
        }
        if (!m->input_shape.same_spatial(m->output_shape)) {
          throw ValidationError("complex bypass around '" + name +
                                    "' needs matching spatial size",
                                "complex");
        }
        complex.push_back(m);
      }
    }
  }

  Architecture out = arch;
  auto insert_bypass = [&](const FireModuleView& m, bool with_conv) {
    const std::string add = m.name + "/bypass";
    if (out.find(add)) {
      throw ValidationError("module '" + m.name + "' already has a bypass");
    }
    for (auto& l : out.layers) {
      for (auto& in : l.inputs) {
        if (in == m.output) in = add;
      }
    }
    auto pos = std::find_if(out.layers.begin(), out.layers.end(),
                            [&](const LayerSpec& l) { return l.name == m.output; });
    std::vector<LayerSpec> extra;
    std::string shortcut = out.layer(m.squeeze).inputs.at(0);
    if (with_conv) {
      extra.push_back(LayerSpec::conv(m.name + "/bypass1x1", shortcut,
                                      m.output_shape.channels, 1));
      shortcut = m.name + "/bypass1x1";
    }
    extra.push_back(LayerSpec::add(add, {m.output, shortcut}));
    out.layers.insert(pos + 1, extra.begin(), extra.end());
  };
  std::set<std::string> convs;
  for (const auto* m : complex) convs.insert(m->name);
  std::set<std::string> chosen = convs;
  for (const auto* m : simple) chosen.insert(m->name);
  for (const auto& m : modules) {
    if (chosen.contains(m.name)) insert_bypass(m, convs.contains(m.name));
  }
  out.metadata["bypass"] = to_string(variant);
  validate(out);
  return out;
}

std::string count_design_space(std::int64_t num_slots, std::int64_t options_per_slot) {
  if (num_slots < 0) throw ValidationError("slots must be >= 0", "slots");
  if (options_per_slot < 0) throw ValidationError("options must be >= 0", "options");
  if (num_slots > 100000) throw ValidationError("slots must be <= 100000", "slots");
  using boost::multiprecision::cpp_int;
  const cpp_int count =
      boost::multiprecision::pow(cpp_int(options_per_slot), static_cast<unsigned>(num_slots));
  return count.str();
}

}  // namespace cnndse
