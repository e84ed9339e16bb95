#include "cnndse/catalog.h"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "cnndse/accounting.h"
#include "cnndse/fire.h"

namespace cnndse {

using nlohmann::json;

namespace {

std::string hw(std::int64_t h, std::int64_t w) {
  return std::to_string(h) + "x" + std::to_string(w);
}

CatalogEntry make_nin() {
  CatalogEntry e;
  auto& a = e.architecture;
  a.name = "nin";
  a.input_shape = {1, 3, 227, 227};
  auto& L = a.layers;
  L.push_back(LayerSpec::input("data"));
  L.push_back(LayerSpec::conv("conv1", "data", 96, 11, 4));
  L.push_back(LayerSpec::conv("conv2", "conv1", 96, 1));
  L.push_back(LayerSpec::conv("conv3", "conv2", 96, 1));
  L.push_back(LayerSpec::max_pool("pool3", "conv3", 3, 2));
  L.push_back(LayerSpec::conv("conv4", "pool3", 256, 5, 1, 2));
  L.push_back(LayerSpec::conv("conv5", "conv4", 256, 1));
  L.push_back(LayerSpec::conv("conv6", "conv5", 256, 1));
  L.push_back(LayerSpec::max_pool("pool6", "conv6", 3, 2));
  L.push_back(LayerSpec::conv("conv7", "pool6", 384, 3, 1, 1));
  L.push_back(LayerSpec::conv("conv8", "conv7", 384, 1));
  L.push_back(LayerSpec::conv("conv9", "conv8", 384, 1));
  L.push_back(LayerSpec::max_pool("pool9", "conv9", 3, 2));
  L.push_back(LayerSpec::conv("conv10", "pool9", 1024, 3, 1, 1));
  L.push_back(LayerSpec::conv("conv11", "conv10", 1024, 1));
  L.push_back(LayerSpec::conv("conv12", "conv11", 1000, 1));
  L.push_back(LayerSpec::global_avg_pool("pool12", "conv12"));
  e.published_shapes = {
      {"data", hw(227, 227)}, {"conv1", hw(55, 55)},  {"conv2", hw(55, 55)},
      {"conv3", hw(55, 55)},  {"pool3", hw(27, 27)},  {"conv4", hw(27, 27)},
      {"conv5", hw(27, 27)},  {"conv6", hw(27, 27)},  {"pool6", hw(13, 13)},
      {"conv7", hw(13, 13)},  {"conv8", hw(13, 13)},  {"conv9", hw(13, 13)},
      {"pool9", hw(6, 6)},    {"conv10", hw(6, 6)},   {"conv11", hw(6, 6)},
      {"conv12", hw(6, 6)},   {"pool12", hw(1, 1)},
  };
  e.annotations = {
      {"reported.param_bytes", "30.4MB"},
      {"reported.activation_bytes", "5.90GB"},
      {"reported.forward_flops", "2.27TF"},
      {"reported.data_size", "5800MB"},
      {"reported.weight_size", "30MB"},
      {"reported.data_weight_ratio", "195"},
      {"reported.train_flops", "6.7TF"},
  };
  return e;
}

const std::vector<FireSpec>& squeezenet_modules() {
  static const std::vector<FireSpec> kModules = {
      {16, 64, 64},   {16, 64, 64},   {32, 128, 128}, {32, 128, 128},
      {48, 192, 192}, {48, 192, 192}, {64, 256, 256}, {64, 256, 256},
  };
  return kModules;
}

CatalogEntry make_squeezenet() {
  CatalogEntry e;
  auto& a = e.architecture;
  a.name = "squeezenet";
  a.input_shape = {1, 3, 227, 227};
  auto& L = a.layers;
  L.push_back(LayerSpec::input("data"));
  L.push_back(LayerSpec::conv("conv1", "data", 96, 7, 2));
  L.push_back(LayerSpec::max_pool("maxpool1", "conv1", 3, 2));
  std::string prev = "maxpool1";
  const auto& modules = squeezenet_modules();
  for (std::size_t i = 0; i < modules.size(); ++i) {
    const int n = static_cast<int>(i) + 2;
    prev = append_fire_module(L, "fire" + std::to_string(n), prev, modules[i]);
    e.published_shapes[prev] = n <= 4 ? hw(55, 55) : n <= 8 ? hw(27, 27) : hw(13, 13);
    if (n == 4 || n == 8) {
      const std::string pool = "maxpool" + std::to_string(n);
      L.push_back(LayerSpec::max_pool(pool, prev, 3, 2));
      prev = pool;
    }
  }
  L.push_back(LayerSpec::dropout("drop9", prev));
  L.push_back(LayerSpec::conv("conv10", "drop9", 1000, 1));
  L.push_back(LayerSpec::global_avg_pool("avgpool10", "conv10"));
  e.published_shapes["conv1"] = hw(111, 111);
  e.published_shapes["maxpool1"] = hw(55, 55);
  e.published_shapes["maxpool4"] = hw(27, 27);
  e.published_shapes["maxpool8"] = hw(13, 13);
  e.published_shapes["conv10"] = hw(13, 13);
  e.published_shapes["avgpool10"] = hw(1, 1);
  e.annotations = {
      {"reported.param_bytes", "4.8MB"},
      {"reported.top1", "57.5%"},
      {"reported.top5", "80.3%"},
  };
  return e;
}

CatalogEntry make_squeezenet_bypass(BypassVariant variant) {
  CatalogEntry e = make_squeezenet();
  e.architecture = with_bypass(e.architecture, variant);
  if (variant == BypassVariant::kSimple) {
    e.architecture.name = "squeezenet-simple-bypass";
    e.annotations = {{"reported.param_bytes", "4.8MB"},
                     {"reported.top1", "60.4%"},
                     {"reported.top5", "82.5%"}};
  } else {
    e.architecture.name = "squeezenet-complex-bypass";
    e.annotations = {{"reported.param_bytes", "7.7MB"},
                     {"reported.top1", "58.8%"},
                     {"reported.top5", "82.0%"}};
  }
  return e;
}

CatalogEntry make_alexnet(bool grouped) {
  CatalogEntry e;
  auto& a = e.architecture;
  a.name = grouped ? "alexnet-grouped" : "alexnet";
  a.input_shape = {1, 3, 227, 227};
  const std::int64_t g = grouped ? 2 : 1;
  auto& L = a.layers;
  L.push_back(LayerSpec::input("data"));
  L.push_back(LayerSpec::conv("conv1", "data", 96, 11, 4));
  L.push_back(LayerSpec::max_pool("pool1", "conv1", 3, 2));
  L.push_back(LayerSpec::conv("conv2", "pool1", 256, 5, 1, 2));
  L.back().groups = g;
  L.push_back(LayerSpec::max_pool("pool2", "conv2", 3, 2));
  L.push_back(LayerSpec::conv("conv3", "pool2", 384, 3, 1, 1));
  L.push_back(LayerSpec::conv("conv4", "conv3", 384, 3, 1, 1));
  L.back().groups = g;
  L.push_back(LayerSpec::conv("conv5", "conv4", 256, 3, 1, 1));
  L.back().groups = g;
  L.push_back(LayerSpec::max_pool("pool5", "conv5", 3, 2));
  L.push_back(LayerSpec::fully_connected("fc6", "pool5", 4096));
  L.push_back(LayerSpec::dropout("drop6", "fc6"));
  L.push_back(LayerSpec::fully_connected("fc7", "drop6", 4096));
  L.push_back(LayerSpec::dropout("drop7", "fc7"));
  L.push_back(LayerSpec::fully_connected("fc8", "drop7", 1000));
  e.published_shapes = {{"conv1", hw(55, 55)}, {"pool1", hw(27, 27)},
                        {"conv2", hw(27, 27)}, {"pool2", hw(13, 13)},
                        {"conv5", hw(13, 13)}, {"pool5", hw(6, 6)}};
  e.annotations = {
      {"reported.data_size", "1680MB"},
      {"reported.weight_size", "249MB"},
      {"reported.data_weight_ratio", "10.2"},
      {"reported.train_flops", "7.0TF"},
      {"reported.top1", "57.2%"},
      {"reported.top5", "80.3%"},
  };
  return e;
}

CatalogEntry make_vgg19() {
  CatalogEntry e;
  auto& a = e.architecture;
  a.name = "vgg19";
  a.input_shape = {1, 3, 224, 224};
  auto& L = a.layers;
  L.push_back(LayerSpec::input("data"));
  const std::vector<std::pair<std::int64_t, int>> stages = {
      {64, 2}, {128, 2}, {256, 4}, {512, 4}, {512, 4}};
  std::string prev = "data";
  std::int64_t size = 224;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const std::string stage = std::to_string(s + 1);
    for (int c = 1; c <= stages[s].second; ++c) {
      const std::string name = "conv" + stage + "_" + std::to_string(c);
      L.push_back(LayerSpec::conv(name, prev, stages[s].first, 3, 1, 1));
      e.published_shapes[name] = hw(size, size);
      prev = name;
    }
    const std::string pool = "pool" + stage;
    L.push_back(LayerSpec::max_pool(pool, prev, 2, 2));
    size /= 2;
    e.published_shapes[pool] = hw(size, size);
    prev = pool;
  }
  L.push_back(LayerSpec::fully_connected("fc6", prev, 4096));
  L.push_back(LayerSpec::dropout("drop6", "fc6"));
  L.push_back(LayerSpec::fully_connected("fc7", "drop6", 4096));
  L.push_back(LayerSpec::dropout("drop7", "fc7"));
  L.push_back(LayerSpec::fully_connected("fc8", "drop7", 1000));
  e.annotations = {
      {"reported.data_size", "42700MB"},
      {"reported.weight_size", "575MB"},
      {"reported.data_weight_ratio", "71.7"},
      {"reported.train_flops", "120TF"},
  };
  return e;
}

CatalogEntry make_lenet() {
  CatalogEntry e;
  auto& a = e.architecture;
  a.name = "lenet";
  a.input_shape = {1, 3, 28, 28};
  auto& L = a.layers;
  L.push_back(LayerSpec::input("data"));
  L.push_back(LayerSpec::conv("conv1", "data", 20, 5));
  L.push_back(LayerSpec::max_pool("pool1", "conv1", 2, 2));
  L.push_back(LayerSpec::conv("conv2", "pool1", 50, 5));
  L.push_back(LayerSpec::max_pool("pool2", "conv2", 2, 2));
  L.push_back(LayerSpec::fully_connected("ip1", "pool2", 500));
  L.push_back(LayerSpec::relu("relu1", "ip1"));
  L.push_back(LayerSpec::fully_connected("ip2", "relu1", 10));
  e.published_shapes = {{"conv1", hw(24, 24)}, {"pool1", hw(12, 12)},
                        {"conv2", hw(8, 8)},   {"pool2", hw(4, 4)}};
  e.annotations = {{"reported.forward_flops", "5.74MF"}};
  return e;
}

CatalogEntry make_lenet_224() {
  CatalogEntry e;
  e.architecture = adapt_input_resolution(make_lenet().architecture, 224, 224, "lenet-224");
  e.published_shapes = {{"conv1", hw(220, 220)}, {"pool1", hw(110, 110)},
                        {"conv2", hw(106, 106)}, {"pool2", hw(53, 53)}};
  e.annotations = {{"reported.forward_flops", "2700MF"}};
  return e;
}

const std::vector<std::pair<std::string, std::function<CatalogEntry()>>>& registry() {
  static const std::vector<std::pair<std::string, std::function<CatalogEntry()>>> kAll = {
      {"alexnet", [] { return make_alexnet(false); }},
      {"alexnet-grouped", [] { return make_alexnet(true); }},
      {"lenet", make_lenet},
      {"lenet-224", make_lenet_224},
      {"nin", make_nin},
      {"squeezenet", make_squeezenet},
      {"squeezenet-complex-bypass",
       [] { return make_squeezenet_bypass(BypassVariant::kComplex); }},
      {"squeezenet-simple-bypass",
       [] { return make_squeezenet_bypass(BypassVariant::kSimple); }},
      {"vgg19", make_vgg19},
  };
  return kAll;
}

// ---- JSON ---------------------------------------------------------------

std::string path_of(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.contains(it.key())) {
      throw ValidationError("unknown key '" + it.key() + "'", path_of(where, it.key()));
    }
  }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ValidationError("missing required key '" + key + "'", path_of(where, key));
  }
  return *it;
}

std::int64_t integer(const json& v, const std::string& field, std::int64_t min) {
  if (!v.is_number_integer()) throw ValidationError("expected an integer", field);
  const auto n = v.get<std::int64_t>();
  if (n < min) {
    throw ValidationError("must be >= " + std::to_string(min) + ", got " +
                              std::to_string(n),
                          field);
  }
  return n;
}

std::string text(const json& v, const std::string& field) {
  if (!v.is_string()) throw ValidationError("expected a string", field);
  return v.get<std::string>();
}

std::pair<std::int64_t, std::int64_t> pair_of(const json& v, const std::string& field,
                                              std::int64_t min) {
  if (v.is_number_integer()) {
    const auto n = integer(v, field, min);
    return {n, n};
  }
  if (!v.is_array() || v.size() != 2) {
    throw ValidationError("expected [h, w]", field);
  }
  return {integer(v[0], field + "[0]", min), integer(v[1], field + "[1]", min)};
}

LayerSpec layer_from_json(const json& doc, const std::string& where) {
  if (!doc.is_object()) throw ValidationError("layer must be an object", where);
  reject_unknown(doc, {"name", "kind", "filters", "filter", "stride", "pad", "groups",
                       "rounding", "inputs"},
                 where);
  LayerSpec l;
  l.name = text(require(doc, "name", where), where + ".name");
  try {
    l.kind = parse_layer_kind(text(require(doc, "kind", where), where + ".kind"));
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), e.field().empty() ? where + ".kind" : e.field());
  }
  if (auto it = doc.find("filters"); it != doc.end()) {
    l.num_filters = integer(*it, where + ".filters", 1);
  }
  if (auto it = doc.find("filter"); it != doc.end()) {
    std::tie(l.filter_h, l.filter_w) = pair_of(*it, where + ".filter", 1);
  }
  if (auto it = doc.find("stride"); it != doc.end()) {
    l.stride = integer(*it, where + ".stride", 1);
  }
  if (auto it = doc.find("pad"); it != doc.end()) {
    std::tie(l.pad_h, l.pad_w) = pair_of(*it, where + ".pad", 0);
  }
  if (auto it = doc.find("groups"); it != doc.end()) {
    l.groups = integer(*it, where + ".groups", 1);
  }
  if (auto it = doc.find("rounding"); it != doc.end()) {
    try {
      l.rounding = parse_rounding(text(*it, where + ".rounding"));
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), where + ".rounding");
    }
  }
  if (auto it = doc.find("inputs"); it != doc.end()) {
    if (!it->is_array()) throw ValidationError("expected a list of names", where + ".inputs");
    for (std::size_t i = 0; i < it->size(); ++i) {
      l.inputs.push_back(text((*it)[i], where + ".inputs[" + std::to_string(i) + "]"));
    }
  } else if (l.kind != LayerKind::kInput) {
    throw ValidationError("missing required key 'inputs'", where + ".inputs");
  }
  try {
    validate_layer(l);
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), e.field().empty() ? where : e.field());
  }
  return l;
}

json layer_to_json(const LayerSpec& l) {
  json j;
  j["name"] = l.name;
  j["kind"] = std::string(to_string(l.kind));
  j["inputs"] = l.inputs;
  if (has_filters(l.kind)) j["filters"] = l.num_filters;
  if (has_window(l.kind)) {
    j["filter"] = {l.filter_h, l.filter_w};
    j["stride"] = l.stride;
    j["pad"] = {l.pad_h, l.pad_w};
  }
  if (l.groups != 1) j["groups"] = l.groups;
  if (l.rounding != Rounding::kDefault) j["rounding"] = std::string(to_string(l.rounding));
  return j;
}

std::pair<int, int> line_column(std::string_view text, std::size_t offset) {
  int line = 1, column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // byte is 1-based and points just past the offending character
    const auto [line, column] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    if (auto pos = what.find("parse error"); pos != std::string::npos) {
      what = what.substr(pos);
    }
    throw ValidationError("line " + std::to_string(line) + ", column " +
                          std::to_string(column) + ": " + what);
  }
}

}  // namespace

std::vector<std::string> builtin_names() {
  std::vector<std::string> names;
  for (const auto& [name, make] : registry()) names.push_back(name);
  return names;
}

bool is_builtin(std::string_view name) {
  for (const auto& [n, make] : registry()) {
    if (n == name) return true;
  }
  return false;
}

CatalogEntry builtin(std::string_view name) {
  for (const auto& [n, make] : registry()) {
    if (n == name) return make();
  }
  throw NotFoundError("unknown architecture '" + std::string(name) + "'");
}

std::vector<std::string> self_check(const CatalogEntry& entry) {
  std::vector<std::string> problems;
  const auto report = analyze(entry.architecture, 1);
  for (const auto& [layer, expected] : entry.published_shapes) {
    const auto* row = report.find(layer);
    if (!row) {
      problems.push_back(layer + ": no such layer");
      continue;
    }
    const auto got = hw(row->output.height, row->output.width);
    if (got != expected) {
      problems.push_back(layer + ": expected " + expected + ", got " + got);
    }
  }
  return problems;
}

Architecture adapt_input_resolution(const Architecture& arch, std::int64_t height,
                                    std::int64_t width, std::string new_name) {
  if (height < 1 || width < 1) {
    throw ValidationError("input resolution must be positive", "input");
  }
  const auto report = analyze(arch, 1);
  Architecture out = arch;
  out.name = std::move(new_name);
  out.input_shape.height = height;
  out.input_shape.width = width;
  for (const auto& row : report.rows) {
    if (row.kind != LayerKind::kFullyConnected) continue;
    auto& fc = out.layer(row.name);
    const auto& in = report.row(fc.inputs.at(0)).output;
    const std::string pool = fc.name + "_pool";
    for (auto& l : out.layers) {
      for (auto& name : l.inputs) {
        if (name == fc.name) name = pool;
      }
    }
    fc.kind = LayerKind::kConvolution;
    fc.filter_h = in.height;
    fc.filter_w = in.width;
    auto pos = std::find_if(out.layers.begin(), out.layers.end(),
                            [&](const LayerSpec& l) { return l.name == row.name; });
    out.layers.insert(pos + 1, LayerSpec::global_avg_pool(pool, row.name));
    break;
  }
  analyze(out, 1);
  return out;
}

json to_json(const Architecture& arch) {
  json doc;
  doc["name"] = arch.name;
  doc["input"] = {{"channels", arch.input_shape.channels},
                  {"height", arch.input_shape.height},
                  {"width", arch.input_shape.width}};
  doc["layers"] = json::array();
  for (const auto& l : arch.layers) doc["layers"].push_back(layer_to_json(l));
  doc["metadata"] = json::object();
  for (const auto& [k, v] : arch.metadata) doc["metadata"][k] = v;
  return doc;
}

Architecture architecture_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("architecture must be a JSON object");
  reject_unknown(doc, {"name", "input", "layers", "metadata", "annotations",
                       "published_shapes"},
                 "");
  Architecture arch;
  arch.name = text(require(doc, "name", ""), "name");
  if (arch.name.empty()) throw ValidationError("name must not be empty", "name");

  const auto& input = require(doc, "input", "");
  if (!input.is_object()) throw ValidationError("expected an object", "input");
  reject_unknown(input, {"batch", "channels", "height", "width"}, "input");
  if (auto it = input.find("batch"); it != input.end()) {
    arch.input_shape.batch = integer(*it, "input.batch", 1);
  }
  arch.input_shape.channels = integer(require(input, "channels", "input"), "input.channels", 1);
  arch.input_shape.height = integer(require(input, "height", "input"), "input.height", 1);
  arch.input_shape.width = integer(require(input, "width", "input"), "input.width", 1);

  const auto& layers = require(doc, "layers", "");
  if (!layers.is_array()) throw ValidationError("expected a list", "layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    arch.layers.push_back(layer_from_json(layers[i], "layers[" + std::to_string(i) + "]"));
  }
  if (auto it = doc.find("metadata"); it != doc.end()) {
    if (!it->is_object()) throw ValidationError("expected an object", "metadata");
    for (auto m = it->begin(); m != it->end(); ++m) {
      arch.metadata[m.key()] = text(m.value(), "metadata." + m.key());
    }
  }
  validate(arch);
  analyze(arch, 1);
  return arch;
}

Architecture parse_architecture(std::string_view text) {
  return architecture_from_json(parse_json(text));
}

std::string serialize_architecture(const Architecture& arch) {
  return to_json(arch).dump(2) + "\n";
}

CatalogEntry load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string content = buf.str();
  json doc;
  try {
    doc = parse_json(content);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what(), e.field());
  }
  CatalogEntry entry;
  entry.architecture = architecture_from_json(doc);
  auto read_map = [&](const char* key, std::map<std::string, std::string>& dst) {
    auto it = doc.find(key);
    if (it == doc.end()) return;
    if (!it->is_object()) throw ValidationError("expected an object", key);
    for (auto m = it->begin(); m != it->end(); ++m) {
      dst[m.key()] = text(m.value(), std::string(key) + "." + m.key());
    }
  };
  read_map("annotations", entry.annotations);
  read_map("published_shapes", entry.published_shapes);
  return entry;
}

void save(const CatalogEntry& entry, const std::filesystem::path& path) {
  json doc = to_json(entry.architecture);
  if (!entry.annotations.empty()) doc["annotations"] = entry.annotations;
  if (!entry.published_shapes.empty()) doc["published_shapes"] = entry.published_shapes;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

}  // namespace cnndse
