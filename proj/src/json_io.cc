#include "cnndse/json_io.h"

#include <limits>

#include "cnndse/format.h"

namespace cnndse {

using nlohmann::json;

namespace {

void only_keys(const json& doc, std::initializer_list<const char*> keys,
               const std::string& where) {
  if (!doc.is_object()) throw ValidationError("expected an object", where);
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ValidationError("unknown key '" + it.key() + "'", where + "." + it.key());
  }
}

std::int64_t int_field(const json& v, const std::string& field, std::int64_t min) {
  if (!v.is_number_integer()) throw ValidationError("expected an integer", field);
  const auto n = v.get<std::int64_t>();
  if (n < min) throw ValidationError("must be >= " + std::to_string(min), field);
  return n;
}

double positive_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ValidationError("expected a number", field);
  const double x = v.get<double>();
  if (!(x > 0)) throw ValidationError("must be positive", field);
  return x;
}

json multiplier(const Ratio& r) {
  if (!r.defined()) return nullptr;
  return ratio_decimal(r);
}

json row_display(Count params, Count data, Count activations, Count flops) {
  return {{"params", format_bytes(params)},
          {"data", format_bytes(data)},
          {"activations", format_bytes(activations)},
          {"flops", format_flops(flops)}};
}

}  // namespace

json count_json(Count value) {
  if (value <= std::numeric_limits<std::uint64_t>::max()) {
    return static_cast<std::uint64_t>(value);
  }
  return to_string(value);
}

std::string ratio_decimal(const Ratio& r, int places) {
  if (!r.defined()) return "undefined";
  Count scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  const Count scaled = (r.num * scale * 2 + r.den) / (r.den * 2);
  const Count whole = scaled / scale;
  std::string frac = to_string(scaled % scale);
  if (places == 0) return to_string(whole);
  frac.insert(0, places - frac.size(), '0');
  return to_string(whole) + "." + frac;
}

json shape_json(const TensorShape& s) {
  return {{"channels", s.channels}, {"height", s.height}, {"width", s.width}};
}

json report_json(const AccountingReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({
        {"name", row.name},
        {"kind", std::string(to_string(row.kind))},
        {"output", shape_json(row.output)},
        {"param_bytes", count_json(row.param_bytes)},
        {"activation_bytes", count_json(row.activation_bytes)},
        {"data_bytes", count_json(row.data_bytes)},
        {"forward_flops", count_json(row.forward_flops)},
        {"display", row_display(row.param_bytes, row.data_bytes, row.activation_bytes,
                                row.forward_flops)},
    });
  }
  const auto& t = r.totals;
  json out = {
      {"architecture", r.architecture},
      {"batch", r.options.batch},
      {"bytes_per_value", r.options.bytes_per_value},
      {"include_bias", r.options.include_bias},
      {"rows", rows},
      {"totals",
       {{"param_bytes", count_json(t.param_bytes)},
        {"activation_bytes", count_json(t.activation_bytes)},
        {"data_bytes", count_json(t.data_bytes)},
        {"forward_flops", count_json(t.forward_flops)},
        {"display", row_display(t.param_bytes, t.data_bytes, t.activation_bytes,
                                t.forward_flops)}}},
      {"train_flops_per_batch", count_json(r.train_flops_per_batch)},
  };
  if (t.param_bytes > 0) {
    out["data_weight_ratio"] = ratio_decimal(data_weight_ratio(r), 2);
  }
  return out;
}

json delta_json(const DeltaReport& d) {
  json rows = json::array();
  for (const auto& row : d.rows) {
    json j = {
        {"name", row.name},
        {"kind", std::string(to_string(row.kind))},
        {"in_baseline", row.in_baseline},
        {"in_modified", row.in_modified},
        {"shape_changed", row.shape_changed},
        {"activation_multiplier", multiplier(row.activation)},
        {"params_multiplier", multiplier(row.params)},
        {"flops_multiplier", multiplier(row.flops)},
        {"display",
         {{"activations", row.in_baseline && row.in_modified ? format_multiplier(row.activation)
                          : row.in_modified                  ? "new"
                                                             : "removed"},
          {"params", row.in_baseline && row.in_modified ? format_multiplier(row.params)
                     : row.in_modified                  ? "new"
                                                        : "removed"},
          {"flops", row.in_baseline && row.in_modified ? format_multiplier(row.flops)
                    : row.in_modified                  ? "new"
                                                       : "removed"}}},
    };
    if (row.in_baseline) j["baseline_output"] = shape_json(row.baseline_output);
    if (row.in_modified) j["modified_output"] = shape_json(row.modified_output);
    rows.push_back(std::move(j));
  }
  const auto& bt = d.baseline.totals;
  const auto& mt = d.modified.totals;
  return {
      {"baseline", report_json(d.baseline)},
      {"modified", report_json(d.modified)},
      {"rows", rows},
      {"totals",
       {{"params_multiplier", multiplier(d.totals.params)},
        {"flops_multiplier", multiplier(d.totals.flops)},
        {"data_multiplier", multiplier(d.totals.data)},
        {"activation_multiplier", multiplier(d.totals.activation)},
        {"display",
         {{"params", format_multiplier(d.totals.params) + " (" +
                         format_bytes(mt.param_bytes) + ")"},
          {"flops", format_multiplier(d.totals.flops) + " (" +
                        format_flops(mt.forward_flops) + ")"},
          {"data", format_multiplier(d.totals.data) + " (" + format_bytes(mt.data_bytes) +
                       ")"}}},
        {"baseline", {{"param_bytes", count_json(bt.param_bytes)},
                      {"forward_flops", count_json(bt.forward_flops)},
                      {"data_bytes", count_json(bt.data_bytes)}}},
        {"modified", {{"param_bytes", count_json(mt.param_bytes)},
                      {"forward_flops", count_json(mt.forward_flops)},
                      {"data_bytes", count_json(mt.data_bytes)}}}}},
      {"classification", to_string(d.scope)},
      {"first_affected", d.first_affected},
      {"neighborhood", d.neighborhood},
      {"reason", d.reason},
      {"rounding_notes", d.rounding_notes},
  };
}

json sweep_json(const std::vector<SweepPoint>& points, MetaParameter vary) {
  json out = {{"vary", to_string(vary)}, {"points", json::array()}};
  for (const auto& p : points) {
    json modules = json::array();
    for (std::size_t i = 0; i < p.generated.modules.size(); ++i) {
      const auto& m = p.generated.modules[i];
      modules.push_back({{"module", "fire" + std::to_string(i + 2)},
                         {"s1x1", m.s1x1},
                         {"e1x1", m.e1x1},
                         {"e3x3", m.e3x3}});
    }
    const auto& t = p.report.totals;
    out["points"].push_back({
        {"value", to_string(p.value)},
        {"value_decimal", to_double(p.value)},
        {"param_bytes", count_json(t.param_bytes)},
        {"flops", count_json(t.forward_flops)},
        {"activation_bytes", count_json(t.data_bytes)},
        {"display", {{"params", format_bytes(t.param_bytes)},
                     {"flops", format_flops(t.forward_flops)},
                     {"activations", format_bytes(t.data_bytes)}}},
        {"modules", modules},
        {"rounding_notes", p.generated.rounding_notes},
        {"unsqueezed_modules", p.generated.unsqueezed_modules},
    });
  }
  return out;
}

json scale_json(const ScalingCurve& curve, const ClusterSpec& cluster,
                const std::optional<TrainPlan>& plan, const AccountingReport& report) {
  json points = json::array();
  for (const auto& e : curve.points) {
    json ratio = std::isfinite(e.comp_comm_ratio) ? json(e.comp_comm_ratio) : json(nullptr);
    points.push_back({{"workers", e.workers},
                      {"batch", e.batch},
                      {"comm_bytes", count_json(e.comm_bytes)},
                      {"train_flops", count_json(e.train_flops)},
                      {"comm_s", e.comm_s},
                      {"compute_s", e.compute_s},
                      {"total_s", e.total_s},
                      {"speedup", e.speedup},
                      {"comp_comm_ratio", ratio},
                      {"idle_workers", e.idle_workers}});
  }
  json out = {
      {"architecture", report.architecture},
      {"grad_bytes", count_json(report.totals.param_bytes)},
      {"cluster",
       {{"bandwidth", cluster.bandwidth},
        {"topology", topology_string(cluster)},
        {"throughput", cluster.throughput},
        {"efficiency", to_string(cluster.efficiency)}}},
      {"points", points},
      {"best_workers", curve.best_workers},
  };
  if (plan) {
    ClusterSpec c = cluster;
    c.workers = curve.best_workers;
    const auto t = training_time(report, c, *plan);
    out["plan"] = {{"dataset_frames", plan->dataset_frames},
                   {"epochs", plan->epochs},
                   {"batch", plan->batch},
                   {"workers", c.workers},
                   {"iterations_per_epoch", t.iterations_per_epoch},
                   {"total_iterations", t.total_iterations},
                   {"comm_per_epoch_s", t.comm_per_epoch_s},
                   {"compute_per_epoch_s", t.compute_per_epoch_s},
                   {"total_s", t.total_s},
                   {"total_training_ops", total_training_ops(report, *plan).str()}};
  }
  return out;
}

Rational rational_from_json(const json& v, const std::string& field) {
  try {
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
    if (v.is_number_float()) return parse_rational(v.dump());
    if (v.is_string()) return parse_rational(v.get<std::string>());
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), field);
  }
  throw ValidationError("expected a number or a \"p/q\" string", field);
}

FireMeta meta_from_json(const json& doc, const std::string& where) {
  only_keys(doc, {"base_e", "incr_e", "freq", "pct_3x3", "sr", "num_modules"}, where);
  FireMeta m;
  if (doc.contains("base_e")) m.base_e = int_field(doc["base_e"], where + ".base_e", 1);
  if (doc.contains("incr_e")) m.incr_e = int_field(doc["incr_e"], where + ".incr_e", 0);
  if (doc.contains("freq")) m.freq = int_field(doc["freq"], where + ".freq", 1);
  if (doc.contains("pct_3x3")) m.pct_3x3 = rational_from_json(doc["pct_3x3"], where + ".pct_3x3");
  if (doc.contains("sr")) m.sr = rational_from_json(doc["sr"], where + ".sr");
  if (doc.contains("num_modules")) {
    m.num_modules = int_field(doc["num_modules"], where + ".num_modules", 1);
  }
  try {
    validate(m);
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), where + "." + e.field());
  }
  return m;
}

ClusterSpec cluster_from_json(const json& doc, const std::string& where) {
  only_keys(doc, {"workers", "bandwidth", "topology", "throughput", "efficiency"}, where);
  ClusterSpec c;
  if (doc.contains("workers")) c.workers = int_field(doc["workers"], where + ".workers", 1);
  if (doc.contains("bandwidth")) c.bandwidth = positive_number(doc["bandwidth"], where + ".bandwidth");
  if (doc.contains("throughput")) {
    c.throughput = positive_number(doc["throughput"], where + ".throughput");
  }
  if (doc.contains("efficiency")) {
    c.efficiency = rational_from_json(doc["efficiency"], where + ".efficiency");
  }
  if (doc.contains("topology")) {
    if (!doc["topology"].is_string()) {
      throw ValidationError("expected a string", where + ".topology");
    }
    try {
      set_topology(c, doc["topology"].get<std::string>());
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), where + ".topology");
    }
  }
  try {
    validate(c);
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), where + "." + e.field());
  }
  return c;
}

TrainPlan plan_from_json(const json& doc, const std::string& where) {
  only_keys(doc, {"dataset_frames", "epochs", "batch"}, where);
  TrainPlan p;
  if (doc.contains("dataset_frames")) {
    p.dataset_frames = int_field(doc["dataset_frames"], where + ".dataset_frames", 1);
  }
  if (doc.contains("epochs")) p.epochs = int_field(doc["epochs"], where + ".epochs", 1);
  if (doc.contains("batch")) p.batch = int_field(doc["batch"], where + ".batch", 1);
  return p;
}

}  // namespace cnndse
