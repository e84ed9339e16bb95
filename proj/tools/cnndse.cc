#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "cnndse/catalog.h"
#include "cnndse/fire.h"
#include "cnndse/format.h"
#include "cnndse/json_io.h"
#include "cnndse/modkit.h"
#include "cnndse/scale.h"
#include "cnndse/service.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cnndse;

namespace {

std::shared_ptr<Workspace> default_workspace(const std::string& flag) {
  std::string root = flag;
  if (root.empty()) {
    if (const char* env = std::getenv("DSE_WORKSPACE")) root = env;
  }
  if (root.empty()) return nullptr;
  return std::make_shared<Workspace>(root);
}

Architecture load_architecture(const std::string& ref) {
  if (is_builtin(ref)) return builtin(ref).architecture;
  if (fs::is_regular_file(ref)) return load(ref).architecture;
  if (auto ws = default_workspace({})) {
    if (auto arch = ws->architecture(ref)) return *arch;
  }
  throw NotFoundError("unknown architecture '" + ref +
                      "': not a built-in name, a readable file or a workspace entry "
                      "(see `cnndse catalog list`)");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read '" + path + "'", path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what(), path);
  }
}

std::vector<ModSpec> load_mods(const std::vector<std::string>& args) {
  std::vector<ModSpec> mods;
  for (const auto& arg : args) {
    if (!fs::is_regular_file(arg)) {
      mods.push_back(parse_mod_inline(arg));
      continue;
    }
    json doc = read_json_file(arg);
    if (doc.is_object() && doc.contains("mods")) doc = doc["mods"];
    if (doc.is_array()) {
      for (std::size_t i = 0; i < doc.size(); ++i) {
        mods.push_back(mod_from_json(doc[i], "mods[" + std::to_string(i) + "]"));
      }
    } else {
      mods.push_back(mod_from_json(doc));
    }
  }
  return mods;
}

std::string shape_text(const TensorShape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.width);
}

// Left-aligned first columns, right-aligned numeric columns, " | " separated.
void print_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows,
                 std::size_t text_columns) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()));
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto& r = rows[n];
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) line += " | ";
      const std::string pad(width[i] - r[i].size(), ' ');
      line += i < text_columns ? r[i] + pad : pad + r[i];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << "\n";
    if (n == 0) {
      std::string rule;
      for (std::size_t i = 0; i < width.size(); ++i) {
        if (i) rule += "-+-";
        rule += std::string(width[i], '-');
      }
      out << rule << "\n";
    }
  }
}

void print_report_table(const AccountingReport& r) {
  std::vector<std::vector<std::string>> rows = {
      {"layer", "kind", "output", "params", "activations", "flops"}};
  for (const auto& row : r.rows) {
    rows.push_back({row.name, std::string(to_string(row.kind)), shape_text(row.output),
                    format_bytes(row.param_bytes), format_bytes(row.activation_bytes),
                    format_flops(row.forward_flops)});
  }
  rows.push_back({"total", "", "", format_bytes(r.totals.param_bytes),
                  format_bytes(r.totals.data_bytes), format_flops(r.totals.forward_flops)});
  std::cout << r.architecture << "  batch " << r.options.batch << "\n\n";
  print_table(std::cout, rows, 3);
  std::cout << "\nactivation total = bytes read by conv/fc layers (all layer outputs: "
            << format_bytes(r.totals.activation_bytes) << ")\n";
  std::cout << "train flops per batch (fwd+bwd): " << format_flops(r.train_flops_per_batch)
            << "\n";
  if (r.totals.param_bytes > 0) {
    std::cout << "data/weight ratio: " << ratio_decimal(data_weight_ratio(r), 2) << "\n";
  }
}

void print_report_csv(const AccountingReport& r) {
  std::cout << "layer,kind,channels,height,width,param_bytes,activation_bytes,data_bytes,"
               "forward_flops\n";
  for (const auto& row : r.rows) {
    std::cout << row.name << "," << to_string(row.kind) << "," << row.output.channels << ","
              << row.output.height << "," << row.output.width << ","
              << to_string(row.param_bytes) << "," << to_string(row.activation_bytes) << ","
              << to_string(row.data_bytes) << "," << to_string(row.forward_flops) << "\n";
  }
  const auto& t = r.totals;
  std::cout << "total,,,,," << to_string(t.param_bytes) << "," << to_string(t.activation_bytes)
            << "," << to_string(t.data_bytes) << "," << to_string(t.forward_flops) << "\n";
}

void print_delta_table(const DeltaReport& d) {
  std::vector<std::vector<std::string>> rows = {
      {"layer", "baseline", "modified", "Δact", "Δparams", "Δflops"}};
  auto cell = [](const DeltaRow& row, const Ratio& r) {
    if (row.in_baseline && row.in_modified) return format_multiplier(r);
    return std::string(row.in_modified ? "new" : "removed");
  };
  for (const auto& row : d.rows) {
    rows.push_back({row.name + (row.shape_changed ? " *" : ""),
                    row.in_baseline ? shape_text(row.baseline_output) : "-",
                    row.in_modified ? shape_text(row.modified_output) : "-",
                    cell(row, row.activation), cell(row, row.params), cell(row, row.flops)});
  }
  print_table(std::cout, rows, 3);
  const auto& mt = d.modified.totals;
  std::cout << "\ntotal | Δparams " << format_multiplier(d.totals.params) << " ("
            << format_bytes(mt.param_bytes) << ") | Δflops " << format_multiplier(d.totals.flops)
            << " (" << format_flops(mt.forward_flops) << ") | Δactivations "
            << format_multiplier(d.totals.data) << " (" << format_bytes(mt.data_bytes) << ")\n";
  std::cout << "change: " << to_string(d.scope);
  if (!d.first_affected.empty()) std::cout << " (first affected: " << d.first_affected << ")";
  std::cout << "\n";
  if (!d.reason.empty()) std::cout << "reason: " << d.reason << "\n";
  for (const auto& note : d.rounding_notes) std::cout << "note: " << note << "\n";
  std::cout << "* output shape changed\n";
}

std::vector<Rational> parse_values(const std::vector<std::string>& texts) {
  std::vector<Rational> values;
  for (const auto& text : texts) {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) values.push_back(parse_rational(item));
    }
  }
  if (values.empty()) throw ValidationError("no values given", "--values");
  return values;
}

std::vector<std::int64_t> parse_workers(const std::vector<std::string>& texts) {
  std::vector<std::int64_t> workers;
  for (const auto& text : texts) {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      std::size_t used = 0;
      std::int64_t n = 0;
      try {
        n = std::stoll(item, &used);
      } catch (const std::logic_error&) {
        used = 0;
      }
      if (used != item.size() || n < 1) {
        throw ValidationError("worker count '" + item + "' is not a positive integer",
                              "--workers");
      }
      workers.push_back(n);
    }
  }
  if (workers.empty()) throw ValidationError("no worker counts given", "--workers");
  return workers;
}

std::string fixed(double x, int places) {
  std::ostringstream os;
  os << std::setprecision(places) << std::fixed << x;
  return os.str();
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CNN architecture design-space workbench"};
  app.require_subcommand(1);

  auto* catalog = app.add_subcommand("catalog", "Built-in architectures");
  auto* catalog_list = catalog->add_subcommand("list", "List built-in architectures");
  catalog->require_subcommand(1);

  std::string arch_ref;
  std::int64_t batch = 1;
  std::int64_t bytes = 4;
  bool no_bias = false;
  std::string format = "table";
  const std::vector<std::string> formats = {"table", "csv", "json"};

  auto* analyze_cmd = app.add_subcommand("analyze", "Per-layer parameter, activation and FLOP accounting");
  analyze_cmd->add_option("arch", arch_ref, "Built-in name, JSON file or workspace entry")->required();
  analyze_cmd->add_option("--batch", batch, "Batch size")->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--bytes", bytes, "Bytes per value")->check(CLI::PositiveNumber);
  analyze_cmd->add_flag("--no-bias", no_bias, "Exclude bias terms");
  analyze_cmd->add_option("--format", format)->check(CLI::IsMember(formats));

  std::vector<std::string> mod_args;
  std::string save_name;
  auto* diff_cmd = app.add_subcommand("diff", "Apply modifications and compare against the baseline");
  diff_cmd->add_option("arch", arch_ref)->required();
  diff_cmd->add_option("--mod", mod_args, "Inline mod (remove:pool3) or JSON file; repeatable")
      ->required();
  diff_cmd->add_option("--batch", batch)->check(CLI::PositiveNumber);
  diff_cmd->add_option("--bytes", bytes)->check(CLI::PositiveNumber);
  diff_cmd->add_flag("--no-bias", no_bias);
  diff_cmd->add_option("--format", format)->check(CLI::IsMember({"table", "json"}));

  std::string meta_file;
  std::string vary = "sr";
  std::vector<std::string> value_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one Fire metaparameter");
  sweep_cmd->add_option("meta", meta_file, "Metaparameter JSON file, or 'default'")->required();
  sweep_cmd->add_option("--vary", vary, "sr, pct_3x3, base_e, incr_e or freq");
  sweep_cmd->add_option("--values", value_args, "Comma separated; fractions allowed (1/8)")
      ->required();
  sweep_cmd->add_option("--batch", batch)->check(CLI::PositiveNumber);
  sweep_cmd->add_flag("--no-bias", no_bias);
  sweep_cmd->add_option("--format", format)->check(CLI::IsMember(formats));

  std::vector<std::string> worker_args = {"1,2,4,8,16,32,64,128"};
  double bandwidth = 1e9;
  std::string topology = "ps";
  double throughput = 1e12;
  std::string efficiency = "1/5";
  std::int64_t frames = 0;
  std::int64_t epochs = 1;
  std::int64_t scale_batch = 1024;
  auto* scale_cmd = app.add_subcommand("scale", "Data-parallel training cost vs. worker count");
  scale_cmd->add_option("arch", arch_ref)->required();
  scale_cmd->add_option("--workers", worker_args, "Comma separated worker counts");
  scale_cmd->add_option("--bw", bandwidth, "Link bandwidth, bytes/s")->check(CLI::PositiveNumber);
  scale_cmd->add_option("--topology", topology, "ps, tree or tree:B");
  scale_cmd->add_option("--throughput", throughput, "Peak FLOP/s per worker")
      ->check(CLI::PositiveNumber);
  scale_cmd->add_option("--efficiency", efficiency, "Fraction of peak achieved (0.2 or 1/5)");
  scale_cmd->add_option("--batch", scale_batch, "Global batch size")->check(CLI::PositiveNumber);
  scale_cmd->add_option("--frames", frames, "Training set size; enables the epoch estimate")
      ->check(CLI::NonNegativeNumber);
  scale_cmd->add_option("--epochs", epochs)->check(CLI::PositiveNumber);
  scale_cmd->add_option("--format", format)->check(CLI::IsMember(formats));

  std::int64_t slots = 16;
  std::int64_t options = 5;
  auto* count_cmd = app.add_subcommand("count-space", "options^slots, exactly");
  count_cmd->add_option("--slots", slots)->required()->check(CLI::NonNegativeNumber);
  count_cmd->add_option("--options", options)->required()->check(CLI::NonNegativeNumber);

  int port = 8080;
  std::string host = "127.0.0.1";
  std::string workspace_dir;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  serve_cmd->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--workspace", workspace_dir, "Defaults to $DSE_WORKSPACE");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (catalog_list->parsed()) {
      for (const auto& name : builtin_names()) {
        const auto entry = builtin(name);
        const auto r = analyze(entry.architecture, 1);
        std::cout << std::left << std::setw(28) << name << std::right << std::setw(10)
                  << format_bytes(r.totals.param_bytes) << std::setw(10)
                  << format_flops(r.totals.forward_flops) << "  "
                  << entry.architecture.layers.size() << " layers\n";
      }
      return 0;
    }

    if (analyze_cmd->parsed()) {
      const auto arch = load_architecture(arch_ref);
      if (format == "json") {
        std::cout << Service::analysis(arch, batch, bytes, !no_bias).dump(2) << "\n";
        return 0;
      }
      AnalysisOptions opts;
      opts.batch = batch;
      opts.bytes_per_value = bytes;
      opts.include_bias = !no_bias;
      const auto report = analyze(arch, opts);
      if (format == "csv") {
        print_report_csv(report);
      } else {
        print_report_table(report);
      }
      return 0;
    }

    if (diff_cmd->parsed()) {
      const auto base = load_architecture(arch_ref);
      const auto mods = load_mods(mod_args);
      auto applied = cnndse::apply(base, mods);
      applied.architecture.name = base.name + "-modified";
      AnalysisOptions opts;
      opts.batch = batch;
      opts.bytes_per_value = bytes;
      opts.include_bias = !no_bias;
      auto delta = diff(base, applied.architecture, opts);
      delta.rounding_notes = applied.rounding_notes;
      if (format == "json") {
        json out = delta_json(delta);
        json mods_out = json::array();
        for (const auto& mod : mods) mods_out.push_back(to_json(mod));
        out["mods"] = mods_out;
        std::cout << out.dump(2) << "\n";
        return 0;
      }
      for (const auto& mod : mods) std::cout << "mod: " << describe(mod) << "\n";
      std::cout << base.name << "  batch " << batch << "\n\n";
      print_delta_table(delta);
      return 0;
    }

    if (sweep_cmd->parsed()) {
      const FireMeta meta =
          meta_file == "default" ? FireMeta{} : meta_from_json(read_json_file(meta_file));
      const auto parameter = parse_meta_parameter(vary);
      AnalysisOptions opts;
      opts.batch = batch;
      opts.include_bias = !no_bias;
      const auto points = sweep(meta, parameter, parse_values(value_args), {}, opts);
      if (format == "json") {
        std::cout << sweep_json(points, parameter).dump(2) << "\n";
      } else if (format == "csv") {
        std::cout << sweep_csv(points);
      } else {
        std::vector<std::vector<std::string>> rows = {
            {to_string(parameter), "params", "activations", "flops", "notes"}};
        for (const auto& p : points) {
          std::string notes;
          for (const auto& m : p.generated.unsqueezed_modules) {
            notes += (notes.empty() ? "unsqueezed: " : ",") + m;
          }
          rows.push_back({to_string(p.value) + " (" + format_significant(to_double(p.value), 3) + ")",
                          format_bytes(p.report.totals.param_bytes),
                          format_bytes(p.report.totals.data_bytes),
                          format_flops(p.report.totals.forward_flops), notes});
        }
        print_table(std::cout, rows, 1);
      }
      return 0;
    }

    if (scale_cmd->parsed()) {
      const auto arch = load_architecture(arch_ref);
      ClusterSpec cluster;
      cluster.bandwidth = bandwidth;
      cluster.throughput = throughput;
      cluster.efficiency = parse_rational(efficiency);
      set_topology(cluster, topology);
      validate(cluster);
      const auto workers = parse_workers(worker_args);
      const auto report = analyze(arch, 1);
      const auto curve = scaling_curve(report, cluster, workers, scale_batch);
      std::optional<TrainPlan> plan;
      if (frames > 0) plan = TrainPlan{frames, epochs, scale_batch};
      if (format == "json") {
        std::cout << scale_json(curve, cluster, plan, report).dump(2) << "\n";
        return 0;
      }
      if (format == "csv") {
        std::cout << scaling_csv(curve);
        return 0;
      }
      std::cout << arch.name << "  gradients " << format_bytes(report.totals.param_bytes)
                << "  batch " << scale_batch << "  topology " << topology_string(cluster)
                << "\n\n";
      std::vector<std::vector<std::string>> rows = {
          {"workers", "comm s", "compute s", "total s", "speedup", "comp/comm"}};
      for (const auto& p : curve.points) {
        rows.push_back({std::to_string(p.workers) + (p.idle_workers ? " (idle)" : ""),
                        fixed(p.comm_s, 4), fixed(p.compute_s, 4), fixed(p.total_s, 4),
                        fixed(p.speedup, 2),
                        std::isinf(p.comp_comm_ratio) ? "inf" : fixed(p.comp_comm_ratio, 2)});
      }
      print_table(std::cout, rows, 1);
      std::cout << "\nbest worker count: " << curve.best_workers << "\n";
      if (plan) {
        ClusterSpec at_best = cluster;
        at_best.workers = curve.best_workers;
        const auto t = training_time(report, at_best, *plan);
        std::cout << "training at " << curve.best_workers << " workers: "
                  << t.iterations_per_epoch << " iterations/epoch, " << fixed(t.total_s, 1)
                  << " s total, " << total_training_ops(report, *plan).str()
                  << " training ops\n";
      }
      return 0;
    }

    if (count_cmd->parsed()) {
      std::cout << count_design_space(slots, options) << "\n";
      if (slots == 16 && options == 5) {
        std::cout << "note: 5^16 is about 152.6 billion; the frequently cited \"~30 billion\" "
                     "for this space matches 5^15 = "
                  << count_design_space(15, 5) << "\n";
      }
      return 0;
    }

    if (serve_cmd->parsed()) {
      Service service(default_workspace(workspace_dir));
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const int bound = service.bind(host, port);
      if (bound < 0) {
        std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
        return 1;
      }
      std::cerr << "listening on http://" << host << ":" << bound << "\n";
      service.serve();
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what();
    if (!e.field().empty()) std::cerr << " [" << e.field() << "]";
    std::cerr << "\n";
    return 2;
  } catch (const NotFoundError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
