#include "cnndse/service.h"

#include <regex>

#include "httplib.h"

#include "cnndse/catalog.h"
#include "cnndse/fire.h"
#include "cnndse/json_io.h"
#include "cnndse/modkit.h"
#include "cnndse/scale.h"

namespace cnndse {

using nlohmann::json;

struct Service::Server {
  httplib::Server http;
};

namespace {

using Query = std::multimap<std::string, std::string>;

Response error(int status, const std::string& message, const std::string& field = {}) {
  json body = {{"error", message}};
  if (!field.empty()) body["field"] = field;
  return {status, body};
}

std::int64_t query_int(const Query& q, const std::string& key, std::int64_t fallback,
                       std::int64_t min) {
  auto it = q.find(key);
  if (it == q.end()) return fallback;
  try {
    std::size_t used = 0;
    const auto n = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    if (n < min) {
      throw ValidationError(key + " must be >= " + std::to_string(min), key);
    }
    return n;
  } catch (const std::logic_error&) {
    throw ValidationError(key + " must be an integer, got '" + it->second + "'", key);
  }
}

bool query_bool(const Query& q, const std::string& key, bool fallback) {
  auto it = q.find(key);
  if (it == q.end()) return fallback;
  if (it->second == "1" || it->second == "true") return true;
  if (it->second == "0" || it->second == "false") return false;
  throw ValidationError(key + " must be true or false", key);
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON body: ") + e.what(), "body");
  }
}

std::int64_t body_int(const json& doc, const char* key, std::int64_t fallback,
                      std::int64_t min) {
  auto it = doc.find(key);
  if (it == doc.end()) return fallback;
  if (!it->is_number_integer() || it->get<std::int64_t>() < min) {
    throw ValidationError(std::string(key) + " must be an integer >= " + std::to_string(min),
                          key);
  }
  return it->get<std::int64_t>();
}

void body_keys(const json& doc, std::initializer_list<const char*> keys) {
  if (!doc.is_object()) throw ValidationError("request body must be a JSON object", "body");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ValidationError("unknown key '" + it.key() + "'", it.key());
  }
}

const json& body_field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    throw ValidationError(std::string("missing required key '") + key + "'", key);
  }
  return *it;
}

}  // namespace

Architecture resolve_architecture(const std::string& name, const Workspace* workspace) {
  if (is_builtin(name)) return builtin(name).architecture;
  if (workspace) {
    if (auto arch = workspace->architecture(name)) return *arch;
  }
  throw NotFoundError("unknown architecture '" + name + "'");
}

Architecture resolve_architecture(const json& ref, const Workspace* workspace,
                                  const std::string& field) {
  if (ref.is_string()) return resolve_architecture(ref.get<std::string>(), workspace);
  if (ref.is_object()) {
    try {
      return architecture_from_json(ref);
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), e.field().empty() ? field : field + "." + e.field());
    }
  }
  throw ValidationError("expected an architecture name or document", field);
}

Service::Service(std::shared_ptr<Workspace> workspace) : workspace_(std::move(workspace)) {}

json Service::analysis(const Architecture& arch, std::int64_t batch,
                       std::int64_t bytes_per_value, bool include_bias) {
  AnalysisOptions options;
  options.batch = batch;
  options.bytes_per_value = bytes_per_value;
  options.include_bias = include_bias;
  return report_json(analyze(arch, options));
}

Response Service::handle(const std::string& method, const std::string& path,
                         const Query& query, const std::string& body) const {
  try {
    return route(method, path, query, body);
  } catch (const ValidationError& e) {
    return error(400, e.what(), e.field());
  } catch (const NotFoundError& e) {
    return error(404, e.what());
  } catch (const json::exception& e) {
    return error(400, e.what());
  } catch (const std::exception& e) {
    return error(500, std::string("internal error: ") + e.what());
  }
}

Response Service::route(const std::string& method, const std::string& path,
                        const Query& query, const std::string& body) const {
  static const std::regex kAnalysis("^/api/architectures/([^/]+)/analysis$");
  static const std::regex kArchitecture("^/api/architectures/([^/]+)$");
  const Workspace* ws = workspace_.get();
  std::smatch m;

  auto save_as = [&](const json& doc, const char* kind, const json& content, json& out) {
    auto it = doc.find("save_as");
    if (it == doc.end()) return;
    if (!ws) throw ValidationError("no workspace configured", "save_as");
    if (!it->is_string()) throw ValidationError("expected a string", "save_as");
    const auto r = const_cast<Workspace*>(ws)->save(kind, it->get<std::string>(), content);
    out["saved"] = {{"name", r.entry.name}, {"hash", r.entry.hash}, {"created", r.created}};
  };

  if (path == "/api/architectures") {
    if (method == "GET") {
      json out = {{"builtin", json::array()}, {"workspace", json::array()}};
      for (const auto& name : builtin_names()) {
        const auto entry = builtin(name);
        out["builtin"].push_back({{"name", name}, {"annotations", entry.annotations}});
      }
      if (ws) {
        for (const auto& e : ws->list("architecture")) {
          out["workspace"].push_back(
              {{"name", e.name}, {"created_at", e.created_at}, {"hash", e.hash}});
        }
      }
      return {200, out};
    }
    if (method == "POST") {
      if (!ws) return error(400, "no workspace configured");
      const auto arch = architecture_from_json(parse_body(body));
      if (is_builtin(arch.name)) {
        throw ValidationError("'" + arch.name + "' is a built-in architecture name", "name");
      }
      const auto r = const_cast<Workspace*>(ws)->save_architecture(arch);
      return {r.created ? 201 : 200,
              {{"name", r.entry.name},
               {"hash", r.entry.hash},
               {"created_at", r.entry.created_at},
               {"created", r.created},
               {"unchanged", r.unchanged}}};
    }
    return error(405, "method not allowed");
  }

  if (std::regex_match(path, m, kAnalysis)) {
    if (method != "GET") return error(405, "method not allowed");
    const auto arch = resolve_architecture(m[1].str(), ws);
    return {200, analysis(arch, query_int(query, "batch", 1, 1),
                          query_int(query, "bytes", 4, 1), query_bool(query, "bias", true))};
  }

  if (std::regex_match(path, m, kArchitecture)) {
    if (method != "GET") return error(405, "method not allowed");
    const std::string name = m[1].str();
    json out = to_json(resolve_architecture(name, ws));
    if (is_builtin(name)) {
      const auto entry = builtin(name);
      out["annotations"] = entry.annotations;
      out["published_shapes"] = entry.published_shapes;
    }
    return {200, out};
  }

  if (path == "/api/diff") {
    if (method != "POST") return error(405, "method not allowed");
    const json doc = parse_body(body);
    body_keys(doc, {"baseline", "mods", "batch", "bytes", "bias", "save_as"});
    const auto base = resolve_architecture(body_field(doc, "baseline"), ws, "baseline");
    const auto& mods_doc = body_field(doc, "mods");
    if (!mods_doc.is_array()) throw ValidationError("expected a list", "mods");
    std::vector<ModSpec> mods;
    for (std::size_t i = 0; i < mods_doc.size(); ++i) {
      mods.push_back(mod_from_json(mods_doc[i], "mods[" + std::to_string(i) + "]"));
    }
    auto applied = cnndse::apply(base, mods);
    applied.architecture.name = base.name + "-modified";
    AnalysisOptions options;
    options.batch = body_int(doc, "batch", 1, 1);
    options.bytes_per_value = body_int(doc, "bytes", 4, 1);
    if (doc.contains("bias")) options.include_bias = doc["bias"].get<bool>();
    auto delta = diff(base, applied.architecture, options);
    delta.rounding_notes = applied.rounding_notes;
    json out = delta_json(delta);
    json mods_out = json::array();
    for (const auto& mod : mods) mods_out.push_back(to_json(mod));
    out["mods"] = mods_out;
    save_as(doc, "delta", out, out);
    return {200, out};
  }

  if (path == "/api/sweep") {
    if (method != "POST") return error(405, "method not allowed");
    const json doc = parse_body(body);
    body_keys(doc, {"meta", "vary", "values", "batch", "bytes", "bias", "save_as"});
    const FireMeta meta =
        doc.contains("meta") ? meta_from_json(doc["meta"], "meta") : FireMeta{};
    const auto& vary_doc = body_field(doc, "vary");
    if (!vary_doc.is_string()) throw ValidationError("expected a string", "vary");
    const auto vary = parse_meta_parameter(vary_doc.get<std::string>());
    const auto& values_doc = body_field(doc, "values");
    if (!values_doc.is_array() || values_doc.empty()) {
      throw ValidationError("expected a non-empty list", "values");
    }
    if (values_doc.size() > 256) throw ValidationError("at most 256 values", "values");
    std::vector<Rational> values;
    for (std::size_t i = 0; i < values_doc.size(); ++i) {
      values.push_back(rational_from_json(values_doc[i], "values[" + std::to_string(i) + "]"));
    }
    AnalysisOptions options;
    options.batch = body_int(doc, "batch", 1, 1);
    options.bytes_per_value = body_int(doc, "bytes", 4, 1);
    if (doc.contains("bias")) options.include_bias = doc["bias"].get<bool>();
    json out = sweep_json(sweep(meta, vary, values, {}, options), vary);
    save_as(doc, "sweep", out, out);
    return {200, out};
  }

  if (path == "/api/scale") {
    if (method != "POST") return error(405, "method not allowed");
    const json doc = parse_body(body);
    body_keys(doc, {"arch", "cluster", "workers", "batch", "plan", "save_as"});
    const auto arch = resolve_architecture(body_field(doc, "arch"), ws, "arch");
    const ClusterSpec cluster =
        doc.contains("cluster") ? cluster_from_json(doc["cluster"]) : ClusterSpec{};
    std::optional<TrainPlan> plan;
    if (doc.contains("plan")) plan = plan_from_json(doc["plan"]);
    const std::int64_t batch = body_int(doc, "batch", plan ? plan->batch : 1024, 1);
    std::vector<std::int64_t> workers = {cluster.workers};
    if (doc.contains("workers")) {
      const auto& w = doc["workers"];
      if (!w.is_array() || w.empty() || w.size() > 4096) {
        throw ValidationError("expected a non-empty list of worker counts", "workers");
      }
      workers.clear();
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (!w[i].is_number_integer() || w[i].get<std::int64_t>() < 1) {
          throw ValidationError("worker counts must be integers >= 1",
                                "workers[" + std::to_string(i) + "]");
        }
        workers.push_back(w[i].get<std::int64_t>());
      }
    }
    const auto report = analyze(arch, 1);
    const auto curve = scaling_curve(report, cluster, workers, batch);
    json out = scale_json(curve, cluster, plan, report);
    save_as(doc, "scale", out, out);
    return {200, out};
  }

  if (path == "/api/count-space") {
    if (method != "GET") return error(405, "method not allowed");
    const auto slots = query_int(query, "slots", 0, 0);
    const auto options = query_int(query, "options", 0, 0);
    if (query.find("slots") == query.end()) throw ValidationError("slots is required", "slots");
    if (query.find("options") == query.end()) {
      throw ValidationError("options is required", "options");
    }
    return {200,
            {{"slots", slots}, {"options", options},
             {"count", count_design_space(slots, options)}}};
  }

  return error(404, "no route for " + method + " " + path);
}

int Service::bind(const std::string& host, int port) {
  server_ = std::make_shared<Server>();
  auto& http = server_->http;
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    Query query(req.params.begin(), req.params.end());
    const auto r = handle(req.method, req.path, query, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  http.Get(".*", dispatch);
  http.Post(".*", dispatch);
  http.Put(".*", dispatch);
  http.Delete(".*", dispatch);
  if (port == 0) return http.bind_to_any_port(host);
  return http.bind_to_port(host, port) ? port : -1;
}

bool Service::serve() {
  if (!server_) return false;
  return server_->http.listen_after_bind();
}

bool Service::serve(const std::string& host, int port) {
  return bind(host, port) >= 0 && serve();
}

void Service::stop() {
  if (server_) server_->http.stop();
}

}  // namespace cnndse
