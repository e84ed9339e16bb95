#pragma once

#include <map>
#include <memory>
#include <string>

#include "json.hpp"

#include "cnndse/architecture.h"
#include "cnndse/workspace.h"

namespace cnndse {

struct Response {
  int status = 200;
  nlohmann::json body;
};

// Builtins first, then the workspace. NotFoundError otherwise.
Architecture resolve_architecture(const std::string& name, const Workspace* workspace);
// A name (string) or an inline architecture document (object).
Architecture resolve_architecture(const nlohmann::json& ref, const Workspace* workspace,
                                  const std::string& field);

// Transport-free request handling; the HTTP server and the tests both go
// through handle().
class Service {
 public:
  explicit Service(std::shared_ptr<Workspace> workspace = nullptr);

  Response handle(const std::string& method, const std::string& path,
                  const std::multimap<std::string, std::string>& query,
                  const std::string& body) const;

  // Port 0 picks a free port. Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop(). bind() first, or use the two-argument form.
  bool serve();
  bool serve(const std::string& host, int port);
  void stop();

  // JSON bodies shared with the CLI.
  static nlohmann::json analysis(const Architecture& arch, std::int64_t batch,
                                 std::int64_t bytes_per_value, bool include_bias);

 private:
  Response route(const std::string& method, const std::string& path,
                 const std::multimap<std::string, std::string>& query,
                 const std::string& body) const;

  std::shared_ptr<Workspace> workspace_;
  struct Server;
  std::shared_ptr<Server> server_;
};

}  // namespace cnndse
