#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cnndse/architecture.h"

namespace cnndse {

std::string sha256_hex(std::string_view data);

struct WorkspaceEntry {
  std::string kind;  // architecture, delta, sweep, scale
  std::string name;
  std::string created_at;  // UTC, ISO 8601
  std::string hash;        // sha256 of the canonical JSON content
  std::string file;        // relative to the workspace root
};

// One JSON file per entry under <root>/<kind>/<name>.json plus
// <root>/index.json. Writes go through a single mutex and an atomic rename.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  struct SaveResult {
    WorkspaceEntry entry;
    bool created = false;    // new name
    bool unchanged = false;  // identical content already stored
  };

  SaveResult save(const std::string& kind, const std::string& name,
                  const nlohmann::json& content);
  SaveResult save_architecture(const Architecture& arch);

  // Sorted by (kind, name).
  std::vector<WorkspaceEntry> list() const;
  std::vector<WorkspaceEntry> list(const std::string& kind) const;

  std::optional<nlohmann::json> load(const std::string& kind, const std::string& name) const;
  std::optional<Architecture> architecture(const std::string& name) const;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::vector<WorkspaceEntry> read_index() const;
  void write_index(const std::vector<WorkspaceEntry>& entries) const;

  std::filesystem::path root_;
  mutable std::mutex mutex_;
};

}  // namespace cnndse
