#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cnndse/architecture.h"

namespace cnndse {

struct CatalogEntry {
  Architecture architecture;
  // Published figures (accuracy, reported model size). Never computed and
  // never used in any total.
  std::map<std::string, std::string> annotations;
  // layer name -> published output "HxW", checked by self_check().
  std::map<std::string, std::string> published_shapes;
};

std::vector<std::string> builtin_names();
bool is_builtin(std::string_view name);
CatalogEntry builtin(std::string_view name);  // NotFoundError

// Compares propagated output HxW against published_shapes. Returns one
// message per mismatch; empty means the entry reproduces its source.
std::vector<std::string> self_check(const CatalogEntry& entry);

// Reworks a classifier for a different input resolution: the first
// fully-connected layer becomes a convolution whose filter equals its
// original input plane, followed by global average pooling. Later
// fully-connected layers are kept.
Architecture adapt_input_resolution(const Architecture& arch, std::int64_t height,
                                    std::int64_t width, std::string new_name);

// Architecture description format (".cnn.json").
nlohmann::json to_json(const Architecture& arch);
Architecture architecture_from_json(const nlohmann::json& doc);

// Parses and validates. Errors carry line/column for syntax errors and a
// field path for schema or invariant violations.
Architecture parse_architecture(std::string_view text);
std::string serialize_architecture(const Architecture& arch);  // canonical

CatalogEntry load(const std::filesystem::path& path);
void save(const CatalogEntry& entry, const std::filesystem::path& path);

}  // namespace cnndse
