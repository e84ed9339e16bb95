#include "cnndse/workspace.h"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "cnndse/catalog.h"

namespace cnndse {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kKinds = {"architecture", "delta", "sweep", "scale"};

void check_name(const std::string& name) {
  if (name.empty() || name.size() > 128 || name.front() == '.') {
    throw ValidationError("invalid entry name '" + name + "'", "name");
  }
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    if (!ok) {
      throw ValidationError("invalid entry name '" + name +
                                "' (letters, digits, '-', '_' and '.' only)",
                            "name");
    }
  }
}

void check_kind(const std::string& kind) {
  if (!kKinds.contains(kind)) {
    throw ValidationError("unknown entry kind '" + kind + "'", "kind");
  }
}

std::string now_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw std::runtime_error("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* kHex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

Workspace::Workspace(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_);
}

std::vector<WorkspaceEntry> Workspace::read_index() const {
  const fs::path path = root_ / "index.json";
  if (!fs::exists(path)) return {};
  std::vector<WorkspaceEntry> entries;
  const json doc = json::parse(read_file(path));
  for (const auto& e : doc.at("entries")) {
    entries.push_back({e.at("kind"), e.at("name"), e.at("created_at"), e.at("hash"),
                       e.at("file")});
  }
  return entries;
}

void Workspace::write_index(const std::vector<WorkspaceEntry>& entries) const {
  json doc = {{"entries", json::array()}};
  for (const auto& e : entries) {
    doc["entries"].push_back({{"kind", e.kind},
                              {"name", e.name},
                              {"created_at", e.created_at},
                              {"hash", e.hash},
                              {"file", e.file}});
  }
  write_atomic(root_ / "index.json", doc.dump(2) + "\n");
}

Workspace::SaveResult Workspace::save(const std::string& kind, const std::string& name,
                                      const json& content) {
  check_kind(kind);
  check_name(name);
  const std::string canonical = content.dump(2) + "\n";
  const std::string hash = sha256_hex(canonical);

  std::lock_guard lock(mutex_);
  auto entries = read_index();
  auto it = std::find_if(entries.begin(), entries.end(), [&](const WorkspaceEntry& e) {
    return e.kind == kind && e.name == name;
  });
  SaveResult result;
  if (it != entries.end() && it->hash == hash && fs::exists(root_ / it->file)) {
    result.entry = *it;
    result.unchanged = true;
    return result;
  }
  WorkspaceEntry entry{kind, name, now_utc(), hash, kind + "/" + name + ".json"};
  write_atomic(root_ / entry.file, canonical);
  if (it == entries.end()) {
    result.created = true;
    entries.push_back(entry);
  } else {
    *it = entry;
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::tie(a.kind, a.name) < std::tie(b.kind, b.name);
  });
  write_index(entries);
  result.entry = entry;
  return result;
}

Workspace::SaveResult Workspace::save_architecture(const Architecture& arch) {
  validate(arch);
  return save("architecture", arch.name, to_json(arch));
}

std::vector<WorkspaceEntry> Workspace::list() const {
  std::lock_guard lock(mutex_);
  auto entries = read_index();
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::tie(a.kind, a.name) < std::tie(b.kind, b.name);
  });
  return entries;
}

std::vector<WorkspaceEntry> Workspace::list(const std::string& kind) const {
  auto all = list();
  std::erase_if(all, [&](const WorkspaceEntry& e) { return e.kind != kind; });
  return all;
}

std::optional<json> Workspace::load(const std::string& kind, const std::string& name) const {
  check_kind(kind);
  check_name(name);
  std::lock_guard lock(mutex_);
  const fs::path path = root_ / kind / (name + ".json");
  if (!fs::exists(path)) return std::nullopt;
  return json::parse(read_file(path));
}

std::optional<Architecture> Workspace::architecture(const std::string& name) const {
  auto doc = load("architecture", name);
  if (!doc) return std::nullopt;
  return architecture_from_json(*doc);
}

}  // namespace cnndse
