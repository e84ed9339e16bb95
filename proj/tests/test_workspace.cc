#include "doctest.h"

#include <filesystem>
#include <thread>

#include "cnndse/catalog.h"
#include "cnndse/workspace.h"

using namespace cnndse;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() /
             ("cnndse_ws_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Architecture named(const std::string& name) {
  auto a = builtin("lenet").architecture;
  a.name = name;
  return a;
}

}  // namespace

TEST_CASE("sha256") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("save, load and idempotent re-save") {
  TempDir dir("basic");
  Workspace ws(dir.path);
  const auto first = ws.save_architecture(named("mine"));
  CHECK(first.created);
  CHECK_FALSE(first.unchanged);
  CHECK(fs::exists(dir.path / "architecture" / "mine.json"));
  CHECK(fs::exists(dir.path / "index.json"));

  const auto again = ws.save_architecture(named("mine"));
  CHECK_FALSE(again.created);
  CHECK(again.unchanged);
  CHECK(again.entry.hash == first.entry.hash);
  CHECK(again.entry.created_at == first.entry.created_at);

  auto changed = named("mine");
  changed.layer("ip1").num_filters = 10;
  const auto third = ws.save_architecture(changed);
  CHECK_FALSE(third.unchanged);
  CHECK(third.entry.hash != first.entry.hash);
  CHECK(ws.list().size() == 1);
  CHECK(ws.architecture("mine")->layer("ip1").num_filters == 10);
  CHECK_FALSE(ws.architecture("other").has_value());
}

TEST_CASE("listing is ordered by kind then name and survives reopening") {
  TempDir dir("order");
  {
    Workspace ws(dir.path);
    for (const char* n : {"zeta", "alpha", "mid"}) ws.save_architecture(named(n));
    ws.save("sweep", "sr", nlohmann::json{{"points", 3}});
  }
  Workspace ws(dir.path);
  const auto all = ws.list();
  REQUIRE(all.size() == 4);
  CHECK(all[0].name == "alpha");
  CHECK(all[1].name == "mid");
  CHECK(all[2].name == "zeta");
  CHECK(all[3].kind == "sweep");
  CHECK(ws.list("architecture").size() == 3);
  CHECK(ws.load("sweep", "sr")->at("points") == 3);
}

TEST_CASE("names and kinds are checked") {
  TempDir dir("names");
  Workspace ws(dir.path);
  for (const char* bad : {"", "../escape", "a/b", ".hidden", "sp ace"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(ws.save("delta", bad, nlohmann::json::object()), ValidationError);
  }
  CHECK_THROWS_AS(ws.save("secrets", "x", nlohmann::json::object()), ValidationError);
  CHECK_THROWS_AS(ws.save("delta", std::string(129, 'a'), nlohmann::json::object()),
                  ValidationError);
}

TEST_CASE("concurrent identical saves leave exactly one entry") {
  TempDir dir("race");
  Workspace ws(dir.path);
  std::vector<std::thread> threads;
  std::atomic<int> created{0};
  for (int i = 0; i < 16; ++i) {
    threads.emplace_back([&] {
      if (ws.save_architecture(named("shared")).created) ++created;
    });
  }
  for (auto& t : threads) t.join();
  CHECK(created == 1);
  CHECK(ws.list().size() == 1);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir.path)) {
    if (e.is_regular_file()) ++files;
  }
  CHECK(files == 2);
}
