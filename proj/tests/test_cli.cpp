#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "eulerbound/error.hpp"
#include "eulerbound/experiments.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const int rc = std::system((std::string(EULERBOUND_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("eulerbound_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("constants writes one row per ledger entry") {
  const auto out = scratch("constants");
  CHECK(run("constants --out " + out.string()) == 0);
  const std::string csv = slurp(out / "constants.constants.csv");
  CHECK(csv.rfind("name,value\n", 0) == 0);
  CHECK(csv.find("\nh0,") != std::string::npos);
  CHECK(csv.find("nan") == std::string::npos);
  const auto meta = eb::json::parse(slurp(out / "constants.meta.json"));
  CHECK(meta["seed"].get<std::uint64_t>() == 20240611);
  CHECK(meta.contains("config_hash"));
  CHECK(meta.contains("kernel_backend"));
}

TEST_CASE("exit codes") {
  const auto out = scratch("codes");
  CHECK(run("no-such-experiment --out " + out.string()) == 2);
  CHECK(run("constants --config /nonexistent.json --out " + out.string()) == 2);
  fs::create_directories(out);
  std::ofstream(out / "bad.json") << R"({"model":{"kind":"double-well","a":-1}})";
  CHECK(run("constants --config " + (out / "bad.json").string() + " --out " + out.string()) == 2);
  std::ofstream(out / "adm.json") << R"({"h_over_h0":2.0})";
  CHECK(run("contract --config " + (out / "adm.json").string() + " --out " + out.string()) == 3);
}

TEST_CASE("verify-lemmas default grid passes") {
  const auto out = scratch("lemmas");
  CHECK(run("verify-lemmas --out " + out.string()) == 0);
}

TEST_CASE("shipped configs parse and merge") {
  for (const auto& name : eb::experiment_names()) {
    CAPTURE(name);
    const fs::path p = fs::path(EULERBOUND_CONFIG_DIR) / (name + ".json");
    REQUIRE(fs::exists(p));
    const auto cfg = eb::json::parse(slurp(p));
    CHECK(eb::merge_defaults(eb::default_config(name), cfg).is_object());
  }
}

TEST_CASE("seed override and byte-identical reruns") {
  const auto a = scratch("rerun_a"), b = scratch("rerun_b");
  CHECK(run("subsampling --seed 5 --out " + a.string()) == 0);
  CHECK(run("subsampling --seed 5 --out " + b.string()) == 0);
  CHECK(slurp(a / "subsampling.subsampling.csv") == slurp(b / "subsampling.subsampling.csv"));
  CHECK(eb::json::parse(slurp(a / "subsampling.meta.json"))["seed"].get<int>() == 5);
}

TEST_CASE("non-finite cells are rejected") {
  CHECK_THROWS_AS(eb::Table::num(std::nan("")), eb::Error);
}
