// SPDX-License-Identifier: Apache-2.0
// eulerbound: experiment runner
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "eulerbound/error.hpp"
#include "eulerbound/experiments.hpp"

namespace fs = std::filesystem;

namespace {

eb::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) eb::fail(eb::ErrorCode::Config, "cannot open config file " + path);
  try {
    return eb::json::parse(in, nullptr, true, true);
  } catch (const eb::json::parse_error& e) {
    eb::fail(eb::ErrorCode::Config, std::string("config parse error: ") + e.what());
  }
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) eb::fail(eb::ErrorCode::Config, "cannot write " + p.string());
  out << body;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupling-based bias and MLMC experiments for Euler schemes"};
  std::string command, config_path, out_dir = ".";
  std::uint64_t seed = 0, replicas = 0;
  bool dump = false, quiet = false;
  std::string names;
  for (const auto& n : eb::experiment_names()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("command", command, "experiment: " + names)->required();
  app.add_option("--config", config_path, "JSON config; missing keys take defaults");
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  auto* rep_opt = app.add_option("--replicas", replicas, "override the replica count");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--dump-config", dump, "print the effective config and exit");
  app.add_flag("-q,--quiet", quiet, "suppress the check summary");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto& all = eb::experiment_names();
    if (std::find(all.begin(), all.end(), command) == all.end()) {
      std::cerr << "unknown command '" << command << "'\n" << app.help();
      return 2;
    }
    eb::json cfg = config_path.empty() ? eb::json::object() : load_config(config_path);
    if (!cfg.is_object()) eb::fail(eb::ErrorCode::Config, "config must be a JSON object");
    if (*seed_opt) cfg["seed"] = seed;
    if (*rep_opt) cfg["replicas"] = replicas;
    if (dump) {
      std::cout << eb::merge_defaults(eb::default_config(command), cfg).dump(2) << '\n';
      return 0;
    }
    const eb::ExperimentOutput res = eb::run_experiment(command, cfg);
    fs::create_directories(out_dir);
    for (const auto& t : res.tables) write_file(fs::path(out_dir) / (command + "." + t.name + ".csv"), eb::to_csv(t));
    write_file(fs::path(out_dir) / (command + ".meta.json"), res.metadata.dump(2) + "\n");
    if (!quiet)
      for (const auto& c : res.checks)
        std::printf("%-4s %-40s value=%.6g se=%.3g bound=%.6g %s\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.value,
                    c.se, c.bound, c.detail.c_str());
    return res.verified() ? 0 : 5;
  } catch (const eb::Error& e) {
    std::cerr << "error[" << eb::error_code_name(e.code()) << "]: " << e.what() << '\n';
    return eb::exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
