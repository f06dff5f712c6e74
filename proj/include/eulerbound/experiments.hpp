// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "eulerbound/chains.hpp"
#include "eulerbound/constants.hpp"
#include "eulerbound/drift.hpp"

namespace eb {

using json = nlohmann::json;

// CSV table; numeric cells are rendered with 17 significant digits
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  static std::string num(double v);
  static std::string num(std::uint64_t v);
  void add(std::vector<std::string> row);
};

std::string to_csv(const Table& t);

struct Check {
  std::string name;
  double value = 0.0;
  double se = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::string detail;
};

struct ExperimentOutput {
  std::string experiment;
  std::vector<Table> tables;
  std::vector<Check> checks;
  json metadata = json::object();

  bool verified() const;
  const Check* find(const std::string& name) const;
};

const std::vector<std::string>& experiment_names();
json default_config(const std::string& experiment);

// runs a subcommand; keys missing from cfg fall back to the defaults
ExperimentOutput run_experiment(const std::string& experiment, const json& cfg);

// ---- config helpers shared with the tests --------------------------------------

json merge_defaults(const json& defaults, const json& overrides);
DriftModel model_from_json(const json& spec, const GridSpec& grid);
std::optional<InaccurateDrift> inaccurate_from_json(const json& cfg, const DriftModel& base, double h,
                                                    const GridSpec& grid);
GridSpec grid_from_json(const json& cfg);
InitialSpec init_from_json(const json& spec, std::size_t dim);
std::uint64_t config_hash(const json& cfg);

}  // namespace eb
