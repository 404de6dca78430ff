//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MSTK_REPORT_HPP_
#define MSTK_REPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mstk {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;

  void add(std::vector<nlohmann::json> row) { rows.push_back(std::move(row)); }
  std::string to_csv() const;
};

/// Metrics of one command run. The config hash covers `config` only, so two
/// runs with the same hash must produce the same tables.
struct RunReport {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json summary = nlohmann::json::object();
  std::vector<std::pair<std::string, Table>> tables;
  double wall_clock_seconds = 0;

  Table &table(std::string_view name);
  std::string config_hash() const;
  nlohmann::json to_json() const;
};

/// FNV-1a 64, hex.
std::string fnv1a_hex(std::string_view bytes);

/// Writes <stem>.json and one <stem>.<table>.csv per table.
void write_report(const RunReport &r, const std::filesystem::path &stem);

} // namespace mstk

#endif // MSTK_REPORT_HPP_
