//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mstk/report.hpp"

#include <cmath>
#include <cstdio>

#include "mstk/model_io.hpp"
#include "mstk/parallel.hpp"

namespace mstk {

namespace {

std::string csv_cell(const nlohmann::json &v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos)
      return s;
    std::string q = "\"";
    for (char c: s)
      q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (!std::isfinite(d))
      return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", d);
    return buf;
  }
  if (v.is_null())
    return "";
  return v.dump();
}

} // namespace

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c)
    out += (c ? "," : "") + columns[c];
  out += '\n';
  for (const auto &row: rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out += (c ? "," : "") + csv_cell(row[c]);
    out += '\n';
  }
  return out;
}

Table &RunReport::table(std::string_view name) {
  for (auto &[n, t]: tables)
    if (n == name)
      return t;
  tables.emplace_back(std::string(name), Table {});
  return tables.back().second;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c: bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunReport::config_hash() const { return fnv1a_hex(config.dump()); }

nlohmann::json RunReport::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config;
  j["config_hash"] = config_hash();
  j["summary"] = summary;
  j["environment"] = { { "threads", thread_count() },
#if defined(__clang__)
                       { "compiler", "clang " __clang_version__ },
#elif defined(__GNUC__)
                       { "compiler", "gcc " __VERSION__ },
#endif
                       { "model_format_version", kModelFormatVersion } };
  j["wall_clock_seconds"] = wall_clock_seconds;
  nlohmann::json tabs = nlohmann::json::object();
  for (const auto &[name, t]: tables) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto &row: t.rows) {
      nlohmann::json obj = nlohmann::json::object();
      for (std::size_t c = 0; c < row.size() && c < t.columns.size(); ++c) {
        const auto &v = row[c];
        obj[t.columns[c]] =
            v.is_number_float() && !std::isfinite(v.get<double>()) ? nullptr
                                                                    : v;
      }
      rows.push_back(std::move(obj));
    }
    tabs[name] = std::move(rows);
  }
  j["tables"] = std::move(tabs);
  return j;
}

void write_report(const RunReport &r, const std::filesystem::path &stem) {
  write_file(stem.string() + ".json", r.to_json().dump(2) + "\n");
  for (const auto &[name, t]: r.tables)
    write_file(stem.string() + "." + name + ".csv", t.to_csv());
}

} // namespace mstk
