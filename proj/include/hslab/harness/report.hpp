#pragma once

// Experiment reports. The payload (records and tables) is deterministic for a
// given config; wall-clock timings go to a separate file.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hslab::harness {

using json = nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;

/// FNV-1a over the canonical (key-sorted, compact) dump of the config.
inline std::string config_hash(const json& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// One check: measured values, the thresholds they were judged against, and
/// the verdict computed from exactly those numbers.
struct Record {
  std::string name;
  std::string suite;
  std::map<std::string, double> values;
  std::map<std::string, double> thresholds;
  std::vector<std::string> notes;
  json table = json::array();  ///< convergence tables and per-case rows
  bool pass = true;
  bool check = true;  ///< false for informational records that never fail a run
};

struct Report {
  std::string suite;
  json config;
  std::string hash;
  std::vector<Record> records;
  std::map<std::string, double> seconds;  ///< wall-clock, kept out of the payload

  bool passed() const {
    for (const auto& r : records)
      if (r.check && !r.pass) return false;
    return true;
  }

  const Record* find(const std::string& name) const {
    for (const auto& r : records)
      if (r.name == name) return &r;
    return nullptr;
  }
};

namespace detail {
// JSON has no NaN or infinity; encode them as strings.
inline json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}
}  // namespace detail

inline json to_json(const Record& r, const std::string& hash) {
  json values = json::object();
  for (const auto& [k, v] : r.values) values[k] = detail::number(v);
  json thresholds = json::object();
  for (const auto& [k, v] : r.thresholds) thresholds[k] = detail::number(v);
  return {{"name", r.name},          {"suite", r.suite}, {"config_hash", hash}, {"values", values},
          {"thresholds", thresholds}, {"pass", r.pass},   {"check", r.check},    {"notes", r.notes},
          {"table", r.table}};
}

inline json payload(const Report& rep) {
  json records = json::array();
  for (const auto& r : rep.records) records.push_back(to_json(r, rep.hash));
  return {{"schema_version", kReportSchemaVersion},
          {"suite", rep.suite},
          {"config_hash", rep.hash},
          {"config", rep.config},
          {"passed", rep.passed()},
          {"records", records}};
}

/// Flat table: one row per (record, quantity).
inline std::string to_csv(const Report& rep) {
  std::string out = "schema_version,config_hash,suite,record,kind,key,value,pass\n";
  auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : rep.records) {
    const std::string prefix = std::to_string(kReportSchemaVersion) + "," + rep.hash + "," + r.suite + "," + r.name + ",";
    for (const auto& [k, v] : r.values) out += prefix + "value," + k + "," + fmt(v) + "," + (r.pass ? "1" : "0") + "\n";
    for (const auto& [k, v] : r.thresholds)
      out += prefix + "threshold," + k + "," + fmt(v) + "," + (r.pass ? "1" : "0") + "\n";
  }
  return out;
}

struct WrittenReport {
  std::filesystem::path json_path;
  std::filesystem::path csv_path;
  std::filesystem::path timing_path;
};

inline WrittenReport write_report(const Report& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string stem = rep.suite + "-" + rep.hash;
  WrittenReport w{dir / (stem + ".json"), dir / (stem + ".csv"), dir / (stem + ".timing.json")};
  std::ofstream(w.json_path) << payload(rep).dump(2) << "\n";
  std::ofstream(w.csv_path) << to_csv(rep);
  json timing = json::object();
  for (const auto& [k, v] : rep.seconds) timing[k] = v;
  std::ofstream(w.timing_path) << json{{"config_hash", rep.hash}, {"seconds", timing}}.dump(2) << "\n";
  return w;
}

}  // namespace hslab::harness
