#pragma once
// Executes a scenario and writes its artifacts plus a checksummed manifest.

#include "scenario.hpp"

#include "rfield/parallel.hpp"

#include <string>
#include <vector>

namespace rfield::cli {

inline constexpr const char* kToolkitVersion = "0.1.0";

enum class OutputFormat { csv, json, both };

struct RunOptions {
  Exec exec{};
  OutputFormat format = OutputFormat::csv;
};

/// One tidy table; cells are JSON scalars (non-finite numbers as "inf", "-inf", "nan").
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;

  void add(std::vector<json> row);
  std::string to_csv() const;
  json to_json() const;
};

struct RunResult {
  json summary;
  std::vector<Table> tables;
};

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string scenario_name;
  std::string command;
  std::string scenario_hash;
  std::string toolkit_version;
  std::string started_at;
  std::string finished_at;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> files;

  json to_json() const;
  static RunManifest from_json(const json& j);
};

/// Finite doubles as numbers, others as strings.
json number_json(double v);

/// Canonical scenario JSON without the output location; the hash input.
json experiment_json(const Scenario& s);
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

/// Computes the module results without touching the file system.
RunResult execute(const Scenario& s, const RunOptions& opt);

/// Executes and writes artifacts into s.out. On failure every file written by
/// this call is removed before the exception propagates.
RunManifest run(const Scenario& s, const RunOptions& opt);

RunManifest read_manifest(const std::string& dir_or_file);

/// Paths whose current checksum differs from the manifest (or that are missing).
std::vector<std::string> verify_manifest(const RunManifest& m, const std::string& dir);

}  // namespace rfield::cli
