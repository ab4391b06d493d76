#pragma once
// Declarative experiment configs (TOML or JSON) and their validation.

#include "rfield/dyadic.hpp"
#include "rfield/h2q.hpp"
#include "rfield/model.hpp"
#include "rfield/varying.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rfield::cli {

using json = nlohmann::ordered_json;

enum class Command { decompose, rosenthal, tailbound, h2q, series, slln, wlln, lp, varying, dominate, moment_series };

std::string to_string(Command c);
std::optional<Command> parse_command(const std::string& s);
const std::vector<std::string>& command_names();

struct LadderSpec {
  std::optional<SlowlyVaryingFamily> family;  // none: b(n) = n^alpha
};

struct Params {
  double p = 1.5;
  double alpha = 2.0 / 3.0;
  double q = 1.0;
  double a = 0.0;
  double epsilon = 1.0;
  double confidence = 0.95;
  std::vector<int> grids;
  std::size_t reps = 1000;
  int m = 5;
  int n = 5;
  std::vector<std::pair<int, int>> sizes;
  int max_block = 10;
  int max_exp = 10;
  std::size_t max_term = std::size_t{1} << 20;
  int max_level = 60;
  double tau = 1e-3;                             // moment-series boundary tolerance
  LadderSpec ladder;
  std::optional<SlowlyVaryingFamily> family;     // series: regular norming; dominate: L in g(x) = x^p L(x^p)
  std::vector<SlowlyVaryingFamily> families;     // varying
  std::vector<double> x;                         // varying evaluation points
  int nu = 1;
  bool brute_force = false;
  DecompositionMode mode = DecompositionMode::automatic;
  std::optional<MarginalSpec> candidate;         // dominate
  std::vector<double> k_grid;                    // dominate
  std::optional<H2qInstance> instance;           // h2q
  std::string instance_name;
};

struct Scenario {
  std::string name;
  Command command = Command::series;
  FieldModel model;
  Params params;
  std::uint64_t seed = 0;
  std::string out;

  TruncationLadder ladder() const;
  /// Canonical JSON with every default filled in.
  json to_json() const;
};

/// Every violation found while reading a config, each prefixed by its field path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> v);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Reads a TOML (.toml) or JSON (any other extension) file.
json load_config_file(const std::string& path);
Scenario parse_scenario(const json& doc);
Scenario parse_scenario(const std::string& path);

json to_json(const MarginalSpec& m);
json to_json(const DependenceSpec& d);
json to_json(const SlowlyVaryingFamily& f);

}  // namespace rfield::cli
