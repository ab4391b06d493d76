// rfield: scenario-driven front end.
//
//   rfield <command> --config scenario.toml [--seed N] [--out DIR] [--threads N] [--format csv|json|both]
//   rfield validate --config scenario.toml
//   rfield manifest DIR
//
// stdout always carries one JSON document. Exit codes: 0 success, 2 config
// error, 3 runtime error.

#include "runner.hpp"
#include "scenario.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

using rfield::cli::json;

namespace {

int emit_error(const std::string& kind, const std::vector<std::string>& messages, int code) {
  json j = {{"status", "error"}, {"kind", kind}, {"violations", messages}};
  std::cout << j.dump(2) << "\n";
  return code;
}

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned threads = 1;
  std::string format = "csv";
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximal inequalities and limit theorems for random fields"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rfield::cli::kToolkitVersion);

  std::map<std::string, RunFlags> flags;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : rfield::cli::command_names()) {
    auto& f = flags[name];
    auto* sub = app.add_subcommand(name, "Run a " + name + " scenario");
    sub->add_option("--config", f.config, "Scenario file (.toml or .json)")->required();
    sub->add_option("--seed", f.seed, "Master seed (overrides the config)");
    sub->add_option("--out", f.out, "Output directory (overrides the config)");
    sub->add_option("--threads", f.threads, "Worker threads; affects speed only")->check(CLI::Range(1u, 1024u));
    sub->add_option("--format", f.format, "Artifact format")->check(CLI::IsMember({"csv", "json", "both"}));
    subs[name] = sub;
  }
  std::string validate_config;
  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario without running it");
  validate->add_option("--config", validate_config, "Scenario file (.toml or .json)")->required();
  std::string manifest_path;
  auto* manifest = app.add_subcommand("manifest", "Show a prior run's manifest and verify its checksums");
  manifest->add_option("path", manifest_path, "Output directory or manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return emit_error("usage", {e.what()}, 2);
  }

  try {
    if (validate->parsed()) {
      const auto s = rfield::cli::parse_scenario(validate_config);
      std::cout << json({{"status", "ok"}, {"scenario", s.to_json()}}).dump(2) << "\n";
      return 0;
    }
    if (manifest->parsed()) {
      const auto m = rfield::cli::read_manifest(manifest_path);
      std::filesystem::path dir(manifest_path);
      if (!std::filesystem::is_directory(dir)) dir = dir.parent_path();
      const auto bad = rfield::cli::verify_manifest(m, dir.string());
      std::cout << json({{"status", bad.empty() ? "ok" : "mismatch"}, {"manifest", m.to_json()}, {"mismatched", bad}}).dump(2) << "\n";
      return bad.empty() ? 0 : 3;
    }
  } catch (const rfield::cli::ConfigError& e) {
    return emit_error("config", e.violations(), 2);
  } catch (const std::exception& e) {
    return emit_error("runtime", {e.what()}, 3);
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    const auto& f = flags[name];
    rfield::cli::Scenario s;
    try {
      s = rfield::cli::parse_scenario(f.config);
      if (rfield::cli::to_string(s.command) != name)
        throw rfield::cli::ConfigError({"command: config declares '" + rfield::cli::to_string(s.command) + "' but was run as '" + name + "'"});
      if (f.seed) s.seed = *f.seed;
      if (!f.out.empty()) s.out = f.out;
    } catch (const rfield::cli::ConfigError& e) {
      return emit_error("config", e.violations(), 2);
    } catch (const std::exception& e) {
      return emit_error("config", {e.what()}, 2);
    }
    rfield::cli::RunOptions opt;
    opt.exec.threads = f.threads;
    opt.format = f.format == "json" ? rfield::cli::OutputFormat::json
                 : f.format == "both" ? rfield::cli::OutputFormat::both
                                      : rfield::cli::OutputFormat::csv;
    try {
      const auto m = rfield::cli::run(s, opt);
      std::cout << json({{"status", "ok"}, {"out", s.out}, {"manifest", m.to_json()}}).dump(2) << "\n";
      return 0;
    } catch (const std::invalid_argument& e) {
      // Domain checks inside the modules that the config layer cannot see.
      return emit_error("config", {e.what()}, 2);
    } catch (const std::exception& e) {
      return emit_error("runtime", {e.what()}, 3);
    }
  }
  return emit_error("usage", {"no subcommand"}, 2);
}
