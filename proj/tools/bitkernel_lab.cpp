// bitkernel-lab <command> [--config <path>] [--set key=value ...] [--out <dir>]
//
// Exit codes: 0 success, 2 configuration error, 3 divergence in a
// non-sweep run, 1 anything else.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bitkernel/errors.hpp"
#include "bitkernel/experiment.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

nlohmann::json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bitkernel::ConfigError("--config", "cannot read " + path);
  std::stringstream text;
  text << in.rdbuf();
  nlohmann::json j = nlohmann::json::parse(text.str(), nullptr, false);
  if (j.is_discarded()) throw bitkernel::ConfigError("--config", "malformed JSON in " + path);
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  namespace ex = bitkernel::experiment;

  CLI::App app{"Train 1-bit networks next to their full-precision twins and emit "
               "plot-ready reports."};
  app.set_version_flag("--version", ex::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  for (const char* name : {"train", "sweep-width", "similarity", "kernel-probe",
                           "generate-data", "compare-1d"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--set", overrides, "Override a configuration key (key=value)");
    sub->add_option("--out", out_dir, "Output directory (default: config output_dir)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    nlohmann::json source = config_path.empty() ? nlohmann::json::object()
                                                 : read_config(config_path);
    if (source.contains("command") && source["command"] != command) {
      throw bitkernel::ConfigError("command", "config is for '" +
                                                  source["command"].dump() +
                                                  "', invoked as '" + command + "'");
    }
    source["command"] = command;
    ex::apply_overrides(source, overrides);
    const ex::ExperimentConfig cfg = ex::parse_config(source);
    ex::run_command(cfg, out_dir.empty() ? cfg.output_dir : out_dir);
  } catch (const bitkernel::ConfigError& e) {
    std::cerr << "bitkernel-lab: " << e.what() << '\n';
    return kExitConfig;
  } catch (const bitkernel::ParseError& e) {
    std::cerr << "bitkernel-lab: " << e.what() << '\n';
    return kExitConfig;
  } catch (const bitkernel::DivergenceError& e) {
    std::cerr << "bitkernel-lab: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "bitkernel-lab: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
