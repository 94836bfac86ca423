// Command-line entry point. Each subcommand reads an optional JSON config,
// writes its artifacts under --out and exits 0 (ok), 1 (violated bound or
// invariant) or 2 (config or data error).

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "losspred/error.h"
#include "losspred/harness/commands.h"
#include "losspred/harness/config.h"

namespace fs = std::filesystem;
using losspred::harness::kExitConfigError;

int main(int argc, char** argv) {
  CLI::App app{"losspred: loss prediction audits and multicalibration boosting"};
  app.require_subcommand(1);
  struct Opts {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
  };
  Opts opts;
  const std::map<std::string, std::string> blurbs{
      {"audit", "fit a predictor and a loss predictor, report advantage and witness"},
      {"train-lp", "train a loss predictor and save it with its metrics"},
      {"experiment", "advantage vs calibration error sweep over blended predictors"},
      {"boost", "multicalibrate against the Lipschitz basis and check the panel"},
      {"basis-check", "fit sampled Lipschitz losses with the basis, report errors"},
      {"report", "render a summary of an earlier run directory"},
  };
  for (const auto& name : losspred::harness::command_names()) {
    CLI::App* sub = app.add_subcommand(name, blurbs.at(name));
    sub->add_option("--config", opts.config, "JSON config file (defaults fill missing keys)");
    sub->add_option("--out", opts.out, "output directory")->capture_default_str();
    sub->add_option("--seed", opts.seed, "override the config seed");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  nlohmann::json config = nlohmann::json::object();
  fs::path base_dir = fs::current_path();
  if (!opts.config.empty()) {
    try {
      config = losspred::harness::read_json_file(opts.config);
      base_dir = fs::absolute(opts.config).parent_path();
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitConfigError;
    }
  }
  const auto outcome =
      losspred::harness::run_command(command, config, opts.out, opts.seed, base_dir);
  const auto& report = outcome.report;
  if (report.contains("error")) std::cerr << "error: " << report["error"].get<std::string>() << "\n";
  for (const auto& v : report["violations"]) std::cerr << "violation: " << v.get<std::string>() << "\n";
  for (const auto& w : report["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
  std::cout << command << ": exit " << outcome.exit_code << ", report at "
            << (fs::path(opts.out) / "report.json").string() << "\n";
  return outcome.exit_code;
}
