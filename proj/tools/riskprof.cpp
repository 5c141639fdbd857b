#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "riskprof/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Inspection risk profiling pipeline"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out;
  std::map<std::string, std::uint64_t> seeds;
  int workers = 0;
  std::vector<std::string> sets;

  app.add_option("--config", config_path, "key = value configuration file")->required();
  app.add_option("--out", out, "output directory (overrides `out`)");
  for (const char* stage : {"simulate", "fit", "compare"}) {
    app.add_option(std::string("--seed.") + stage, seeds[stage],
                   std::string("seed for the ") + stage + " stage");
  }
  app.add_option("--workers", workers, "maximum worker threads")->check(CLI::PositiveNumber);
  app.add_option("--set", sets, "override any config key: key=value");

  app.fallthrough();
  const std::vector<std::string> names{"simulate", "ingest",  "smooth",  "assoc", "profile-eval",
                                       "fit",      "compare", "report", "all"};
  for (const auto& name : names) app.add_subcommand(name, "run the " + name + " stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  std::map<std::string, std::string> overrides;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::cerr << "validation error: --set expects key=value, got '" << s << "'\n";
      return 1;
    }
    overrides[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (!out.empty()) overrides["out"] = out;
  if (workers > 0) overrides["workers"] = std::to_string(workers);
  for (const auto& [stage, value] : seeds) {
    if (app.count("--seed." + stage) > 0) overrides["seed." + stage] = std::to_string(value);
  }

  try {
    const auto config = riskprof::load_config_file(config_path, overrides);
    const std::string sub = app.get_subcommands().front()->get_name();
    return riskprof::run_subcommand(sub, config, std::cerr);
  } catch (const riskprof::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
