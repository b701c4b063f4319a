#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phasekit/cli.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> jobs;
  bool no_timing = false;
  std::vector<std::string> overrides;
};

// "section.key=value" -> Config::set.
void apply_override(phasekit::cli::Config& cfg, const std::string& text) {
  const auto eq = text.find('=');
  const auto dot = text.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw phasekit::cli::ConfigError("--set expects section.key=value, got '" + text + "'");
  cfg.set(text.substr(0, dot), text.substr(dot + 1, eq - dot - 1), text.substr(eq + 1));
}

int run(const std::string& command, const Flags& f) {
  using namespace phasekit::cli;
  try {
    Config cfg = f.config.empty() ? Config{} : Config::load(f.config);
    for (const std::string& o : f.overrides) apply_override(cfg, o);
    if (f.seed) cfg.set("run", "seed", std::to_string(*f.seed));
    if (f.out) cfg.set("run", "out", *f.out);
    if (f.jobs) cfg.set("run", "jobs", std::to_string(*f.jobs));
    if (f.no_timing) {
      cfg.set("solver", "record_time", "false");
      cfg.set("blind", "record_time", "false");
    }
    for (const std::string& file : execute(command, cfg)) std::cout << file << '\n';
    return 0;
  } catch (const std::exception& e) {
    const ErrorReport r = describe_error(e);
    std::cerr << r.json << '\n';
    return r.exit_code;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase retrieval, ptychography and holography experiments"};
  app.require_subcommand(1);
  Flags flags;
  std::string chosen;
  for (const std::string& name : phasekit::cli::command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", flags.config, "Config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Run seed (overrides run.seed)");
    sub->add_option("--out", flags.out, "Output directory (overrides run.out)");
    sub->add_option("--jobs", flags.jobs, "Worker cap (overrides run.jobs)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--no-timing", flags.no_timing, "Write zeros in the ms trace column");
    sub->add_option("--set", flags.overrides, "Override section.key=value (repeatable)");
    sub->callback([&chosen, name] { chosen = name; });
  }
  CLI11_PARSE(app, argc, argv);
  return run(chosen, flags);
}
