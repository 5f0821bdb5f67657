// forcedosc: verify the existence conditions for a forced dissipative system
// and locate its periodic orbit.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "forcedosc/forcedosc.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  int jobs = 1;
  bool force = false;
  std::optional<int> seed_grid;
  std::optional<double> tol;
};

int dispatch(const std::string& command, const Flags& flags) {
  using namespace forcedosc;
  return run_guarded(std::cerr, [&] {
    CommandContext ctx;
    ctx.jobs = std::max(1, flags.jobs);
    ctx.force = flags.force;
    if (command == "report") {
      if (flags.out.empty()) throw ConfigError("report needs --out DIR");
      ctx.out_dir = flags.out;
      return cmd_report(ctx);
    }
    if (flags.config.empty()) throw ConfigError(command + " needs --config PATH");
    ctx.config_path = flags.config;
    ctx.config_text = read_text_file(flags.config);
    ctx.config = parse_run_config_text(ctx.config_text);
    if (flags.seed_grid) {
      if (*flags.seed_grid < 1) throw ConfigError("--seed-grid must be at least 1");
      ctx.config.seed_grid = *flags.seed_grid;
    }
    if (flags.tol) {
      if (!(*flags.tol > 0.0)) throw ConfigError("--tol must be positive");
      ctx.config.solver.tol = *flags.tol;
    }
    ctx.out_dir = flags.out.empty() ? ctx.config.output_dir : flags.out;
    if (command == "check") return cmd_check(ctx);
    if (command == "simulate") return cmd_simulate(ctx);
    if (command == "find-orbit") return cmd_find_orbit(ctx);
    return cmd_sweep(ctx);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Existence checks and periodic orbits for forced dissipative systems"};
  app.set_version_flag("--version", forcedosc::kVersion);
  app.require_subcommand(1);

  Flags flags;
  app.add_option("--config", flags.config, "run configuration (JSON)");
  app.add_option("--out", flags.out, "run directory for outputs");
  app.add_option("--jobs", flags.jobs, "concurrent seeds or sweep points")->check(CLI::PositiveNumber);
  app.add_flag("--force", flags.force, "search for orbits even when the conditions fail");
  app.add_option("--seed-grid", flags.seed_grid, "seed points per block");
  app.add_option("--tol", flags.tol, "orbit residual tolerance");

  for (const auto& [name, help] : {std::pair{"check", "verify the conditions and compute the index"},
                                   std::pair{"simulate", "integrate one trajectory"},
                                   std::pair{"find-orbit", "locate the periodic orbit"},
                                   std::pair{"sweep", "repeat check and find-orbit over a parameter grid"},
                                   std::pair{"report", "summarize an existing run directory"}}) {
    app.add_subcommand(name, help)->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return dispatch(app.get_subcommands().front()->get_name(), flags);
}
