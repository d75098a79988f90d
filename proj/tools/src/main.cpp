#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pmmap/cli/commands.hpp"
#include "pmmap/cli/config.hpp"
#include "pmmap/errors.hpp"

int main(int argc, char** argv) {
  using namespace pmmap::cli;
  CLI::App app{"pmmap: intermittent skew-product maps, first returns, Ulam operators and limit-law experiments"};
  app.set_version_flag("--version", PMMAP_VERSION);
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  Overrides flags;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", flags.output_dir, "output directory");
  app.add_option("--seed", flags.seed, "master seed");
  app.add_option("--threads", flags.threads, "worker threads (0 = all cores, 1 = bit-reproducible)");
  app.add_option("--preset", flags.preset, "map preset: clt, decay, stable, barrier, infinite");

  const std::pair<const char*, const char*> subs[] = {
      {"validate", "check admissibility and print the admissible c0 interval"},
      {"tails", "Lebesgue measure of {phi > n}"},
      {"curves", "boundary curves x_n and their asymptotics"},
      {"ulam", "Ulam discretization and invariant density"},
      {"correlations", "decay of correlations (operator and Monte Carlo)"},
      {"limits", "CLT, stable law, large deviations, moments"},
      {"infinite", "infinite-measure mixing"},
      {"verify", "sampled uniform expansion and bounded distortion of inverse branches"},
  };
  for (const auto& [name, desc] : subs) {
    auto* sc = app.add_subcommand(name, desc);
    // global options may also follow the subcommand
    sc->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path, environment_overrides(), flags);
  } catch (const pmmap::Error& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  }
  return run_command(cmd, cfg);
}
