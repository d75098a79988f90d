#pragma once

#include <string>
#include <vector>

#include "pmmap/cli/config.hpp"
#include "pmmap/cli/io.hpp"

namespace pmmap::cli {

enum ExitCode : int { kExitOk = 0, kExitVerdict = 2, kExitConfig = 3, kExitNumeric = 4 };

const std::vector<std::string>& command_names();

// Runs one subcommand, writes artifacts and manifest.json under cfg.output_dir, returns the exit code.
int run_command(const std::string& name, const ExperimentConfig& cfg);

}  // namespace pmmap::cli
