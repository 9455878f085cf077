#pragma once

#include <string>

#include "skembed/config.hpp"

namespace skembed {

/// Experiment runners behind the command-line subcommands.  Each takes a
/// parsed config and an output directory, writes its CSV artifacts there, and
/// returns the process exit code: 0 pass, 1 verification fail, 3 infeasible
/// embedding.  Config and usage problems raise `error` instead (exit 2).
int cmd_construct(const config_file& cfg, const std::string& out_dir);
int cmd_simulate(const config_file& cfg, const std::string& out_dir);
int cmd_verify(const config_file& cfg, const std::string& out_dir);
int cmd_compare(const config_file& cfg_a, const config_file& cfg_b,
                const std::string& out_dir);
int cmd_diffusion(const config_file& cfg, const std::string& out_dir);

}  // namespace skembed
