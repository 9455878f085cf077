#include <cstdio>
#include <string>
#include <vector>

#include "skembed/config.hpp"
#include "skembed/errors.hpp"
#include "skembed/experiment.hpp"

namespace {

constexpr const char* kUsage =
    "usage: skembed <construct|simulate|verify|compare|diffusion>"
    " --config PATH [--config PATH] [--out DIR]\n"
    "\n"
    "  construct   write the potential, barrier table, and max-law bound\n"
    "  simulate    run Monte Carlo paths and write samples.csv\n"
    "  verify      simulate, then run the statistical checks (exit 1 on FAIL)\n"
    "  compare     run two configs and tabulate their max-law curves\n"
    "  diffusion   scale-transform a diffusion target and run the pipeline\n"
    "\n"
    "  --config PATH  experiment config; compare takes exactly two\n"
    "  --out DIR      output directory (default: current directory)\n";

int usage_error(const std::string& message) {
  std::fprintf(stderr, "skembed: %s\n%s", message.c_str(), kUsage);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return usage_error("missing subcommand");
  const std::string command = argv[1];
  std::vector<std::string> config_paths;
  std::string out_dir = ".";
  for (int i = 2; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config") {
      if (i + 1 >= argc) return usage_error("--config needs a path");
      config_paths.emplace_back(argv[++i]);
    } else if (arg == "--out") {
      if (i + 1 >= argc) return usage_error("--out needs a directory");
      out_dir = argv[++i];
    } else {
      return usage_error("unknown option '" + arg + "'");
    }
  }

  const bool is_compare = command == "compare";
  if (command != "construct" && command != "simulate" && command != "verify" &&
      !is_compare && command != "diffusion")
    return usage_error("unknown subcommand '" + command + "'");
  if (is_compare && config_paths.size() != 2)
    return usage_error("compare needs exactly two --config paths");
  if (!is_compare && config_paths.size() != 1)
    return usage_error("expected exactly one --config path");

  try {
    std::vector<skembed::config_file> configs;
    configs.reserve(config_paths.size());
    for (const std::string& path : config_paths)
      configs.push_back(skembed::config_file::parse_file(path));
    if (command == "construct") return skembed::cmd_construct(configs[0], out_dir);
    if (command == "simulate") return skembed::cmd_simulate(configs[0], out_dir);
    if (command == "verify") return skembed::cmd_verify(configs[0], out_dir);
    if (is_compare) return skembed::cmd_compare(configs[0], configs[1], out_dir);
    return skembed::cmd_diffusion(configs[0], out_dir);
  } catch (const skembed::error& err) {
    std::fprintf(stderr, "skembed: error: %s\n", err.what());
    // Structurally infeasible embeddings get their own exit code; everything
    // else is a usage/config problem.
    const skembed::errc code = err.code();
    if (code == skembed::errc::mean_sign || code == skembed::errc::no_crossing) return 3;
    return 2;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "skembed: internal error: %s\n", err.what());
    return 2;
  }
}
