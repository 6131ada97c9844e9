#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "spikekit/config.hpp"

namespace spikekit::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalFailure = 3 };

struct RunOptions {
  std::string out_dir;  // empty: the config's output directory
  int threads = 1;
  std::ostream* log = nullptr;  // progress lines; null silences them
};

int cmd_green(const ExperimentConfig& cfg, const RunOptions& opt);
int cmd_mu(const ExperimentConfig& cfg, const RunOptions& opt);
int cmd_assemble(const ExperimentConfig& cfg, const RunOptions& opt);
int cmd_residual_sweep(const ExperimentConfig& cfg, const RunOptions& opt);
int cmd_optimize(const ExperimentConfig& cfg, const RunOptions& opt);
int cmd_solve(const ExperimentConfig& cfg, const RunOptions& opt);
int cmd_report(const ExperimentConfig& cfg, const RunOptions& opt);

// Full command line (argv[0] is the program name). Errors are printed to
// `err`; the return value is the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spikekit::cli
