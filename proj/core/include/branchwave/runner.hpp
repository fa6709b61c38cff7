#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "branchwave/errors.hpp"

namespace branchwave {

inline constexpr const char* kSchema = "branchwave/1";

struct RunOptions {
  std::string out_dir = ".";
  int threads = 1;
  bool quiet = false;
  std::ostream* log = nullptr;  // progress lines unless quiet
};

struct RunResult {
  std::string experiment;
  std::string summary_json;            // also written to <out_dir>/summary.json
  std::vector<std::string> artifacts;  // paths relative to out_dir
};

std::string read_text_file(const std::string& path);

// Parses the config and checks every clause that can be decided before a
// run (grid step, resolution, time stepping, packet and metric parameters).
// Throws Error naming the violated clause.
void validate_config(const std::string& config_text);

RunResult run_config(const std::string& config_text, const RunOptions& opts);

// Runs the base config once per value of `parameter`, a dotted path such as
// "packet.s", each into <out_dir>/run_<index>. Writes sweep.csv with one row per
// value and the scalar metrics as columns, and sweep.json with monotone-trend
// verdicts per metric. Failed runs keep their row with the error text.
struct SweepResult {
  std::string summary_json;
  int failures = 0;
  ErrorKind first_error = ErrorKind::InvalidConfig;
};
SweepResult run_sweep(const std::string& config_text, const std::string& parameter,
                      const std::vector<double>& values, const RunOptions& opts);

// Writes grid_adjacency.csv and, when the config has a packet, the lifted
// initial state as initial_state.bin.
std::vector<std::string> export_grid(const std::string& config_text, const std::string& out_dir);

// 0 ok, 2 validation failure, 3 numerical-contract failure.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace branchwave
