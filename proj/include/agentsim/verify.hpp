#pragma once

#include <string>
#include <vector>

namespace agentsim {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  // Path to the command-line binary; when set, the determinism criterion runs
  // it as a subprocess twice and compares report bytes. When empty the same
  // check runs in-process.
  std::string cli_path;
  // Scratch directory for subprocess runs; defaults to a path under /tmp.
  std::string work_dir = "/tmp/agentsim_verify";
};

// Runs the full acceptance suite; one result per criterion, in order.
std::vector<CriterionResult> run_verification(const VerifyOptions& opts = {});

// Formats a pass/fail table, one line per criterion.
std::string format_verification(const std::vector<CriterionResult>& results);

// True iff every criterion passed.
bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace agentsim
