// Acceptance gate: runs the full criteria suite and prints one pass/fail line
// per criterion. Exit status is nonzero if any criterion fails.
//
// Usage: acceptance_test [path-to-cli-binary]
// When the CLI path is given, the determinism criterion exercises it as a
// subprocess; otherwise the same check runs in-process.

#include <cstdio>

#include "agentsim/verify.hpp"

int main(int argc, char** argv) {
  agentsim::VerifyOptions opts;
  if (argc > 1) opts.cli_path = argv[1];
  opts.work_dir = "/tmp/agentsim_acceptance";
  auto results = agentsim::run_verification(opts);
  std::fputs(agentsim::format_verification(results).c_str(), stdout);
  return agentsim::all_passed(results) ? 0 : 1;
}
