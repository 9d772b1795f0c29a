#pragma once

#include "agentsim/config.hpp"

namespace agentsim {

struct ReportFile {
  std::string name;     // file name, relative to the output directory
  std::string content;  // byte-stable for a fixed (config, seed)
};

struct RunOutput {
  std::vector<ReportFile> files;
  std::string summary;  // human-readable assertion/ordering summary
};

// Runs the configured scenario for one seed. Deterministic: identical
// (config, seed) produce byte-identical file contents. Throws ConfigError for
// invalid configs and std::logic_error for runtime contract violations.
RunOutput run_one(const ScenarioConfig& cfg, std::uint64_t seed);

}  // namespace agentsim
