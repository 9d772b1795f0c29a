#pragma once

#include <string>
#include <vector>

#include "agentsim/sim/scenarios.hpp"

namespace agentsim {

// Thrown for any malformed, unknown, or invalid configuration input. The
// message always names the offending field by its dotted path (e.g. "pool.N").
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat scenario configuration: one document with a scenario name plus the
// sections shared by all scenarios. Individual scenario configs are derived
// from it on demand.
struct ScenarioConfig {
  std::string scenario = "sched_compare";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string out_dir;  // empty = resolved by the CLI (flag, env var, or cwd)

  WorkloadConfig workload;
  std::size_t pool_blocks = 1500;     // pool.N
  std::size_t tokens_per_block = 16;  // pool.tpb
  std::size_t max_running = 2;        // server.max_running
  SchedulerParams sched;
  SpecConfig spec;
  CollabScenarioConfig collab;     // controller params + scenario economics
  CompressScenarioConfig compress; // compression params + scenario shape
  LatencyModel latency;
  OteSweepConfig sweep;
  AsyncBuildConfig async_build;

  ScenarioConfig();

  // Derived per-scenario configs.
  SchedCompareConfig sched_compare_config() const;
  CompositionConfig composition_config() const;

  void validate() const;  // throws ConfigError citing the field path
};

// Names of the bundled presets, in documentation order.
const std::vector<std::string>& preset_names();

// Returns the bundled preset; throws ConfigError for unknown names.
ScenarioConfig preset(const std::string& name);

// Parses a JSON document. Unknown keys are rejected with their dotted path;
// type mismatches and invalid values are reported the same way.
ScenarioConfig parse_config(const std::string& json_text);

// Serializes with every key present (the schema is self-documenting: a dump
// of any config enumerates all keys with their current values).
std::string dump_config(const ScenarioConfig& cfg);

// Applies one "key=value" dotted-path override (e.g. "pool.N=2048") on top of
// an existing config by round-tripping through the JSON form.
ScenarioConfig apply_override(const ScenarioConfig& cfg, const std::string& key_value);

// One line per config key: "path = default" — used by --help.
std::string describe_config_keys();

}  // namespace agentsim
