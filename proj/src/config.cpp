#include "agentsim/config.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include <json.hpp>

namespace agentsim {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

std::string join(const std::string& a, const std::string& b) {
  return a.empty() ? b : a + "." + b;
}

// --- typed field extraction -------------------------------------------------

void check_keys(const ordered_json& obj, const std::string& path,
                const std::vector<std::string>& allowed) {
  if (!obj.is_object()) fail(path.empty() ? "config" : path, "expected an object");
  for (const auto& [key, _] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail(join(path, key), "unknown config key");
}

template <typename T>
void get_uint(const ordered_json& obj, const std::string& path, const char* key, T& out) {
  if (!obj.contains(key)) return;
  const ordered_json& v = obj.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<double>() < 0))
    fail(join(path, key), "expected a nonnegative integer");
  out = v.get<T>();
}

void get_double(const ordered_json& obj, const std::string& path, const char* key, double& out) {
  if (!obj.contains(key)) return;
  const ordered_json& v = obj.at(key);
  if (!v.is_number()) fail(join(path, key), "expected a number");
  out = v.get<double>();
}

void get_bool(const ordered_json& obj, const std::string& path, const char* key, bool& out) {
  if (!obj.contains(key)) return;
  const ordered_json& v = obj.at(key);
  if (!v.is_boolean()) fail(join(path, key), "expected a boolean");
  out = v.get<bool>();
}

void get_string(const ordered_json& obj, const std::string& path, const char* key,
                std::string& out) {
  if (!obj.contains(key)) return;
  const ordered_json& v = obj.at(key);
  if (!v.is_string()) fail(join(path, key), "expected a string");
  out = v.get<std::string>();
}

template <typename T>
void get_uint_array(const ordered_json& obj, const std::string& path, const char* key,
                    std::vector<T>& out) {
  if (!obj.contains(key)) return;
  const ordered_json& v = obj.at(key);
  if (!v.is_array()) fail(join(path, key), "expected an array of nonnegative integers");
  std::vector<T> parsed;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<double>() < 0)
      fail(join(path, key), "expected a nonnegative integer element");
    parsed.push_back(e.get<T>());
  }
  out = std::move(parsed);
}

// --- section parsers --------------------------------------------------------

void parse_workload(const ordered_json& j, WorkloadConfig& w) {
  const std::string p = "workload";
  check_keys(j, p,
             {"num_sessions", "num_long", "long_prompt_tokens", "short_prompt_tokens",
              "long_turns", "short_turns", "followup_tokens", "output_tokens",
              "long_output_tokens", "arrival_gap", "think_time", "classify_threshold"});
  get_uint(j, p, "num_sessions", w.num_sessions);
  get_uint(j, p, "num_long", w.num_long);
  get_uint(j, p, "long_prompt_tokens", w.long_prompt_tokens);
  get_uint(j, p, "short_prompt_tokens", w.short_prompt_tokens);
  get_uint(j, p, "long_turns", w.long_turns);
  get_uint(j, p, "short_turns", w.short_turns);
  get_uint(j, p, "followup_tokens", w.followup_tokens);
  get_uint(j, p, "output_tokens", w.output_tokens);
  get_uint(j, p, "long_output_tokens", w.long_output_tokens);
  get_double(j, p, "arrival_gap", w.arrival_gap);
  get_double(j, p, "think_time", w.think_time);
  get_uint(j, p, "classify_threshold", w.classify_threshold);
}

void parse_sched(const ordered_json& j, SchedulerParams& s) {
  const std::string p = "sched";
  check_keys(j, p,
             {"lambda_max", "k", "epsilon", "a", "b", "c", "pi_correction", "k_p", "k_i"});
  get_double(j, p, "lambda_max", s.lambda_max);
  get_double(j, p, "k", s.k);
  get_double(j, p, "epsilon", s.epsilon);
  get_double(j, p, "a", s.a);
  get_double(j, p, "b", s.b);
  get_double(j, p, "c", s.c);
  get_bool(j, p, "pi_correction", s.pi_correction);
  get_double(j, p, "k_p", s.k_p);
  get_double(j, p, "k_i", s.k_i);
}

void parse_spec(const ordered_json& j, SpecConfig& s) {
  const std::string p = "spec";
  check_keys(j, p,
             {"n_propose", "top_k", "max_context_len", "max_batch_size", "min_match",
              "session_weight", "draft_policy", "sam_max_states"});
  get_uint(j, p, "n_propose", s.n_propose);
  get_uint(j, p, "top_k", s.top_k);
  get_uint(j, p, "max_context_len", s.max_context_len);
  get_uint(j, p, "max_batch_size", s.max_batch_size);
  get_uint(j, p, "min_match", s.min_match);
  get_double(j, p, "session_weight", s.session_weight);
  std::string policy;
  get_string(j, p, "draft_policy", policy);
  if (!policy.empty()) {
    if (policy == "latest_only")
      s.draft_policy = DraftPolicy::LatestOnly;
    else if (policy == "prefer_earlier")
      s.draft_policy = DraftPolicy::PreferEarlier;
    else
      fail("spec.draft_policy", "expected \"latest_only\" or \"prefer_earlier\"");
  }
  get_uint(j, p, "sam_max_states", s.sam_max_states);
}

void parse_collab(const ordered_json& j, CollabScenarioConfig& c) {
  const std::string p = "collab";
  check_keys(j, p,
             {"warmup_large_steps", "max_large_steps_per_escalation", "max_total_steps",
              "task_units", "hard_fraction", "large_step_seconds", "small_step_factor",
              "tool_seconds", "small_only_retries"});
  get_uint(j, p, "warmup_large_steps", c.collab.warmup_large_steps);
  get_uint(j, p, "max_large_steps_per_escalation", c.collab.max_large_steps_per_escalation);
  get_uint(j, p, "max_total_steps", c.collab.max_total_steps);
  get_uint(j, p, "task_units", c.task_units);
  get_double(j, p, "hard_fraction", c.hard_fraction);
  get_double(j, p, "large_step_seconds", c.large_step_seconds);
  get_double(j, p, "small_step_factor", c.small_step_factor);
  get_double(j, p, "tool_seconds", c.tool_seconds);
  get_uint(j, p, "small_only_retries", c.small_only_retries);
}

void parse_compress(const ordered_json& j, CompressScenarioConfig& c) {
  const std::string p = "compress";
  check_keys(j, p,
             {"theta_ctx", "theta_search", "ratio", "loops", "env_tokens_per_loop",
              "think_tokens", "tool"});
  get_uint(j, p, "theta_ctx", c.compress.theta_ctx);
  get_double(j, p, "theta_search", c.compress.theta_search);
  get_double(j, p, "ratio", c.compress.ratio);
  get_uint(j, p, "loops", c.loops);
  get_uint(j, p, "env_tokens_per_loop", c.env_tokens_per_loop);
  get_uint(j, p, "think_tokens", c.think_tokens);
  get_string(j, p, "tool", c.tool);
}

void parse_latency(const ordered_json& j, LatencyModel& l) {
  const std::string p = "latency";
  check_keys(j, p,
             {"prefill_per_uncached_token", "decode_per_forward_pass",
              "draft_verify_overhead_per_token", "sam_build_per_token", "distill_latency",
              "small_model_pass_factor", "tools"});
  get_double(j, p, "prefill_per_uncached_token", l.prefill_per_uncached_token);
  get_double(j, p, "decode_per_forward_pass", l.decode_per_forward_pass);
  get_double(j, p, "draft_verify_overhead_per_token", l.draft_verify_overhead_per_token);
  get_double(j, p, "sam_build_per_token", l.sam_build_per_token);
  get_double(j, p, "distill_latency", l.distill_latency);
  get_double(j, p, "small_model_pass_factor", l.small_model_pass_factor);
  if (j.contains("tools")) {
    const ordered_json& tools = j.at("tools");
    if (!tools.is_object()) fail("latency.tools", "expected an object");
    std::map<std::string, ToolLatency> parsed;
    for (const auto& [name, tj] : tools.items()) {
      std::string tp = "latency.tools." + name;
      check_keys(tj, tp, {"mean", "jitter"});
      ToolLatency t;
      get_double(tj, tp, "mean", t.mean);
      get_double(tj, tp, "jitter", t.jitter);
      parsed[name] = t;
    }
    l.tools = std::move(parsed);
  }
}

void parse_sweep(const ordered_json& j, OteSweepConfig& s) {
  const std::string p = "sweep";
  check_keys(j, p,
             {"lib_seed", "phrases", "phrase_len", "context_lengths", "prompt_tokens",
              "output_tokens"});
  get_uint(j, p, "lib_seed", s.lib_seed);
  get_uint(j, p, "phrases", s.phrases);
  get_uint(j, p, "phrase_len", s.phrase_len);
  get_uint_array(j, p, "context_lengths", s.context_lengths);
  get_uint(j, p, "prompt_tokens", s.prompt_tokens);
  get_uint(j, p, "output_tokens", s.output_tokens);
}

void parse_async(const ordered_json& j, AsyncBuildConfig& a) {
  const std::string p = "async_build";
  check_keys(j, p, {"prompt_tokens", "output_tokens", "phrases", "phrase_len", "lib_seed"});
  get_uint(j, p, "prompt_tokens", a.prompt_tokens);
  get_uint(j, p, "output_tokens", a.output_tokens);
  get_uint(j, p, "phrases", a.phrases);
  get_uint(j, p, "phrase_len", a.phrase_len);
  get_uint(j, p, "lib_seed", a.lib_seed);
}

ordered_json to_json(const ScenarioConfig& c) {
  ordered_json j;
  j["scenario"] = c.scenario;
  j["seeds"] = c.seeds;
  j["out_dir"] = c.out_dir;
  j["workload"] = {{"num_sessions", c.workload.num_sessions},
                   {"num_long", c.workload.num_long},
                   {"long_prompt_tokens", c.workload.long_prompt_tokens},
                   {"short_prompt_tokens", c.workload.short_prompt_tokens},
                   {"long_turns", c.workload.long_turns},
                   {"short_turns", c.workload.short_turns},
                   {"followup_tokens", c.workload.followup_tokens},
                   {"output_tokens", c.workload.output_tokens},
                   {"long_output_tokens", c.workload.long_output_tokens},
                   {"arrival_gap", c.workload.arrival_gap},
                   {"think_time", c.workload.think_time},
                   {"classify_threshold", c.workload.classify_threshold}};
  j["pool"] = {{"N", c.pool_blocks}, {"tpb", c.tokens_per_block}};
  j["server"] = {{"max_running", c.max_running}};
  j["sched"] = {{"lambda_max", c.sched.lambda_max}, {"k", c.sched.k},
                {"epsilon", c.sched.epsilon},       {"a", c.sched.a},
                {"b", c.sched.b},                   {"c", c.sched.c},
                {"pi_correction", c.sched.pi_correction},
                {"k_p", c.sched.k_p},               {"k_i", c.sched.k_i}};
  j["spec"] = {{"n_propose", c.spec.n_propose},
               {"top_k", c.spec.top_k},
               {"max_context_len", c.spec.max_context_len},
               {"max_batch_size", c.spec.max_batch_size},
               {"min_match", c.spec.min_match},
               {"session_weight", c.spec.session_weight},
               {"draft_policy", c.spec.draft_policy == DraftPolicy::LatestOnly
                                    ? "latest_only"
                                    : "prefer_earlier"},
               {"sam_max_states", c.spec.sam_max_states}};
  j["collab"] = {{"warmup_large_steps", c.collab.collab.warmup_large_steps},
                 {"max_large_steps_per_escalation",
                  c.collab.collab.max_large_steps_per_escalation},
                 {"max_total_steps", c.collab.collab.max_total_steps},
                 {"task_units", c.collab.task_units},
                 {"hard_fraction", c.collab.hard_fraction},
                 {"large_step_seconds", c.collab.large_step_seconds},
                 {"small_step_factor", c.collab.small_step_factor},
                 {"tool_seconds", c.collab.tool_seconds},
                 {"small_only_retries", c.collab.small_only_retries}};
  j["compress"] = {{"theta_ctx", c.compress.compress.theta_ctx},
                   {"theta_search", c.compress.compress.theta_search},
                   {"ratio", c.compress.compress.ratio},
                   {"loops", c.compress.loops},
                   {"env_tokens_per_loop", c.compress.env_tokens_per_loop},
                   {"think_tokens", c.compress.think_tokens},
                   {"tool", c.compress.tool}};
  ordered_json tools = ordered_json::object();
  for (const auto& [name, t] : c.latency.tools)
    tools[name] = {{"mean", t.mean}, {"jitter", t.jitter}};
  j["latency"] = {{"prefill_per_uncached_token", c.latency.prefill_per_uncached_token},
                  {"decode_per_forward_pass", c.latency.decode_per_forward_pass},
                  {"draft_verify_overhead_per_token",
                   c.latency.draft_verify_overhead_per_token},
                  {"sam_build_per_token", c.latency.sam_build_per_token},
                  {"distill_latency", c.latency.distill_latency},
                  {"small_model_pass_factor", c.latency.small_model_pass_factor},
                  {"tools", tools}};
  j["sweep"] = {{"lib_seed", c.sweep.lib_seed},
                {"phrases", c.sweep.phrases},
                {"phrase_len", c.sweep.phrase_len},
                {"context_lengths", c.sweep.context_lengths},
                {"prompt_tokens", c.sweep.prompt_tokens},
                {"output_tokens", c.sweep.output_tokens}};
  j["async_build"] = {{"prompt_tokens", c.async_build.prompt_tokens},
                      {"output_tokens", c.async_build.output_tokens},
                      {"phrases", c.async_build.phrases},
                      {"phrase_len", c.async_build.phrase_len},
                      {"lib_seed", c.async_build.lib_seed}};
  return j;
}

ScenarioConfig from_json(const ordered_json& j) {
  ScenarioConfig c;
  check_keys(j, "",
             {"scenario", "seeds", "out_dir", "workload", "pool", "server", "sched", "spec",
              "collab", "compress", "latency", "sweep", "async_build"});
  get_string(j, "", "scenario", c.scenario);
  get_uint_array(j, "", "seeds", c.seeds);
  get_string(j, "", "out_dir", c.out_dir);
  if (j.contains("workload")) parse_workload(j.at("workload"), c.workload);
  if (j.contains("pool")) {
    check_keys(j.at("pool"), "pool", {"N", "tpb"});
    get_uint(j.at("pool"), "pool", "N", c.pool_blocks);
    get_uint(j.at("pool"), "pool", "tpb", c.tokens_per_block);
  }
  if (j.contains("server")) {
    check_keys(j.at("server"), "server", {"max_running"});
    get_uint(j.at("server"), "server", "max_running", c.max_running);
  }
  if (j.contains("sched")) parse_sched(j.at("sched"), c.sched);
  if (j.contains("spec")) parse_spec(j.at("spec"), c.spec);
  if (j.contains("collab")) parse_collab(j.at("collab"), c.collab);
  if (j.contains("compress")) parse_compress(j.at("compress"), c.compress);
  if (j.contains("latency")) parse_latency(j.at("latency"), c.latency);
  if (j.contains("sweep")) parse_sweep(j.at("sweep"), c.sweep);
  if (j.contains("async_build")) parse_async(j.at("async_build"), c.async_build);
  c.validate();
  return c;
}

const std::vector<std::string> kScenarios = {
    "sched_compare", "lambda_trace", "ote_sweep", "sam_async",
    "collab",        "compress",     "composition", "serve"};

}  // namespace

ScenarioConfig::ScenarioConfig() {
  // The shared sections default to the contended scheduler-comparison regime;
  // presets adjust per scenario.
  SchedCompareConfig sc;
  workload = sc.workload;
  pool_blocks = sc.server.pool_blocks;
  tokens_per_block = sc.server.tokens_per_block;
  max_running = sc.server.max_running;
  sched = sc.server.sched;
  latency = sc.server.latency;
}

SchedCompareConfig ScenarioConfig::sched_compare_config() const {
  SchedCompareConfig sc;
  sc.workload = workload;
  sc.server.pool_blocks = pool_blocks;
  sc.server.tokens_per_block = tokens_per_block;
  sc.server.max_running = max_running;
  sc.server.sched = sched;
  sc.server.latency = latency;
  return sc;
}

CompositionConfig ScenarioConfig::composition_config() const {
  CompositionConfig cc;
  cc.workload = workload;
  cc.server.pool_blocks = pool_blocks;
  cc.server.tokens_per_block = tokens_per_block;
  cc.server.max_running = max_running;
  cc.server.sched = sched;
  cc.server.latency = latency;
  cc.spec = spec;
  cc.collab = collab;
  cc.compress = compress.compress;
  return cc;
}

void ScenarioConfig::validate() const {
  if (std::find(kScenarios.begin(), kScenarios.end(), scenario) == kScenarios.end())
    fail("scenario", "unknown scenario \"" + scenario + "\"");
  if (seeds.empty()) fail("seeds", "must list at least one seed");
  if (pool_blocks == 0) fail("pool.N", "must be > 0");
  if (tokens_per_block == 0) fail("pool.tpb", "must be > 0");
  if (max_running == 0) fail("server.max_running", "must be > 0");
  try {
    workload.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());  // already dotted: workload.<field>
  }
  if (sched.lambda_max <= 0) fail("sched.lambda_max", "must be > 0");
  if (sched.k <= 0) fail("sched.k", "must be > 0");
  if (sched.epsilon <= 0) fail("sched.epsilon", "must be > 0");
  if (spec.n_propose < 1) fail("spec.n_propose", "must be >= 1");
  if (spec.min_match < 1) fail("spec.min_match", "must be >= 1");
  if (spec.session_weight < 0) fail("spec.session_weight", "must be >= 0");
  if (spec.sam_max_states < 3) fail("spec.sam_max_states", "must be >= 3");
  if (collab.collab.max_total_steps == 0) fail("collab.max_total_steps", "must be > 0");
  if (collab.task_units == 0) fail("collab.task_units", "must be > 0");
  if (collab.hard_fraction < 0 || collab.hard_fraction > 1)
    fail("collab.hard_fraction", "must be in [0, 1]");
  if (collab.large_step_seconds <= 0) fail("collab.large_step_seconds", "must be > 0");
  if (collab.small_step_factor <= 0) fail("collab.small_step_factor", "must be > 0");
  if (compress.compress.theta_ctx == 0) fail("compress.theta_ctx", "must be > 0");
  if (compress.compress.theta_search < 0 || compress.compress.theta_search > 1)
    fail("compress.theta_search", "must be in [0, 1]");
  if (compress.compress.ratio <= 0 || compress.compress.ratio > 1)
    fail("compress.ratio", "must be in (0, 1]");
  if (compress.loops == 0) fail("compress.loops", "must be > 0");
  if (latency.prefill_per_uncached_token < 0)
    fail("latency.prefill_per_uncached_token", "must be >= 0");
  if (latency.decode_per_forward_pass < 0)
    fail("latency.decode_per_forward_pass", "must be >= 0");
  if (latency.draft_verify_overhead_per_token < 0)
    fail("latency.draft_verify_overhead_per_token", "must be >= 0");
  if (latency.sam_build_per_token < 0) fail("latency.sam_build_per_token", "must be >= 0");
  if (latency.distill_latency < 0) fail("latency.distill_latency", "must be >= 0");
  if (latency.small_model_pass_factor < 0)
    fail("latency.small_model_pass_factor", "must be >= 0");
  for (const auto& [name, t] : latency.tools)
    if (t.mean < 0 || t.jitter < 0) fail("latency.tools." + name, "must be >= 0");
  if (sweep.context_lengths.empty()) fail("sweep.context_lengths", "must not be empty");
  if (sweep.output_tokens == 0) fail("sweep.output_tokens", "must be > 0");
  if (async_build.prompt_tokens == 0) fail("async_build.prompt_tokens", "must be > 0");
  if (async_build.output_tokens == 0) fail("async_build.output_tokens", "must be > 0");
}

const std::vector<std::string>& preset_names() { return kScenarios; }

ScenarioConfig preset(const std::string& name) {
  if (std::find(kScenarios.begin(), kScenarios.end(), name) == kScenarios.end())
    fail("scenario", "unknown preset \"" + name + "\"");
  ScenarioConfig c;
  c.scenario = name;
  if (name == "composition" || name == "serve") {
    CompositionConfig cc;
    c.workload = cc.workload;
    c.pool_blocks = cc.server.pool_blocks;
    c.tokens_per_block = cc.server.tokens_per_block;
    c.max_running = cc.server.max_running;
  }
  return c;
}

ScenarioConfig parse_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const ordered_json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return from_json(j);
}

std::string dump_config(const ScenarioConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

ScenarioConfig apply_override(const ScenarioConfig& cfg, const std::string& key_value) {
  auto eq = key_value.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set expects key=value, got \"" + key_value + "\"");
  std::string key = key_value.substr(0, eq);
  std::string value = key_value.substr(eq + 1);

  ordered_json doc = to_json(cfg);
  ordered_json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (const std::string& p : parts) {
    if (!node->is_object() || !node->contains(p))
      throw ConfigError(key + ": unknown config key");
    node = &(*node)[p];
  }

  auto parse_scalar = [&](const std::string& text, const ordered_json& like) -> ordered_json {
    try {
      if (like.is_boolean()) {
        if (text == "true") return true;
        if (text == "false") return false;
        throw ConfigError("");
      }
      if (like.is_number_unsigned()) return ordered_json(std::stoull(text));
      if (like.is_number()) return ordered_json(std::stod(text));
      return ordered_json(text);
    } catch (...) {
      throw ConfigError(key + ": cannot parse \"" + text + "\"");
    }
  };

  if (node->is_array()) {
    // Comma-separated list; element type taken from the existing first element.
    ordered_json like = node->empty() ? ordered_json(0u) : (*node)[0];
    ordered_json arr = ordered_json::array();
    std::stringstream vs(value);
    std::string item;
    while (std::getline(vs, item, ',')) arr.push_back(parse_scalar(item, like));
    *node = std::move(arr);
  } else if (node->is_object()) {
    throw ConfigError(key + ": refers to a section, not a value");
  } else {
    *node = parse_scalar(value, *node);
  }
  return from_json(doc);
}

std::string describe_config_keys() {
  ordered_json doc = to_json(ScenarioConfig{});
  std::string out;
  std::function<void(const ordered_json&, const std::string&)> walk =
      [&](const ordered_json& node, const std::string& path) {
        if (node.is_object()) {
          for (const auto& [k, v] : node.items()) walk(v, join(path, k));
        } else {
          out += "  " + path + " = " + node.dump() + "\n";
        }
      };
  walk(doc, "");
  return out;
}

}  // namespace agentsim
