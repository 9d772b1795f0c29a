#pragma once

#include <functional>
#include <map>
#include <optional>

#include "agentsim/kvcache.hpp"
#include "agentsim/sched.hpp"
#include "agentsim/sim/clock.hpp"
#include "agentsim/sim/latency.hpp"
#include "agentsim/sim/metrics.hpp"
#include "agentsim/sim/workload.hpp"

namespace agentsim {

enum class SchedPolicy { Fcfs, Sjf, AgentSched };

// Decode outcome for one request when speculation is enabled; produced by a
// scenario-supplied hook (which typically runs the real decode loop against a
// mock oracle). With speculation off, passes == generated.
struct SpecOutcome {
  std::size_t passes = 0;
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  std::size_t generated = 0;
};

struct SimRequest {
  std::uint64_t id = 0;
  std::uint64_t session = 0;
  std::size_t turn = 0;
  double arrival = 0.0;
  TokenVec prompt;
  std::size_t output_tokens = 0;
  std::string cls;
};

struct ServerConfig {
  std::size_t pool_blocks = 512;
  std::size_t tokens_per_block = 16;
  SchedPolicy policy = SchedPolicy::AgentSched;
  SchedulerParams sched;
  std::size_t max_running = 4;
  LatencyModel latency;
  std::uint64_t seed = 1;

  void validate() const {
    if (pool_blocks == 0) throw std::invalid_argument("pool.blocks must be > 0");
    if (tokens_per_block == 0) throw std::invalid_argument("pool.tokens_per_block must be > 0");
    if (max_running == 0) throw std::invalid_argument("server.max_running must be > 0");
    latency.validate();
  }
};

// Discrete-event model of one serving instance: requests queue, the selected
// scheduling policy admits them against the block pool, and admitted requests
// prefill, decode (growing their KV footprint), complete, and chain the next
// session turn.
class SimServer {
 public:
  using PromptFn = std::function<TokenVec(std::uint64_t session, std::size_t turn)>;
  using SpecHook = std::function<SpecOutcome(const SimRequest&)>;

  SimServer(ServerConfig cfg, std::vector<SessionSpec> sessions, PromptFn prompt_fn);

  // Multiplier on decode duration (e.g. small-model execution share); 1.0
  // when unset.
  using FactorFn = std::function<double(const SimRequest&)>;

  // Extra seconds charged before prefill (e.g. synchronous index builds).
  using ExtraPrefillFn = std::function<double(const SimRequest&)>;

  void set_spec_hook(SpecHook hook) { spec_hook_ = std::move(hook); }
  void set_decode_factor(FactorFn fn) { decode_factor_ = std::move(fn); }
  void set_extra_prefill(ExtraPrefillFn fn) { extra_prefill_ = std::move(fn); }

  MetricsReport run();

  std::size_t grow_failures() const { return grow_failures_; }
  const std::vector<std::pair<double, std::string>>& admit_log() const { return admit_log_; }

 private:
  struct Waiting {
    SimRequest req;
    std::uint64_t enqueue_seq = 0;
  };
  struct Admitted {
    SimRequest req;
    RequestFootprint fp;
    double admit_time = 0.0;
    SpecOutcome spec;
  };

  void enqueue_turn(std::uint64_t session, std::size_t turn, double arrival);
  void kick(double now);
  std::optional<std::size_t> pick(const std::vector<QueueEntry>& entries, double now);
  void admit(std::size_t queue_idx, const RequestFootprint& fp, double now);
  void complete(std::uint64_t id, double now);

  ServerConfig cfg_;
  std::vector<SessionSpec> sessions_;
  PromptFn prompt_fn_;
  SpecHook spec_hook_;
  FactorFn decode_factor_;
  ExtraPrefillFn extra_prefill_;

  EventQueue events_;
  BlockPool pool_;
  SchedulerState sched_state_;
  std::vector<Waiting> queue_;
  std::map<std::uint64_t, Admitted> running_;
  std::uint64_t next_id_ = 0;
  std::uint64_t enqueue_seq_ = 0;
  std::size_t grow_failures_ = 0;
  std::uint64_t tool_calls_ = 0;
  MetricsReport report_;
  std::vector<std::pair<double, std::string>> admit_log_;  // (lambda at admit, class)
};

}  // namespace agentsim
