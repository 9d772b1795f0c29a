#include "agentsim/sim/server.hpp"

#include <algorithm>
#include <cmath>

namespace agentsim {

SimServer::SimServer(ServerConfig cfg, std::vector<SessionSpec> sessions, PromptFn prompt_fn)
    : cfg_(std::move(cfg)),
      sessions_(std::move(sessions)),
      prompt_fn_(std::move(prompt_fn)),
      pool_(cfg_.pool_blocks, cfg_.tokens_per_block) {
  cfg_.validate();
  cfg_.sched.tpb = cfg_.tokens_per_block;
}

void SimServer::enqueue_turn(std::uint64_t session, std::size_t turn, double arrival) {
  events_.schedule(arrival, [this, session, turn](double now) {
    const SessionSpec& spec = sessions_[session];
    Waiting w;
    w.req.id = next_id_++;
    w.req.session = session;
    w.req.turn = turn;
    w.req.arrival = now;
    w.req.prompt = prompt_fn_(session, turn);
    w.req.output_tokens = spec.turns[turn].output_tokens;
    w.req.cls = spec.cls;
    w.enqueue_seq = enqueue_seq_++;
    queue_.push_back(std::move(w));
    kick(now);
  });
}

std::optional<std::size_t> SimServer::pick(const std::vector<QueueEntry>& entries, double now) {
  auto feasible = [&](const QueueEntry& e) {
    if (running_.size() >= cfg_.max_running) return false;
    const Waiting& w = queue_[e.id];
    RequestFootprint fp{e.hit, e.need, e.prompt_tok};
    return pool_.feasible(w.req.prompt, fp);
  };
  std::optional<RequestId> chosen;
  switch (cfg_.policy) {
    case SchedPolicy::Fcfs:
      chosen = baseline_fcfs(entries, feasible);
      break;
    case SchedPolicy::Sjf:
      chosen = baseline_sjf(entries, feasible);
      break;
    case SchedPolicy::AgentSched: {
      update_lambda(sched_state_, entries, pool_.free_blocks() + pool_.evictable_blocks(),
                    cfg_.sched);
      report_.lambda_series.push_back({now, sched_state_.lambda});
      chosen = select(entries, sched_state_, cfg_.sched, feasible);
      break;
    }
  }
  if (!chosen) return std::nullopt;
  return static_cast<std::size_t>(*chosen);
}

void SimServer::kick(double now) {
  for (;;) {
    if (queue_.empty() || running_.size() >= cfg_.max_running) break;
    std::vector<QueueEntry> entries;
    entries.reserve(queue_.size());
    for (std::size_t i = 0; i < queue_.size(); ++i) {
      const Waiting& w = queue_[i];
      RequestFootprint fp = pool_.footprint(w.req.prompt);
      // QueueEntry.id indexes into queue_ for this round.
      entries.push_back({i, fp.prompt_tok, fp.hit, fp.need, now - w.req.arrival, w.enqueue_seq});
    }
    report_.queue_depth_series.push_back({now, static_cast<double>(queue_.size())});
    auto idx = pick(entries, now);
    if (!idx) break;
    RequestFootprint fp{entries[*idx].hit, entries[*idx].need, entries[*idx].prompt_tok};
    admit(*idx, fp, now);
  }
}

void SimServer::admit(std::size_t queue_idx, const RequestFootprint& fp, double now) {
  Admitted adm;
  adm.req = std::move(queue_[queue_idx].req);
  queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(queue_idx));
  adm.fp = fp;
  adm.admit_time = now;
  if (!pool_.admit(adm.req.id, adm.req.prompt, fp, now))
    throw std::logic_error("admit after positive feasibility check");
  if (cfg_.policy == SchedPolicy::AgentSched)
    admit_log_.emplace_back(sched_state_.lambda, adm.req.cls);

  if (spec_hook_) {
    adm.spec = spec_hook_(adm.req);
  } else {
    adm.spec = SpecOutcome{adm.req.output_tokens, 0, 0, adm.req.output_tokens};
  }

  const LatencyModel& lat = cfg_.latency;
  std::size_t cached_tok = std::min(adm.fp.hit * cfg_.tokens_per_block, adm.req.prompt.size());
  double prefill = static_cast<double>(adm.req.prompt.size() - cached_tok) *
                   lat.prefill_per_uncached_token;
  if (extra_prefill_) prefill += extra_prefill_(adm.req);
  double decode = static_cast<double>(adm.spec.passes) * lat.decode_per_forward_pass +
                  static_cast<double>(adm.spec.proposed) * lat.draft_verify_overhead_per_token;
  if (decode_factor_) decode *= decode_factor_(adm.req);
  double per_pass = adm.spec.passes > 0 ? decode / static_cast<double>(adm.spec.passes) : 0.0;
  double done_at = now + prefill + decode;

  // KV growth for generated tokens, spread across the decode phase.
  std::size_t tpb = cfg_.tokens_per_block;
  std::size_t plen = adm.req.prompt.size();
  std::size_t blocks_now = (plen + tpb - 1) / tpb;
  std::size_t blocks_end = (plen + adm.req.output_tokens + tpb - 1) / tpb;
  std::uint64_t id = adm.req.id;
  for (std::size_t g = 1; g <= blocks_end - blocks_now; ++g) {
    double t = now + prefill +
               decode * static_cast<double>(g) / static_cast<double>(blocks_end - blocks_now + 1);
    events_.schedule(t, [this, id](double tnow) {
      if (running_.count(id) && !pool_.grow(id, tnow)) ++grow_failures_;
    });
  }

  RequestMetrics m;
  m.request_id = adm.req.id;
  m.cls = adm.req.cls;
  m.arrival = adm.req.arrival;
  m.ttft = (now - adm.req.arrival) + prefill + per_pass;
  m.e2e = done_at - adm.req.arrival;
  m.tpot = (m.e2e - m.ttft) /
           static_cast<double>(std::max<std::size_t>(1, adm.req.output_tokens - 1));
  m.hit_blocks = adm.fp.hit;
  m.need_blocks = adm.fp.need;
  if (adm.spec.proposed > 0) {
    m.ote = static_cast<double>(adm.spec.generated) / static_cast<double>(adm.spec.passes);
    m.shr = static_cast<double>(adm.spec.accepted) / static_cast<double>(adm.spec.proposed);
  }
  m.output_tokens = adm.req.output_tokens;
  report_.requests.push_back(m);

  running_.emplace(id, std::move(adm));
  events_.schedule(done_at, [this, id](double tnow) { complete(id, tnow); });
}

void SimServer::complete(std::uint64_t id, double now) {
  auto it = running_.find(id);
  const Admitted& adm = it->second;
  pool_.release(id, now);
  const SessionSpec& spec = sessions_[adm.req.session];
  std::size_t next_turn = adm.req.turn + 1;
  if (next_turn < spec.turns.size()) {
    double gap = spec.turns[adm.req.turn].think_time;
    for (const std::string& tool : spec.turns[adm.req.turn].tools)
      gap += cfg_.latency.tool_call(tool, cfg_.seed, tool_calls_++);
    enqueue_turn(adm.req.session, next_turn, now + gap);
  }
  running_.erase(it);
  kick(now);
}

MetricsReport SimServer::run() {
  for (const SessionSpec& s : sessions_)
    if (!s.turns.empty()) enqueue_turn(s.session_id, 0, s.arrival);
  report_.makespan = events_.run();
  if (!queue_.empty())
    throw std::logic_error("simulation ended with permanently infeasible requests queued");
  report_.cache_hit_rate = pool_.admitted_requests() ? pool_.hit_rate() : 0.0;
  std::sort(report_.requests.begin(), report_.requests.end(),
            [](const RequestMetrics& a, const RequestMetrics& b) {
              return a.request_id < b.request_id;
            });
  report_.finalize();
  return report_;
}

}  // namespace agentsim
