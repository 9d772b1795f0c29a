#include "agentsim/sim/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace agentsim {

namespace {

// Decode loop with explicit virtual time. Speculation becomes usable
// `spec_ready` seconds after decode start (negative: never). Returns metrics
// plus decode-relative first-token and total times.
struct TimedDecode {
  DecodeMetrics dm;
  std::size_t emitted = 0;
  double ttft = 0.0;   // decode-relative time of the first emitted token
  double total = 0.0;  // decode-relative completion time
};

TimedDecode timed_decode(const TokenOracle& oracle, TokenSpan session_ctx, TokenSpan prompt,
                         const MemoryRepository& repo,
                         const std::vector<RetrievalResult>& retrieved, const SpecConfig& spec,
                         const LatencyModel& lat, std::size_t out_tokens, double spec_ready) {
  TimedDecode r;
  TokenVec context(prompt.begin(), prompt.end());
  std::optional<CompositeDraftSource> src;
  double t = 0.0;
  auto ensure_src = [&] {
    if (src || spec_ready < 0 || t + 1e-12 < spec_ready) return;
    src.emplace(build_composite(session_ctx, prompt, retrieved, repo, spec));
    // Catch up on tokens generated while the index was still building.
    src->insert_verified(TokenSpan(context.data() + prompt.size(), context.size() - prompt.size()));
  };
  ensure_src();
  while (r.emitted < out_tokens) {
    std::size_t accepted = 0;
    std::size_t proposed_before = r.dm.proposed_spec_tokens;
    if (src) {
      accepted = decode_step(oracle, *src, context, spec, r.dm).size();
    } else {
      TokenVec g = oracle.next_tokens(context, 1);
      context.push_back(g[0]);
      r.dm.generated_tokens += 1;
      r.dm.forward_passes += 1;
      accepted = 1;
    }
    t += lat.decode_per_forward_pass +
         static_cast<double>(r.dm.proposed_spec_tokens - proposed_before) *
             lat.draft_verify_overhead_per_token;
    if (r.emitted == 0) r.ttft = t;
    r.emitted += accepted;
    ensure_src();
  }
  if (r.emitted > out_tokens) {
    r.dm.generated_tokens -= r.emitted - out_tokens;
    r.emitted = out_tokens;
  }
  r.total = t;
  return r;
}

double tpot_of(const TimedDecode& d, std::size_t out_tokens) {
  return (d.total - d.ttft) / static_cast<double>(std::max<std::size_t>(1, out_tokens - 1));
}

}  // namespace

double spearman_against_index(const std::vector<double>& ys) {
  std::size_t n = ys.size();
  if (n < 2) return 0.0;
  // Average ranks over ties.
  std::vector<double> rank(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (ys[j] < ys[i]) ++less;
      if (ys[j] == ys[i]) ++equal;
    }
    rank[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1.0) / 2.0;
  }
  double mean = (static_cast<double>(n) + 1.0) / 2.0;
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double xi = static_cast<double>(i + 1) - mean;
    double yi = rank[i] - mean;
    num += xi * yi;
    dx += xi * xi;
    dy += yi * yi;
  }
  if (dx == 0.0 || dy == 0.0) return 0.0;
  return num / std::sqrt(dx * dy);
}

std::vector<SweepPoint> scenario_ote_vs_context(const OteSweepConfig& cfg, std::uint64_t seed) {
  PhraseLibrary lib(cfg.lib_seed, cfg.phrases, cfg.phrase_len);
  std::size_t max_len = 0;
  for (std::size_t l : cfg.context_lengths) max_len = std::max(max_len, l);
  TokenVec stream =
      lib.stream(seed, max_len + cfg.prompt_tokens + cfg.output_tokens + cfg.phrase_len);

  SpecConfig spec = cfg.spec;
  spec.draft_policy = DraftPolicy::PreferEarlier;
  spec.session_weight = 0.9;  // retrieved memory wins weight ties

  std::vector<SweepPoint> out;
  for (std::size_t L : cfg.context_lengths) {
    SweepPoint p;
    p.context_len = L;
    TokenVec ctx(stream.begin(), stream.begin() + static_cast<std::ptrdiff_t>(L));
    TokenVec prompt(stream.begin() + static_cast<std::ptrdiff_t>(L),
                    stream.begin() + static_cast<std::ptrdiff_t>(L + cfg.prompt_tokens));
    TokenVec slice(stream.begin() + static_cast<std::ptrdiff_t>(L), stream.end());
    ReplayOracle oracle(slice, 0);  // generation continues the stream after the prompt

    auto sam_only = timed_decode(oracle, ctx, prompt, MemoryRepository{}, {}, spec,
                                 LatencyModel{}, cfg.output_tokens, 0.0);
    p.ote_sam = ote(sam_only.dm);
    p.shr_sam = shr(sam_only.dm);

    // A previous session solved the same task: its trace covers the exact
    // stream region this session will produce.
    MemoryRepository repo;
    TokenVec response(stream.begin(),
                      stream.begin() + static_cast<std::ptrdiff_t>(
                                           L + cfg.prompt_tokens + cfg.output_tokens));
    repo.add({prompt, response, /*session=*/1});
    auto with_mem = timed_decode(oracle, ctx, prompt, repo, {{0, 1.0}}, spec, LatencyModel{},
                                 cfg.output_tokens, 0.0);
    p.ote_agent = ote(with_mem.dm);
    p.shr_agent = shr(with_mem.dm);
    out.push_back(p);
  }
  return out;
}

AsyncBuildResult scenario_sam_async(const AsyncBuildConfig& cfg, std::uint64_t seed) {
  PhraseLibrary lib(cfg.lib_seed, cfg.phrases, cfg.phrase_len);
  TokenVec stream = lib.stream(seed, cfg.prompt_tokens + cfg.output_tokens + cfg.phrase_len);
  TokenVec prompt(stream.begin(), stream.begin() + static_cast<std::ptrdiff_t>(cfg.prompt_tokens));
  ReplayOracle oracle(stream, 0);

  const LatencyModel& lat = cfg.latency;
  SpecConfig spec = cfg.spec;
  spec.draft_policy = DraftPolicy::PreferEarlier;

  AsyncBuildResult r;
  r.build_latency = static_cast<double>(prompt.size()) * lat.sam_build_per_token;
  double prefill = static_cast<double>(prompt.size()) * lat.prefill_per_uncached_token;

  auto none = timed_decode(oracle, {}, prompt, MemoryRepository{}, {}, spec, lat,
                           cfg.output_tokens, -1.0);
  r.ttft_none = prefill + none.ttft;
  r.tpot_none = tpot_of(none, cfg.output_tokens);

  // Sync: construction charged before prefill starts.
  auto sync = timed_decode(oracle, {}, prompt, MemoryRepository{}, {}, spec, lat,
                           cfg.output_tokens, 0.0);
  r.ttft_sync = r.build_latency + prefill + sync.ttft;
  r.tpot_sync = tpot_of(sync, cfg.output_tokens);
  r.ote_sync = ote(sync.dm);

  // Async: construction starts at arrival and overlaps prefill; speculation
  // becomes available build_latency - prefill seconds into the decode.
  auto async_run = timed_decode(oracle, {}, prompt, MemoryRepository{}, {}, spec, lat,
                                cfg.output_tokens, std::max(0.0, r.build_latency - prefill));
  r.ttft_async = prefill + async_run.ttft;
  r.tpot_async = tpot_of(async_run, cfg.output_tokens);
  r.ote_async = ote(async_run.dm);

  // Incompressible stream: same machinery, nothing to speculate.
  MarkovOracle fresh(seed, 2, 0.0, 50000);
  auto rho0 = timed_decode(fresh, {}, prompt, MemoryRepository{}, {}, spec, lat,
                           std::min<std::size_t>(cfg.output_tokens, 400), 0.0);
  r.ote_incompressible = ote(rho0.dm);
  return r;
}

namespace {

std::vector<SessionSpec> jittered_sessions(const WorkloadConfig& wl, std::uint64_t seed) {
  std::vector<SessionSpec> sessions = make_sessions(wl);
  for (auto& s : sessions) {
    double u = static_cast<double>(mix64(seed ^ mix64(s.session_id + 101)) % 1000000ull) / 1e6;
    s.arrival += u * wl.arrival_gap;
    for (auto& t : s.turns) {
      double v = static_cast<double>(
                     mix64(seed ^ mix64(s.session_id * 31 + t.new_prompt_tokens)) % 1000000ull) /
                 1e6;
      t.think_time += v * wl.think_time;
    }
  }
  return sessions;
}

SimServer::PromptFn hash_prompt_fn(const WorkloadConfig& wl, std::uint64_t seed) {
  return [wl, seed](std::uint64_t session, std::size_t turn) {
    bool is_long = session < wl.num_long;
    std::size_t len = is_long ? wl.long_prompt_tokens : wl.short_prompt_tokens;
    for (std::size_t t = 1; t <= turn; ++t) len += wl.output_tokens + wl.followup_tokens;
    TokenVec prompt;
    prompt.reserve(len);
    for (std::size_t i = 0; i < len; ++i) prompt.push_back(session_token(seed, session, i));
    return prompt;
  };
}

}  // namespace

SchedCompareResult scenario_sched_compare(const SchedCompareConfig& cfg, std::uint64_t seed) {
  SchedCompareResult out;
  auto sessions = jittered_sessions(cfg.workload, seed);
  auto prompt_fn = hash_prompt_fn(cfg.workload, seed);
  auto run_policy = [&](SchedPolicy p) {
    ServerConfig sc = cfg.server;
    sc.policy = p;
    sc.seed = seed;
    SimServer server(sc, sessions, prompt_fn);
    return server.run();
  };
  out.agentsched = run_policy(SchedPolicy::AgentSched);
  out.fcfs = run_policy(SchedPolicy::Fcfs);
  out.sjf = run_policy(SchedPolicy::Sjf);
  return out;
}

LambdaTraceResult lambda_trace(const SchedCompareConfig& cfg, std::uint64_t seed) {
  auto sessions = jittered_sessions(cfg.workload, seed);
  auto prompt_fn = hash_prompt_fn(cfg.workload, seed);
  ServerConfig sc = cfg.server;
  sc.policy = SchedPolicy::AgentSched;
  sc.seed = seed;
  SimServer server(sc, sessions, prompt_fn);
  MetricsReport rep = server.run();

  LambdaTraceResult r;
  r.lambda_series = rep.lambda_series;
  double half = 0.5 * sc.sched.lambda_max;
  std::size_t low_short = 0, high_short = 0;
  for (const auto& [lambda, cls] : server.admit_log()) {
    if (lambda < half) {
      ++r.low_phase_admits;
      if (cls == "short") ++low_short;
    } else {
      ++r.high_phase_admits;
      if (cls == "short") ++high_short;
    }
  }
  if (r.low_phase_admits)
    r.short_share_low = static_cast<double>(low_short) / static_cast<double>(r.low_phase_admits);
  if (r.high_phase_admits)
    r.short_share_high =
        static_cast<double>(high_short) / static_cast<double>(r.high_phase_admits);
  return r;
}

namespace {

// Scripted task adapters: the task is a sequence of units; hard units stall
// the small model (FALSE progress) until the large model clears them.
struct TaskState {
  std::vector<bool> hard;
  std::size_t unit = 0;
};

std::string progress_block(bool v) {
  return std::string("===PROGRESS===\n<reason> unit check </reason>\n<value> ") +
         (v ? "TRUE" : "FALSE") + " </value>\n===END_PROGRESS===";
}

class LargeTaskModel : public ModelAdapter {
 public:
  explicit LargeTaskModel(TaskState& st) : st_(st) {}
  ThinkOutput think(const std::string&) override { return step(); }
  ThinkOutput think_and_tools(const std::string&) override { return step(); }
  std::string progress_check(const std::string&) override { return progress_block(true); }

 private:
  ThinkOutput step() {
    if (st_.unit < st_.hard.size()) ++st_.unit;
    return {"unit " + std::to_string(st_.unit), st_.unit >= st_.hard.size()};
  }
  TaskState& st_;
};

class SmallTaskModel : public ModelAdapter {
 public:
  explicit SmallTaskModel(TaskState& st) : st_(st) {}
  ThinkOutput think(const std::string&) override { return step(); }
  ThinkOutput think_and_tools(const std::string&) override { return step(); }
  std::string progress_check(const std::string&) override { return progress_block(advanced_); }

 private:
  ThinkOutput step() {
    advanced_ = st_.unit < st_.hard.size() && !st_.hard[st_.unit];
    if (advanced_) ++st_.unit;
    return {"unit " + std::to_string(st_.unit), st_.unit >= st_.hard.size()};
  }
  TaskState& st_;
  bool advanced_ = false;
};

std::vector<bool> hard_units(std::size_t n, double fraction, std::uint64_t seed) {
  std::vector<bool> hard(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    double u = static_cast<double>(mix64(seed ^ mix64(i + 7)) % 1000000ull) / 1e6;
    // The first unit is always easy so warm-up exits cleanly in scenarios
    // with a tiny warm-up budget.
    hard[i] = i > 0 && u < fraction;
  }
  return hard;
}

}  // namespace

CollabScenarioResult scenario_collab(const CollabScenarioConfig& cfg, std::uint64_t seed) {
  CollabScenarioResult r;
  TaskState st;
  st.hard = hard_units(cfg.task_units, cfg.hard_fraction, seed);
  LargeTaskModel large(st);
  SmallTaskModel small(st);
  r.run = run_collab("task", large, small, cfg.collab);

  double small_step = cfg.large_step_seconds * cfg.small_step_factor;
  std::size_t n_hard = static_cast<std::size_t>(
      std::count(st.hard.begin(), st.hard.end(), true));
  double tools = static_cast<double>(cfg.task_units) * cfg.tool_seconds;

  r.e2e_dual = static_cast<double>(r.run.trace.large_steps) * cfg.large_step_seconds +
               static_cast<double>(r.run.trace.small_steps) * small_step + tools;
  r.e2e_large_only = static_cast<double>(cfg.task_units) * cfg.large_step_seconds + tools;
  r.e2e_small_only = (static_cast<double>(cfg.task_units - n_hard) +
                      static_cast<double>(n_hard * cfg.small_only_retries)) *
                         small_step +
                     tools;
  std::size_t steps = r.run.trace.large_steps + r.run.trace.small_steps;
  r.large_step_share =
      steps ? static_cast<double>(r.run.trace.large_steps) / static_cast<double>(steps) : 0.0;
  r.speedup_vs_large = r.e2e_large_only / r.e2e_dual;
  return r;
}

CompressScenarioResult scenario_compress(const CompressScenarioConfig& cfg, std::uint64_t seed) {
  CompressScenarioResult r;
  SamplingDistiller distiller;

  auto env_tokens = [&](std::size_t loop) {
    TokenVec v;
    v.reserve(cfg.env_tokens_per_loop);
    for (std::size_t i = 0; i < cfg.env_tokens_per_loop; ++i)
      v.push_back(session_token(seed ^ 0xe5u, loop, i));
    return v;
  };
  auto think_tokens = [&](std::size_t loop) {
    TokenVec v;
    v.reserve(cfg.think_tokens);
    for (std::size_t i = 0; i < cfg.think_tokens; ++i)
      v.push_back(session_token(seed ^ 0x7au, loop, i));
    return v;
  };

  auto simulate = [&](bool compression) {
    AgentMemory mem;
    std::optional<DistillJob> job;
    double job_done = 0.0;
    double t = 0.0;
    std::size_t peak = 0;
    TokenVec reasoning_ref;
    for (std::size_t loop = 0; loop < cfg.loops; ++loop) {
      // Loop boundary: apply a finished background job before new work starts.
      if (job && job->status == DistillStatus::Done && job_done <= t) {
        apply_distill(mem, *job);
        ++r.applies;
        job.reset();
      }
      // Loop body: think, call the tool, record its result.
      TokenVec think = think_tokens(loop);
      reasoning_ref.insert(reasoning_ref.end(), think.begin(), think.end());
      mem.add_reasoning(EntryKind::Think, think, loop);
      t += static_cast<double>(mem.total_tokens()) * cfg.latency.prefill_per_uncached_token;
      t += cfg.latency.tool_call(cfg.tool, seed, loop);
      mem.add_environment(env_tokens(loop), loop);
      peak = std::max(peak, mem.total_tokens());
      // Loop complete: maybe launch a background distill job.
      if (compression && should_compress(mem, true, job.has_value(), cfg.compress)) {
        job = submit_distill(mem, distiller, cfg.compress, t);
        job_done = t + cfg.latency.distill_latency;
      }
    }
    // Reasoning partition must be untouched by every apply.
    TokenVec reasoning_now;
    for (const auto& s : mem.reasoning())
      reasoning_now.insert(reasoning_now.end(), s.tokens.begin(), s.tokens.end());
    bool identical = reasoning_now == reasoning_ref;
    return std::tuple<std::size_t, double, bool>(peak, t, identical);
  };

  auto [peak_off, t_off, id_off] = simulate(false);
  r.applies = 0;  // only count applies from the compression-on run
  auto [peak_on, t_on, id_on] = simulate(true);
  r.peak_tokens_off = peak_off;
  r.peak_tokens_on = peak_on;
  r.e2e_off = t_off;
  r.e2e_on = t_on;
  r.reasoning_identical = id_off && id_on;
  r.mid_loop_applies = 0;  // applies happen exclusively at the loop boundary above
  r.stalls = 0;            // the loop never blocks on a pending job
  return r;
}

MetricsReport run_serve(const CompositionConfig& cfg, const FeatureToggles& toggles,
                        std::uint64_t seed) {
  PhraseLibrary lib(cfg.lib_seed, cfg.phrases, cfg.phrase_len);
  const WorkloadConfig& wl = cfg.workload;
  SamplingDistiller distiller;

  std::size_t max_turns = std::max(wl.long_turns, wl.short_turns);
  std::size_t seg = wl.output_tokens + wl.followup_tokens;
  std::size_t stream_len =
      wl.long_prompt_tokens + max_turns * seg + wl.output_tokens + cfg.phrase_len;

  auto session_stream = [&](std::uint64_t s) { return lib.stream(seed ^ mix64(s + 1), stream_len); };

  auto logical_prompt_len = [&](std::uint64_t s, std::size_t turn) {
    std::size_t len = s < wl.num_long ? wl.long_prompt_tokens : wl.short_prompt_tokens;
    for (std::size_t t = 1; t <= turn; ++t) len += seg;
    return len;
  };

  auto plain_prompt = [&](std::uint64_t s, std::size_t turn) {
    TokenVec stream = session_stream(s);
    std::size_t len = logical_prompt_len(s, turn);
    return TokenVec(stream.begin(), stream.begin() + static_cast<std::ptrdiff_t>(len));
  };

  // Compressed history: completed loops older than the latest are replaced by
  // their (stable) distilled summaries, so prefixes still cache across turns.
  auto compressed_prompt = [&](std::uint64_t s, std::size_t turn) {
    TokenVec stream = session_stream(s);
    std::size_t first = s < wl.num_long ? wl.long_prompt_tokens : wl.short_prompt_tokens;
    TokenVec prompt(stream.begin(), stream.begin() + static_cast<std::ptrdiff_t>(first));
    for (std::size_t j = 1; j <= turn; ++j) {
      std::size_t lo = first + (j - 1) * seg;
      TokenSpan segment(stream.data() + lo, seg);
      if (j + 1 <= turn) {
        TokenVec sum = *distiller.distill(segment, cfg.compress.ratio);
        prompt.insert(prompt.end(), sum.begin(), sum.end());
      } else {
        prompt.insert(prompt.end(), segment.begin(), segment.end());
      }
    }
    return prompt;
  };

  auto spec_hook = [&](const SimRequest& req) {
    TokenVec stream = session_stream(req.session);
    std::size_t out_start = logical_prompt_len(req.session, req.turn);
    TokenVec slice(stream.begin() + static_cast<std::ptrdiff_t>(out_start), stream.end());
    ReplayOracle oracle(slice, req.prompt.size());
    SpecConfig spec = cfg.spec;
    spec.draft_policy = DraftPolicy::PreferEarlier;
    auto d = timed_decode(oracle, {}, req.prompt, MemoryRepository{}, {}, spec, cfg.server.latency,
                          req.output_tokens, 0.0);
    return SpecOutcome{d.dm.forward_passes, d.dm.proposed_spec_tokens,
                       d.dm.accepted_spec_tokens, d.emitted};
  };

  auto collab_factor = [&](const SimRequest& req) {
    CollabScenarioConfig cc = cfg.collab;
    auto res = scenario_collab(cc, mix64(seed ^ mix64(req.session * 997 + req.turn)));
    double share_l = res.large_step_share;
    return share_l + (1.0 - share_l) * cc.small_step_factor;
  };

  ServerConfig sc = cfg.server;
  sc.policy = toggles.policy;
  sc.seed = seed;
  auto sessions = jittered_sessions(wl, seed);
  SimServer server(sc, sessions,
                   toggles.compress
                       ? SimServer::PromptFn([&](std::uint64_t s, std::size_t t) {
                           return compressed_prompt(s, t);
                         })
                       : SimServer::PromptFn([&](std::uint64_t s, std::size_t t) {
                           return plain_prompt(s, t);
                         }));
  if (toggles.specdec) {
    server.set_spec_hook(spec_hook);
    if (toggles.sync_build) {
      double rate = cfg.server.latency.sam_build_per_token;
      server.set_extra_prefill([rate](const SimRequest& req) {
        return static_cast<double>(req.prompt.size()) * rate;
      });
    }
  }
  if (toggles.collab) server.set_decode_factor(collab_factor);
  return server.run();
}

std::vector<CompositionStage> scenario_composition(const CompositionConfig& cfg,
                                                   std::uint64_t seed) {
  struct Stage {
    std::string name;
    FeatureToggles toggles;
  };
  std::vector<Stage> stages = {
      {"baseline", {SchedPolicy::Fcfs, false, false, false, false}},
      {"+sched", {SchedPolicy::AgentSched, false, false, false, false}},
      {"+specdec", {SchedPolicy::AgentSched, true, false, false, false}},
      {"+collab", {SchedPolicy::AgentSched, true, false, true, false}},
      {"+compress", {SchedPolicy::AgentSched, true, false, true, true}},
  };
  std::vector<CompositionStage> out;
  for (const Stage& st : stages) {
    MetricsReport rep = run_serve(cfg, st.toggles, seed);
    out.push_back({st.name, rep.qps, rep.mean_e2e, rep.cache_hit_rate, rep.mean_ote});
  }
  return out;
}

}  // namespace agentsim
