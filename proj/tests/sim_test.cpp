#include <cmath>

#include "agentsim/sim/scenarios.hpp"
#include "doctest.h"

using namespace agentsim;

// ---------------------------------------------------------------------------
// Event queue
// ---------------------------------------------------------------------------

TEST_CASE("events run in (time, insertion) order and never in the past") {
  EventQueue q;
  std::vector<int> order;
  q.schedule(2.0, [&](double) { order.push_back(2); });
  q.schedule(1.0, [&](double now) {
    order.push_back(1);
    q.schedule(1.5, [&](double) { order.push_back(3); });
    CHECK_THROWS_AS(q.schedule(now - 0.1, [](double) {}), std::logic_error);
  });
  q.schedule(1.0, [&](double) { order.push_back(4); });  // same time: insertion order
  double end = q.run();
  CHECK(order == std::vector<int>{1, 4, 3, 2});
  CHECK(end == doctest::Approx(2.0));
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

TEST_CASE("markov oracle output is a pure function of (seed, context)") {
  MarkovOracle a(42, 2, 0.7, 1000);
  MarkovOracle b(42, 2, 0.7, 1000);
  TokenVec ctx = {5, 9, 5, 9, 5};
  CHECK(a.next_tokens(ctx, 32) == b.next_tokens(ctx, 32));
  // Re-querying after other calls gives the same answer (no hidden state).
  (void)a.next_tokens(TokenVec{1, 2, 3}, 8);
  CHECK(a.next_tokens(ctx, 32) == b.next_tokens(ctx, 32));
  // Different seeds diverge.
  MarkovOracle c(43, 2, 0.7, 1000);
  CHECK(a.next_tokens(ctx, 32) != c.next_tokens(ctx, 32));
}

TEST_CASE("markov oracle with rho=1 copies recent n-gram continuations") {
  MarkovOracle m(7, 2, 1.0, 50000);
  // Build a context that repeats a bigram; continuation must be copied.
  TokenVec ctx = {10, 20, 30, 40, 10, 20};
  TokenVec out = m.next_tokens(ctx, 1);
  CHECK(out[0] == 30);
}

TEST_CASE("replay oracle continues its stream exactly") {
  TokenVec stream = {1, 2, 3, 4, 5, 6, 7, 8};
  ReplayOracle r(stream, 0);
  TokenVec ctx(stream.begin(), stream.begin() + 3);
  CHECK(r.next_tokens(ctx, 3) == TokenVec{4, 5, 6});
}

// ---------------------------------------------------------------------------
// Latency model
// ---------------------------------------------------------------------------

TEST_CASE("tool latency draws are deterministic and within jitter bounds") {
  LatencyModel lat;
  double d1 = lat.tool_call("url_crawler", 1, 0);
  CHECK(d1 == lat.tool_call("url_crawler", 1, 0));
  CHECK(d1 != lat.tool_call("url_crawler", 1, 1));
  for (std::uint64_t i = 0; i < 50; ++i) {
    double d = lat.tool_call("document_qa", 3, i);
    CHECK(d >= 17.55 - 2.0);
    CHECK(d <= 17.55 + 2.0);
  }
  CHECK_THROWS_AS(lat.tool_call("no_such_tool", 1, 0), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Server basics
// ---------------------------------------------------------------------------

namespace {

SimServer::PromptFn hash_prompts(std::uint64_t seed, const WorkloadConfig& w) {
  return [seed, w](std::uint64_t session, std::size_t turn) {
    // Cumulative prompt: first turn + per-turn growth, deterministic content.
    std::size_t total = (session < w.num_long ? w.long_prompt_tokens : w.short_prompt_tokens) +
                        turn * (w.followup_tokens + w.output_tokens);
    TokenVec p(total);
    for (std::size_t i = 0; i < total; ++i) p[i] = session_token(seed, session, i);
    return p;
  };
}

}  // namespace

TEST_CASE("single always-busy session obeys Little's law (QPS * E2E ~ 1)") {
  WorkloadConfig w;
  w.num_sessions = 1;
  w.num_long = 0;
  w.short_prompt_tokens = 1200;
  w.short_turns = 20;
  w.think_time = 0.0;
  w.arrival_gap = 0.0;
  ServerConfig sc;
  sc.pool_blocks = 8000;
  sc.max_running = 1;
  SimServer server(sc, make_sessions(w), hash_prompts(11, w));
  MetricsReport r = server.run();
  REQUIRE(r.requests.size() == 20);
  double little = r.qps * r.mean_e2e;  // mean jobs in system; exactly 1 when saturated
  CHECK(little == doctest::Approx(1.0).epsilon(0.15));
  for (const auto& m : r.requests) {
    CHECK(m.ttft <= m.e2e + 1e-12);
    CHECK(m.tpot ==
          doctest::Approx((m.e2e - m.ttft) /
                          std::max<std::size_t>(1, m.output_tokens - 1)));
  }
}

TEST_CASE("a request that can never fit leaves the queue non-empty and throws") {
  WorkloadConfig w;
  w.num_sessions = 1;
  w.num_long = 1;
  w.long_prompt_tokens = 4000;  // 250 blocks
  w.long_turns = 1;
  ServerConfig sc;
  sc.pool_blocks = 100;
  SimServer server(sc, make_sessions(w), hash_prompts(11, w));
  CHECK_THROWS_WITH_AS(server.run(),
                       "simulation ended with permanently infeasible requests queued",
                       std::logic_error);
}

TEST_CASE("server runs are deterministic per (config, seed)") {
  SchedCompareConfig cfg;
  auto a = scenario_sched_compare(cfg, 3);
  auto b = scenario_sched_compare(cfg, 3);
  CHECK(a.agentsched.to_csv() == b.agentsched.to_csv());
  CHECK(a.fcfs.to_csv() == b.fcfs.to_csv());
  CHECK(a.sjf.to_csv() == b.sjf.to_csv());
}

// ---------------------------------------------------------------------------
// Scheduler comparison scenario
// ---------------------------------------------------------------------------

TEST_CASE("contended preset: hit ordering and hybrid latency win") {
  auto r = scenario_sched_compare(SchedCompareConfig{}, 1);
  CHECK(r.agentsched.cache_hit_rate > r.fcfs.cache_hit_rate);
  CHECK(r.fcfs.cache_hit_rate > r.sjf.cache_hit_rate);
  CHECK(r.agentsched.mean_e2e < r.fcfs.mean_e2e);
}

TEST_CASE("abundant blocks equalize hit rates; serial SJF beats FCFS on mean latency") {
  SchedCompareConfig cfg;
  cfg.workload.output_tokens = 192;
  cfg.workload.long_output_tokens = 512;
  cfg.server.pool_blocks = 6000;  // no eviction pressure
  cfg.server.max_running = 1;     // serial: pure service-order effects
  auto r = scenario_sched_compare(cfg, 1);
  CHECK(std::abs(r.agentsched.cache_hit_rate - r.fcfs.cache_hit_rate) < 0.01);
  CHECK(std::abs(r.fcfs.cache_hit_rate - r.sjf.cache_hit_rate) < 0.01);
  CHECK(r.sjf.mean_e2e <= r.fcfs.mean_e2e);
}

TEST_CASE("lambda trace stays in range and shifts admissions by pressure") {
  auto lt = lambda_trace(SchedCompareConfig{}, 1);
  REQUIRE(!lt.lambda_series.empty());
  SchedulerParams p;
  for (const auto& tp : lt.lambda_series) {
    CHECK(tp.value >= 0.0);
    CHECK(tp.value <= p.lambda_max);
  }
  CHECK(lt.low_phase_admits + lt.high_phase_admits > 0);
  // Low-pressure phases favor short requests; high-pressure favors longs.
  CHECK(lt.short_share_low > lt.short_share_high);
}

// ---------------------------------------------------------------------------
// Async build scenario
// ---------------------------------------------------------------------------

TEST_CASE("async index construction: TTFT and TPOT orderings") {
  auto r = scenario_sam_async(AsyncBuildConfig{}, 1);
  CHECK(r.ttft_async <= 1.10 * r.ttft_none);
  CHECK(r.ttft_sync >= r.ttft_none + r.build_latency - 1e-9);
  CHECK(r.tpot_sync <= r.tpot_async + 1e-12);
  CHECK(r.tpot_async <= r.tpot_none + 1e-12);
  CHECK(r.ote_incompressible == doctest::Approx(1.0).epsilon(0.05));
}

// ---------------------------------------------------------------------------
// Sweep / collab / compress / composition scenarios
// ---------------------------------------------------------------------------

TEST_CASE("OTE rises with context length; ensemble dominates session-only") {
  auto pts = scenario_ote_vs_context(OteSweepConfig{}, 2);
  std::vector<double> ys;
  for (const auto& p : pts) ys.push_back(p.ote_sam);
  CHECK(spearman_against_index(ys) > 0.8);
  for (const auto& p : pts) CHECK(p.ote_agent + 1e-9 >= p.ote_sam);
}

TEST_CASE("dual-model controller beats both single-model baselines") {
  auto r = scenario_collab(CollabScenarioConfig{}, 1);
  CHECK(r.e2e_dual < r.e2e_large_only);
  CHECK(r.e2e_dual < r.e2e_small_only);
  CHECK(r.large_step_share > 0.0);
  CHECK(r.large_step_share < 1.0);
}

TEST_CASE("compression halves peak context without touching reasoning") {
  auto r = scenario_compress(CompressScenarioConfig{}, 1);
  CHECK(r.peak_tokens_on <= r.peak_tokens_off * 0.6);
  CHECK(r.reasoning_identical);
  CHECK(r.mid_loop_applies == 0);
  CHECK(r.stalls == 0);
  CHECK(r.e2e_on <= r.e2e_off);
}

TEST_CASE("feature stages compose into nondecreasing throughput") {
  auto stages = scenario_composition(CompositionConfig{}, 2);
  REQUIRE(stages.size() == 5);
  for (std::size_t i = 1; i < stages.size(); ++i)
    CHECK(stages[i].qps + 1e-12 >= stages[i - 1].qps);
  CHECK(stages.back().qps / stages.front().qps >= 1.3);
}
