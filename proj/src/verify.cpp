#include "agentsim/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "agentsim/collab.hpp"
#include "agentsim/driver.hpp"
#include "agentsim/sched.hpp"
#include "agentsim/sim/scenarios.hpp"
#include "agentsim/specdec.hpp"

namespace agentsim {

namespace {

namespace fs = std::filesystem;

using Clock = std::chrono::steady_clock;

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& msg) {
    if (!cond) {
      ok = false;
      if (!detail.str().empty()) detail << "; ";
      detail << msg;
    }
  }
  void note(const std::string& msg) {
    if (detail.str().empty()) detail << msg;
  }
};

CriterionResult finish(int id, const std::string& name, Check& c, Clock::time_point t0) {
  CriterionResult r;
  r.id = id;
  r.name = name;
  r.passed = c.ok;
  r.detail = c.detail.str();
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

// --- 1: suffix-automaton correctness ---------------------------------------

CriterionResult criterion_sam() {
  auto t0 = Clock::now();
  Check c;
  std::mt19937_64 rng(20240817);
  for (int trial = 0; trial < 500 && c.ok; ++trial) {
    std::size_t n = 1 + rng() % 200;
    TokenId vocab = static_cast<TokenId>(2 + rng() % 15);  // <= 16
    TokenVec corpus(n);
    for (auto& t : corpus) t = static_cast<TokenId>(rng() % vocab);

    SuffixAutomaton sam;
    c.require(sam.extend_all(corpus), "extend_all failed");

    std::size_t bound = n <= 1 ? 2 : 2 * n - 1;
    c.require(sam.state_count() <= bound, "state count exceeds 2n-1");

    // Brute-force distinct substring set, tokens packed as bytes.
    std::unordered_set<std::string> subs;
    for (std::size_t i = 0; i < n; ++i) {
      std::string s;
      for (std::size_t j = i; j < n; ++j) {
        s.push_back(static_cast<char>(corpus[j]));
        subs.insert(s);
      }
    }
    c.require(sam.distinct_substrings() == subs.size(), "distinct substring count mismatch");

    // Every brute-force substring accepted (sampled exhaustively up to n=200
    // this is at most ~20k strings per corpus; sample to keep within budget).
    std::size_t checked = 0;
    for (std::size_t i = 0; i < n && c.ok; i += 1 + rng() % 3) {
      for (std::size_t len = 1; i + len <= n && c.ok; len += 1 + rng() % 4) {
        TokenVec sub(corpus.begin() + static_cast<std::ptrdiff_t>(i),
                     corpus.begin() + static_cast<std::ptrdiff_t>(i + len));
        c.require(sam.accepts(sub), "substring rejected");
        ++checked;
      }
    }
    c.require(checked > 0, "no substrings sampled");

    // Random non-substrings must be rejected.
    for (int k = 0; k < 20 && c.ok; ++k) {
      std::size_t len = 1 + rng() % std::min<std::size_t>(n, 12);
      TokenVec probe(len);
      for (auto& t : probe) t = static_cast<TokenId>(rng() % vocab);
      std::string key;
      for (auto t : probe) key.push_back(static_cast<char>(t));
      if (subs.count(key)) continue;
      c.require(!sam.accepts(probe), "non-substring accepted");
    }
  }
  double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  c.require(secs < 10.0, "runtime exceeded 10 s");
  c.note("500 corpora, substring sets equal");
  return finish(1, "suffix-automaton substring correctness", c, t0);
}

// --- 2: speculative losslessness --------------------------------------------

CriterionResult criterion_lossless() {
  auto t0 = Clock::now();
  Check c;
  std::mt19937_64 rng(77001);
  PhraseLibrary lib(5, 24, 16, 4000);
  for (int trial = 0; trial < 100 && c.ok; ++trial) {
    double rho = static_cast<double>(rng() % 1000) / 999.0;
    MarkovOracle oracle(rng(), 2, rho, 4000);

    TokenVec session_ctx = lib.stream(rng(), 200 + rng() % 400);
    TokenVec prompt = lib.stream(rng(), 24 + rng() % 40);

    MemoryRepository repo;
    std::size_t entries = rng() % 4;
    for (std::size_t e = 0; e < entries; ++e) {
      MemoryEntry m;
      m.query = prompt;  // similar queries so retrieval fires
      if (rng() % 2) m.query.push_back(static_cast<TokenId>(rng() % 4000));
      m.response = lib.stream(rng(), 150);
      m.session_id = 100 + e;
      repo.add(std::move(m));
    }

    SpecConfig cfg;
    cfg.draft_policy = (trial % 2) ? DraftPolicy::PreferEarlier : DraftPolicy::LatestOnly;
    cfg.n_propose = 2 + rng() % 5;
    auto retrieved = retrieve_top_k(prompt, repo, cfg.top_k, /*session_id=*/1);
    CompositeDraftSource src = build_composite(session_ctx, prompt, retrieved, repo, cfg);

    StopRule stop;
    stop.max_new_tokens = 100 + rng() % 60;
    DecodeResult spec = run_decode(oracle, src, prompt, stop, cfg);
    TokenVec greedy = greedy_decode(oracle, prompt, stop);
    c.require(spec.output == greedy, "speculative output diverged from greedy");
  }
  double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  c.require(secs < 30.0, "runtime exceeded 30 s");
  c.note("100 oracle/source pairs, exact match");
  return finish(2, "speculative decoding losslessness", c, t0);
}

// --- 3: OTE/SHR trend --------------------------------------------------------

CriterionResult criterion_trend() {
  auto t0 = Clock::now();
  Check c;
  auto pts = scenario_ote_vs_context(OteSweepConfig{}, 1);
  std::vector<double> ys;
  for (const auto& p : pts) ys.push_back(p.ote_sam);
  double rho = spearman_against_index(ys);
  c.require(rho > 0.8, "spearman <= 0.8");
  for (const auto& p : pts)
    c.require(p.ote_agent + 1e-9 >= p.ote_sam, "ensemble OTE below session-only");
  double rho0 = scenario_sam_async(AsyncBuildConfig{}, 1).ote_incompressible;
  c.require(std::abs(rho0 - 1.0) <= 0.05, "rho=0 OTE outside 1.0 +/- 0.05");
  std::ostringstream n;
  n << "spearman " << rho << ", rho0 OTE " << rho0;
  c.note(n.str());
  return finish(3, "OTE/SHR monotone context trend", c, t0);
}

// --- 4: scheduler ordering ---------------------------------------------------

CriterionResult criterion_sched() {
  auto t0 = Clock::now();
  Check c;
  SchedCompareConfig cfg;
  std::vector<double> ha, hf, hs;
  int ord = 0;
  double sum_a = 0, sum_f = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto r = scenario_sched_compare(cfg, seed);
    ha.push_back(r.agentsched.cache_hit_rate);
    hf.push_back(r.fcfs.cache_hit_rate);
    hs.push_back(r.sjf.cache_hit_rate);
    if (r.agentsched.cache_hit_rate > r.fcfs.cache_hit_rate &&
        r.fcfs.cache_hit_rate > r.sjf.cache_hit_rate)
      ++ord;
    sum_a += r.agentsched.mean_e2e;
    sum_f += r.fcfs.mean_e2e;
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  c.require(median(ha) > median(hf) && median(hf) > median(hs),
            "median hit ordering violated");
  c.require(ord >= 4, "per-seed hit ordering held on fewer than 4 of 5 seeds");
  c.require(sum_a < sum_f, "agentsched mean E2E not below fcfs");
  std::ostringstream n;
  n << "ordering on " << ord << "/5 seeds, median hits " << median(ha) << "/" << median(hf)
    << "/" << median(hs);
  c.note(n.str());
  return finish(4, "cache-aware scheduler ordering", c, t0);
}

// --- 5: lambda algebra -------------------------------------------------------

CriterionResult criterion_lambda() {
  auto t0 = Clock::now();
  Check c;
  SchedulerParams p;

  // z = 1: D = 10, U + eps = 10.
  {
    SchedulerState st;
    std::vector<QueueEntry> q = {{0, 160, 0, 10, 0.0, 0}};
    double lam = update_lambda(st, q, /*free=*/9, p);
    c.require(std::abs(lam - 0.5 * p.lambda_max) <= 1e-12, "z=1 does not map to 0.5*lambda_max");
  }

  // Strict monotonicity in D at fixed U over a 100-point grid.
  {
    double prev = -1.0;
    for (std::size_t d = 1; d <= 100; ++d) {
      SchedulerState st;
      std::vector<QueueEntry> q = {{0, 160, 0, d, 0.0, 0}};
      double lam = update_lambda(st, q, /*free=*/100, p);
      c.require(lam > prev, "lambda not strictly increasing in D");
      prev = lam;
    }
  }

  // a = c = 0, lambda -> 0: selection order equals SJF order on 1000 queues.
  {
    SchedulerParams sp = p;
    sp.a = 0.0;
    sp.c = 0.0;
    std::mt19937_64 rng(90210);
    for (int trial = 0; trial < 1000 && c.ok; ++trial) {
      std::size_t m = 2 + rng() % 19;
      std::vector<QueueEntry> q;
      std::vector<std::size_t> prompts;
      for (std::size_t i = 0; i < m; ++i) prompts.push_back(16 * (i + 1) + rng() % 16);
      std::shuffle(prompts.begin(), prompts.end(), rng);
      for (std::size_t i = 0; i < m; ++i)
        q.push_back({static_cast<RequestId>(i), prompts[i], rng() % 50, rng() % 50,
                     static_cast<double>(rng() % 100), i});
      auto ours = score_order(q, /*lambda=*/0.0, sp);
      auto ref = sjf_order(q);
      c.require(ours == ref, "lambda->0 order differs from SJF");
    }
  }
  c.note("midpoint exact, monotone in D, SJF limit on 1000 queues");
  return finish(5, "shadow-price algebra", c, t0);
}

// --- 6: async build ----------------------------------------------------------

CriterionResult criterion_async() {
  auto t0 = Clock::now();
  Check c;
  auto r = scenario_sam_async(AsyncBuildConfig{}, 1);
  c.require(r.ttft_async <= 1.10 * r.ttft_none, "TTFT(async) > 1.10 * TTFT(none)");
  c.require(r.ttft_sync >= r.ttft_none + r.build_latency - 1e-9,
            "TTFT(sync) below TTFT(none) + build latency");
  c.require(r.tpot_sync <= r.tpot_async + 1e-12 && r.tpot_async <= r.tpot_none + 1e-12,
            "TPOT ordering sync <= async <= none violated");
  std::ostringstream n;
  n << "ttft " << r.ttft_none << "/" << r.ttft_sync << "/" << r.ttft_async << " (build "
    << r.build_latency << ")";
  c.note(n.str());
  return finish(6, "asynchronous index construction", c, t0);
}

// --- 7: collab budgets -------------------------------------------------------

std::string progress_text(bool value) {
  return std::string("===PROGRESS===\n<reason> check </reason>\n<value> ") +
         (value ? "TRUE" : "FALSE") + " </value>\n===END_PROGRESS===";
}

class ScriptedModel : public ModelAdapter {
 public:
  ScriptedModel(std::string progress, std::size_t final_after)
      : progress_(std::move(progress)), final_after_(final_after) {}

  void push_progress(std::string p) { scripted_.push_back(std::move(p)); }

  ThinkOutput think(const std::string&) override { return next(); }
  ThinkOutput think_and_tools(const std::string&) override { return next(); }
  std::string progress_check(const std::string&) override {
    if (!scripted_.empty()) {
      auto p = scripted_.front();
      scripted_.pop_front();
      return p;
    }
    return progress_;
  }

 private:
  ThinkOutput next() {
    ++calls_;
    return {"step", final_after_ > 0 && calls_ >= final_after_};
  }
  std::string progress_;
  std::deque<std::string> scripted_;
  std::size_t final_after_ = 0;
  std::size_t calls_ = 0;
};

CriterionResult criterion_collab() {
  auto t0 = Clock::now();
  Check c;
  CollabConfig cfg{/*K_L=*/2, /*B_L=*/3, /*max_total_steps=*/18};

  {  // always-TRUE small model: large usage equals the warm-up budget
    ScriptedModel large(progress_text(true), 0);
    ScriptedModel small(progress_text(true), 5);
    auto r = run_collab("q", large, small, cfg);
    c.require(r.trace.large_steps == cfg.warmup_large_steps,
              "large steps != K_L under always-TRUE");
  }
  {  // always-FALSE: per-escalation bound and the exact budget identity
    ScriptedModel large(progress_text(false), 0);
    ScriptedModel small(progress_text(false), 0);
    auto r = run_collab("q", large, small, cfg);
    c.require(r.trace.large_steps ==
                  cfg.warmup_large_steps +
                      cfg.max_large_steps_per_escalation * r.trace.escalations,
              "large steps != K_L + B_L * escalations under always-FALSE");
    std::size_t run = 0, max_run = 0;
    bool warmup = true;
    for (const auto& ev : r.trace.events) {
      if (ev.kind == StepKind::Escalate) warmup = false;
      if (ev.kind == StepKind::LargeThink && !warmup) {
        ++run;
        max_run = std::max(max_run, run);
      }
      if (ev.kind == StepKind::DeEscalate) run = 0;
    }
    c.require(max_run <= cfg.max_large_steps_per_escalation,
              "large steps per escalation exceed B_L");
  }
  {  // malformed PROGRESS triggers an escalation
    ScriptedModel large(progress_text(true), 0);
    ScriptedModel small(progress_text(true), 6);
    small.push_progress("garbled output, no block");
    auto r = run_collab("q", large, small, cfg);
    c.require(r.trace.malformed_progress >= 1, "malformed progress not recorded");
    c.require(r.trace.escalations >= 1, "malformed progress did not escalate");
  }
  c.note("warm-up, escalation budget, malformed-progress identities");
  return finish(7, "dual-model budget identities", c, t0);
}

// --- 8: compression safety ---------------------------------------------------

CriterionResult criterion_compress() {
  auto t0 = Clock::now();
  Check c;
  auto r = scenario_compress(CompressScenarioConfig{}, 1);
  double reduction =
      1.0 - static_cast<double>(r.peak_tokens_on) / static_cast<double>(r.peak_tokens_off);
  c.require(reduction >= 0.40, "peak context reduction below 40%");
  c.require(r.reasoning_identical, "reasoning entries not byte-identical");
  c.require(r.mid_loop_applies == 0, "apply occurred mid-loop");
  c.require(r.stalls == 0, "stall attributable to a pending distill job");
  std::ostringstream n;
  n << "peak " << r.peak_tokens_on << " vs " << r.peak_tokens_off << " tokens";
  c.note(n.str());
  return finish(8, "asynchronous compression safety", c, t0);
}

// --- 9: composition ----------------------------------------------------------

CriterionResult criterion_composition() {
  auto t0 = Clock::now();
  Check c;
  auto stages = scenario_composition(CompositionConfig{}, 1);
  for (std::size_t i = 1; i < stages.size(); ++i)
    c.require(stages[i].qps + 1e-12 >= stages[i - 1].qps,
              "QPS decreased at stage " + stages[i].name);
  double total = stages.back().qps / stages.front().qps;
  c.require(total >= 1.3, "total improvement below 1.3x");
  std::ostringstream n;
  n << "total improvement " << total << "x over " << stages.size() << " stages";
  c.note(n.str());
  return finish(9, "cumulative feature composition", c, t0);
}

// --- 10: determinism ---------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CriterionResult criterion_determinism(const VerifyOptions& opts) {
  auto t0 = Clock::now();
  Check c;
  if (!opts.cli_path.empty()) {
    fs::path base(opts.work_dir);
    std::error_code ec;
    fs::remove_all(base, ec);
    for (int run = 0; run < 2; ++run) {
      fs::path dir = base / ("run" + std::to_string(run));
      fs::create_directories(dir);
      std::string cmd = "\"" + opts.cli_path + "\" run sched_compare --seed 7 --out-dir \"" +
                        dir.string() + "\" > /dev/null 2>&1";
      c.require(std::system(cmd.c_str()) == 0, "cmd_run invocation failed");
    }
    std::size_t compared = 0;
    if (c.ok) {
      for (const auto& e : fs::directory_iterator(base / "run0")) {
        if (e.path().extension() != ".csv") continue;
        ++compared;
        c.require(slurp(e.path()) == slurp(base / "run1" / e.path().filename()),
                  "CSV bytes differ: " + e.path().filename().string());
      }
      c.require(compared > 0, "no CSV reports produced");
    }
    c.note("two subprocess runs, " + std::to_string(compared) + " CSV files byte-identical");
  } else {
    ScenarioConfig cfg = preset("sched_compare");
    RunOutput a = run_one(cfg, 7);
    RunOutput b = run_one(cfg, 7);
    c.require(a.files.size() == b.files.size(), "report file count differs");
    for (std::size_t i = 0; i < a.files.size() && c.ok; ++i)
      c.require(a.files[i].content == b.files[i].content,
                "report bytes differ: " + a.files[i].name);
    c.note("two in-process runs byte-identical");
  }
  return finish(10, "byte-identical reports per (config, seed)", c, t0);
}

}  // namespace

std::vector<CriterionResult> run_verification(const VerifyOptions& opts) {
  std::vector<CriterionResult> out;
  out.push_back(criterion_sam());
  out.push_back(criterion_lossless());
  out.push_back(criterion_trend());
  out.push_back(criterion_sched());
  out.push_back(criterion_lambda());
  out.push_back(criterion_async());
  out.push_back(criterion_collab());
  out.push_back(criterion_compress());
  out.push_back(criterion_composition());
  out.push_back(criterion_determinism(opts));
  return out;
}

std::string format_verification(const std::vector<CriterionResult>& results) {
  std::ostringstream s;
  for (const auto& r : results) {
    s << (r.passed ? "PASS" : "FAIL") << "  " << r.id << ". " << r.name;
    if (!r.detail.empty()) s << " — " << r.detail;
    char buf[32];
    std::snprintf(buf, sizeof buf, " (%.2fs)", r.seconds);
    s << buf << "\n";
  }
  return s.str();
}

bool all_passed(const std::vector<CriterionResult>& results) {
  for (const auto& r : results)
    if (!r.passed) return false;
  return !results.empty();
}

}  // namespace agentsim
