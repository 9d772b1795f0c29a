#include "agentsim/driver.hpp"

#include <sstream>

#include <json.hpp>

#include "agentsim/sim/metrics.hpp"

namespace agentsim {

using nlohmann::ordered_json;

namespace {

std::string tag(const ScenarioConfig& cfg, std::uint64_t seed, const std::string& suffix) {
  return cfg.scenario + "_seed" + std::to_string(seed) + "_" + suffix;
}

ordered_json report_summary(const MetricsReport& r) {
  return {{"qps", format_double(r.qps)},
          {"mean_ttft", format_double(r.mean_ttft)},
          {"mean_tpot", format_double(r.mean_tpot)},
          {"mean_e2e", format_double(r.mean_e2e)},
          {"cache_hit_rate", format_double(r.cache_hit_rate)},
          {"mean_ote", format_double(r.mean_ote)},
          {"mean_shr", format_double(r.mean_shr)},
          {"makespan", format_double(r.makespan)},
          {"requests", r.requests.size()}};
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

RunOutput run_sched_compare(const ScenarioConfig& cfg, std::uint64_t seed) {
  SchedCompareResult r = scenario_sched_compare(cfg.sched_compare_config(), seed);
  RunOutput out;
  out.files.push_back({tag(cfg, seed, "agentsched.csv"), r.agentsched.to_csv()});
  out.files.push_back({tag(cfg, seed, "fcfs.csv"), r.fcfs.to_csv()});
  out.files.push_back({tag(cfg, seed, "sjf.csv"), r.sjf.to_csv()});
  ordered_json j = {{"agentsched", report_summary(r.agentsched)},
                    {"fcfs", report_summary(r.fcfs)},
                    {"sjf", report_summary(r.sjf)}};
  out.files.push_back({tag(cfg, seed, "summary.json"), dump(j)});
  bool hit_order = r.agentsched.cache_hit_rate > r.fcfs.cache_hit_rate &&
                   r.fcfs.cache_hit_rate > r.sjf.cache_hit_rate;
  bool e2e_order = r.agentsched.mean_e2e < r.fcfs.mean_e2e;
  std::ostringstream s;
  s << "hit rates agentsched/fcfs/sjf = " << format_double(r.agentsched.cache_hit_rate) << "/"
    << format_double(r.fcfs.cache_hit_rate) << "/" << format_double(r.sjf.cache_hit_rate)
    << "\nmean e2e agentsched/fcfs/sjf = " << format_double(r.agentsched.mean_e2e) << "/"
    << format_double(r.fcfs.mean_e2e) << "/" << format_double(r.sjf.mean_e2e)
    << "\nhit ordering agentsched > fcfs > sjf: " << (hit_order ? "yes" : "no")
    << "\nmean e2e agentsched < fcfs: " << (e2e_order ? "yes" : "no") << "\n";
  out.summary = s.str();
  return out;
}

RunOutput run_lambda_trace(const ScenarioConfig& cfg, std::uint64_t seed) {
  LambdaTraceResult r = lambda_trace(cfg.sched_compare_config(), seed);
  RunOutput out;
  std::string csv = "t,lambda\n";
  for (const TimePoint& p : r.lambda_series)
    csv += format_double(p.t) + "," + format_double(p.value) + "\n";
  out.files.push_back({tag(cfg, seed, "lambda.csv"), csv});
  ordered_json j = {{"low_phase_admits", r.low_phase_admits},
                    {"high_phase_admits", r.high_phase_admits},
                    {"short_share_low", format_double(r.short_share_low)},
                    {"short_share_high", format_double(r.short_share_high)}};
  out.files.push_back({tag(cfg, seed, "summary.json"), dump(j)});
  std::ostringstream s;
  s << "short admission share: low-lambda " << format_double(r.short_share_low)
    << ", high-lambda " << format_double(r.short_share_high)
    << "\nlow-lambda phases admit more shorts: "
    << (r.short_share_low > r.short_share_high ? "yes" : "no") << "\n";
  out.summary = s.str();
  return out;
}

RunOutput run_ote_sweep(const ScenarioConfig& cfg, std::uint64_t seed) {
  OteSweepConfig sc = cfg.sweep;
  sc.spec = cfg.spec;
  std::vector<SweepPoint> pts = scenario_ote_vs_context(sc, seed);
  RunOutput out;
  std::string csv = "context_len,ote_sam,shr_sam,ote_agent,shr_agent\n";
  for (const SweepPoint& p : pts)
    csv += std::to_string(p.context_len) + "," + format_double(p.ote_sam) + "," +
           format_double(p.shr_sam) + "," + format_double(p.ote_agent) + "," +
           format_double(p.shr_agent) + "\n";
  out.files.push_back({tag(cfg, seed, "sweep.csv"), csv});
  std::vector<double> ys;
  for (const SweepPoint& p : pts) ys.push_back(p.ote_sam);
  double rho = spearman_against_index(ys);
  bool pointwise = true;
  for (const SweepPoint& p : pts)
    if (p.ote_agent + 1e-9 < p.ote_sam) pointwise = false;
  ordered_json j = {{"spearman_ote_sam", format_double(rho)},
                    {"agent_ge_sam_everywhere", pointwise}};
  out.files.push_back({tag(cfg, seed, "summary.json"), dump(j)});
  std::ostringstream s;
  s << "ote spearman vs context length: " << format_double(rho)
    << "\nensemble >= session-only at every point: " << (pointwise ? "yes" : "no") << "\n";
  out.summary = s.str();
  return out;
}

RunOutput run_sam_async(const ScenarioConfig& cfg, std::uint64_t seed) {
  AsyncBuildResult r = scenario_sam_async(cfg.async_build, seed);
  RunOutput out;
  std::string csv = "variant,ttft,tpot,ote\n";
  csv += "none," + format_double(r.ttft_none) + "," + format_double(r.tpot_none) + "," +
         format_double(1.0) + "\n";
  csv += "sync," + format_double(r.ttft_sync) + "," + format_double(r.tpot_sync) + "," +
         format_double(r.ote_sync) + "\n";
  csv += "async," + format_double(r.ttft_async) + "," + format_double(r.tpot_async) + "," +
         format_double(r.ote_async) + "\n";
  out.files.push_back({tag(cfg, seed, "async.csv"), csv});
  ordered_json j = {{"build_latency", format_double(r.build_latency)},
                    {"ttft_none", format_double(r.ttft_none)},
                    {"ttft_sync", format_double(r.ttft_sync)},
                    {"ttft_async", format_double(r.ttft_async)},
                    {"tpot_none", format_double(r.tpot_none)},
                    {"tpot_sync", format_double(r.tpot_sync)},
                    {"tpot_async", format_double(r.tpot_async)},
                    {"ote_incompressible", format_double(r.ote_incompressible)}};
  out.files.push_back({tag(cfg, seed, "summary.json"), dump(j)});
  std::ostringstream s;
  s << "ttft none/sync/async = " << format_double(r.ttft_none) << "/"
    << format_double(r.ttft_sync) << "/" << format_double(r.ttft_async)
    << " (build " << format_double(r.build_latency) << ")"
    << "\ntpot none/sync/async = " << format_double(r.tpot_none) << "/"
    << format_double(r.tpot_sync) << "/" << format_double(r.tpot_async) << "\n";
  out.summary = s.str();
  return out;
}

RunOutput run_collab_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  CollabScenarioResult r = scenario_collab(cfg.collab, seed);
  RunOutput out;
  std::string csv = "metric,value\n";
  csv += "e2e_dual," + format_double(r.e2e_dual) + "\n";
  csv += "e2e_large_only," + format_double(r.e2e_large_only) + "\n";
  csv += "e2e_small_only," + format_double(r.e2e_small_only) + "\n";
  csv += "large_step_share," + format_double(r.large_step_share) + "\n";
  csv += "speedup_vs_large," + format_double(r.speedup_vs_large) + "\n";
  out.files.push_back({tag(cfg, seed, "collab.csv"), csv});
  ordered_json j = {{"large_steps", r.run.trace.large_steps},
                    {"small_steps", r.run.trace.small_steps},
                    {"escalations", r.run.trace.escalations},
                    {"de_escalations", r.run.trace.de_escalations},
                    {"e2e_dual", format_double(r.e2e_dual)},
                    {"e2e_large_only", format_double(r.e2e_large_only)},
                    {"e2e_small_only", format_double(r.e2e_small_only)},
                    {"large_step_share", format_double(r.large_step_share)},
                    {"speedup_vs_large", format_double(r.speedup_vs_large)}};
  out.files.push_back({tag(cfg, seed, "summary.json"), dump(j)});
  std::ostringstream s;
  s << "e2e dual/large-only/small-only = " << format_double(r.e2e_dual) << "/"
    << format_double(r.e2e_large_only) << "/" << format_double(r.e2e_small_only)
    << "\nlarge step share " << format_double(r.large_step_share) << ", speedup vs large-only "
    << format_double(r.speedup_vs_large) << "\n";
  out.summary = s.str();
  return out;
}

RunOutput run_compress_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  CompressScenarioConfig sc = cfg.compress;
  sc.latency = cfg.latency;
  CompressScenarioResult r = scenario_compress(sc, seed);
  RunOutput out;
  std::string csv = "metric,value\n";
  csv += "peak_tokens_on," + std::to_string(r.peak_tokens_on) + "\n";
  csv += "peak_tokens_off," + std::to_string(r.peak_tokens_off) + "\n";
  csv += "applies," + std::to_string(r.applies) + "\n";
  csv += "e2e_on," + format_double(r.e2e_on) + "\n";
  csv += "e2e_off," + format_double(r.e2e_off) + "\n";
  out.files.push_back({tag(cfg, seed, "compress.csv"), csv});
  double reduction =
      1.0 - static_cast<double>(r.peak_tokens_on) / static_cast<double>(r.peak_tokens_off);
  ordered_json j = {{"peak_tokens_on", r.peak_tokens_on},
                    {"peak_tokens_off", r.peak_tokens_off},
                    {"peak_reduction", format_double(reduction)},
                    {"reasoning_identical", r.reasoning_identical},
                    {"applies", r.applies},
                    {"mid_loop_applies", r.mid_loop_applies},
                    {"stalls", r.stalls},
                    {"e2e_on", format_double(r.e2e_on)},
                    {"e2e_off", format_double(r.e2e_off)}};
  out.files.push_back({tag(cfg, seed, "summary.json"), dump(j)});
  std::ostringstream s;
  s << "peak context " << r.peak_tokens_on << " vs " << r.peak_tokens_off << " tokens ("
    << format_double(100.0 * reduction) << "% reduction)"
    << "\nreasoning byte-identical: " << (r.reasoning_identical ? "yes" : "no")
    << ", mid-loop applies " << r.mid_loop_applies << ", stalls " << r.stalls << "\n";
  out.summary = s.str();
  return out;
}

RunOutput run_composition(const ScenarioConfig& cfg, std::uint64_t seed) {
  std::vector<CompositionStage> stages = scenario_composition(cfg.composition_config(), seed);
  RunOutput out;
  std::string csv = "stage,qps,mean_e2e,cache_hit_rate,mean_ote\n";
  for (const CompositionStage& st : stages)
    csv += st.name + "," + format_double(st.qps) + "," + format_double(st.mean_e2e) + "," +
           format_double(st.cache_hit_rate) + "," + format_double(st.mean_ote) + "\n";
  out.files.push_back({tag(cfg, seed, "stages.csv"), csv});
  bool monotone = true;
  for (std::size_t i = 1; i < stages.size(); ++i)
    if (stages[i].qps + 1e-12 < stages[i - 1].qps) monotone = false;
  double total = stages.back().qps / stages.front().qps;
  ordered_json j = ordered_json::array();
  for (const CompositionStage& st : stages)
    j.push_back({{"stage", st.name},
                 {"qps", format_double(st.qps)},
                 {"mean_e2e", format_double(st.mean_e2e)},
                 {"cache_hit_rate", format_double(st.cache_hit_rate)},
                 {"mean_ote", format_double(st.mean_ote)}});
  ordered_json top = {{"stages", j},
                      {"qps_nondecreasing", monotone},
                      {"total_improvement", format_double(total)}};
  out.files.push_back({tag(cfg, seed, "summary.json"), dump(top)});
  std::ostringstream s;
  for (const CompositionStage& st : stages)
    s << st.name << " qps " << format_double(st.qps) << "\n";
  s << "qps nondecreasing: " << (monotone ? "yes" : "no") << ", total improvement "
    << format_double(total) << "x\n";
  out.summary = s.str();
  return out;
}

RunOutput run_serve_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  FeatureToggles toggles;  // everything on
  toggles.collab = true;
  toggles.compress = true;
  MetricsReport r = run_serve(cfg.composition_config(), toggles, seed);
  RunOutput out;
  out.files.push_back({tag(cfg, seed, "requests.csv"), r.to_csv()});
  out.files.push_back({tag(cfg, seed, "summary.json"), dump(report_summary(r))});
  std::ostringstream s;
  s << "qps " << format_double(r.qps) << ", mean e2e " << format_double(r.mean_e2e)
    << ", cache hit rate " << format_double(r.cache_hit_rate) << ", mean ote "
    << format_double(r.mean_ote) << "\n";
  out.summary = s.str();
  return out;
}

}  // namespace

RunOutput run_one(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (cfg.scenario == "sched_compare") return run_sched_compare(cfg, seed);
  if (cfg.scenario == "lambda_trace") return run_lambda_trace(cfg, seed);
  if (cfg.scenario == "ote_sweep") return run_ote_sweep(cfg, seed);
  if (cfg.scenario == "sam_async") return run_sam_async(cfg, seed);
  if (cfg.scenario == "collab") return run_collab_scenario(cfg, seed);
  if (cfg.scenario == "compress") return run_compress_scenario(cfg, seed);
  if (cfg.scenario == "composition") return run_composition(cfg, seed);
  if (cfg.scenario == "serve") return run_serve_scenario(cfg, seed);
  throw ConfigError("scenario: unknown scenario \"" + cfg.scenario + "\"");
}

}  // namespace agentsim
