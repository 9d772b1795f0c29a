#include "agentsim/compress.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace agentsim {

void AgentMemory::add_reasoning(EntryKind kind, TokenVec tokens, std::uint64_t loop_index) {
  if (kind != EntryKind::Think && kind != EntryKind::Act)
    throw std::invalid_argument("reasoning entries must be Think or Act");
  reasoning_tokens_ += tokens.size();
  reasoning_.push_back({kind, std::move(tokens), loop_index});
}

void AgentMemory::add_environment(TokenVec tokens, std::uint64_t loop_index) {
  environment_tokens_ += tokens.size();
  environment_.push_back({EntryKind::ToolResult, std::move(tokens), loop_index});
}

TokenVec AgentMemory::render() const {
  TokenVec out;
  out.reserve(total_tokens());
  for (const auto& s : reasoning_) out.insert(out.end(), s.tokens.begin(), s.tokens.end());
  for (const auto& s : environment_) out.insert(out.end(), s.tokens.begin(), s.tokens.end());
  return out;
}

double OverlapRanker::relevance(TokenSpan query, const SearchResult& r) const {
  if (query.empty()) return 0.0;
  std::set<TokenId> doc(r.title.begin(), r.title.end());
  doc.insert(r.snippet.begin(), r.snippet.end());
  std::set<TokenId> q(query.begin(), query.end());
  std::size_t inter = 0;
  for (TokenId t : q) inter += doc.count(t);
  return static_cast<double>(inter) / static_cast<double>(q.size());
}

std::vector<SearchResult> rank_filter(std::vector<SearchResult> results, TokenSpan query,
                                      const Ranker& ranker, const CompressConfig& cfg) {
  for (auto& r : results) r.relevance = ranker.relevance(query, r);
  std::vector<SearchResult> kept;
  for (auto& r : results)
    if (r.relevance >= cfg.theta_search) kept.push_back(std::move(r));
  std::stable_sort(kept.begin(), kept.end(),
                   [](const SearchResult& a, const SearchResult& b) {
                     return a.relevance > b.relevance;
                   });
  return kept;
}

std::optional<TokenVec> SamplingDistiller::distill(TokenSpan env_tokens, double ratio) const {
  std::size_t n = env_tokens.size();
  std::size_t keep = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n)));
  if (keep >= n) return TokenVec(env_tokens.begin(), env_tokens.end());
  TokenVec out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    // evenly spaced picks, deterministic
    std::size_t src = (i * n) / keep;
    out.push_back(env_tokens[src]);
  }
  return out;
}

bool should_compress(const AgentMemory& memory, bool loop_completed, bool job_in_flight,
                     const CompressConfig& cfg) {
  return memory.total_tokens() > cfg.theta_ctx && loop_completed && !job_in_flight;
}

DistillJob submit_distill(const AgentMemory& memory, const Distiller& distiller,
                          const CompressConfig& cfg, double now) {
  DistillJob job;
  job.submit_time = now;
  const auto& env = memory.environment();
  if (env.empty()) {
    job.status = DistillStatus::Failed;
    return job;
  }
  job.loop_lo = env.front().loop_index;
  job.loop_hi = env.front().loop_index;
  TokenVec snapshot;
  for (const auto& s : env) {
    job.loop_lo = std::min(job.loop_lo, s.loop_index);
    job.loop_hi = std::max(job.loop_hi, s.loop_index);
    snapshot.insert(snapshot.end(), s.tokens.begin(), s.tokens.end());
  }
  auto summary = distiller.distill(snapshot, cfg.ratio);
  if (!summary) {
    job.status = DistillStatus::Failed;
    return job;
  }
  job.summary = std::move(*summary);
  job.summary_loop = job.loop_hi;
  job.status = DistillStatus::Done;
  return job;
}

void apply_distill(AgentMemory& memory, DistillJob& job) {
  if (job.status != DistillStatus::Done)
    throw std::logic_error("apply_distill: job is not Done");
  std::vector<MemorySegment> kept;
  std::size_t tokens = 0;
  // Summary replaces the covered range, positioned where that range was.
  kept.push_back({EntryKind::Summary, job.summary, job.summary_loop});
  tokens += job.summary.size();
  for (auto& s : memory.environment_) {
    if (s.loop_index <= job.loop_hi) continue;  // covered by the snapshot
    tokens += s.tokens.size();
    kept.push_back(std::move(s));
  }
  memory.environment_ = std::move(kept);
  memory.environment_tokens_ = tokens;
}

}  // namespace agentsim
