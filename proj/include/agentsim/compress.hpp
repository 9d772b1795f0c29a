#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "agentsim/tokens.hpp"

namespace agentsim {

enum class EntryKind { Think, Act, ToolResult, Summary };

struct MemorySegment {
  EntryKind kind;
  TokenVec tokens;
  std::uint64_t loop_index = 0;
};

// Partitioned agent memory: reasoning entries (think/act) are append-only and
// never rewritten; environment entries (tool results and distilled summaries)
// may be replaced by apply_distill at loop boundaries.
class AgentMemory {
 public:
  void add_reasoning(EntryKind kind, TokenVec tokens, std::uint64_t loop_index);
  void add_environment(TokenVec tokens, std::uint64_t loop_index);

  const std::vector<MemorySegment>& reasoning() const { return reasoning_; }
  const std::vector<MemorySegment>& environment() const { return environment_; }

  std::size_t reasoning_tokens() const { return reasoning_tokens_; }
  std::size_t environment_tokens() const { return environment_tokens_; }
  std::size_t total_tokens() const { return reasoning_tokens_ + environment_tokens_; }

  // Flattened view: reasoning then environment (used as the model prompt).
  TokenVec render() const;

 private:
  friend struct DistillJob;
  friend void apply_distill(AgentMemory&, struct DistillJob&);

  std::vector<MemorySegment> reasoning_;
  std::vector<MemorySegment> environment_;
  std::size_t reasoning_tokens_ = 0;
  std::size_t environment_tokens_ = 0;
};

struct SearchResult {
  std::string url;
  TokenVec title;
  TokenVec snippet;
  double relevance = 0.0;

  std::size_t token_count() const { return title.size() + snippet.size(); }
};

struct CompressConfig {
  std::size_t theta_ctx = 5000;  // context trigger (tokens)
  double theta_search = 0.5;     // relevance cutoff
  double ratio = 0.5;            // environment compression target
};

// Assigns relevance in [0,1] from (query, title, snippet); deterministic.
class Ranker {
 public:
  virtual ~Ranker() = default;
  virtual double relevance(TokenSpan query, const SearchResult& r) const = 0;
};

// Token-overlap ranker: |query-tokens ∩ (title+snippet)| / |query-tokens|.
class OverlapRanker : public Ranker {
 public:
  double relevance(TokenSpan query, const SearchResult& r) const override;
};

// Assigns relevance, drops results below theta_search, sorts descending
// (stable on ties).
std::vector<SearchResult> rank_filter(std::vector<SearchResult> results, TokenSpan query,
                                      const Ranker& ranker, const CompressConfig& cfg);

enum class DistillStatus { Pending, Done, Failed };

struct DistillJob {
  DistillStatus status = DistillStatus::Pending;
  std::uint64_t loop_lo = 0;  // covered environment loop range, inclusive
  std::uint64_t loop_hi = 0;
  double submit_time = 0.0;
  TokenVec summary;
  std::uint64_t summary_loop = 0;  // loop index the summary entry is tagged with
};

// Produces a summary of roughly ratio * input tokens; pluggable so real
// summarization can replace the simulation stub.
class Distiller {
 public:
  virtual ~Distiller() = default;
  virtual std::optional<TokenVec> distill(TokenSpan env_tokens, double ratio) const = 0;
};

// Deterministic stub: keeps ceil(ratio * n) evenly spaced tokens.
class SamplingDistiller : public Distiller {
 public:
  std::optional<TokenVec> distill(TokenSpan env_tokens, double ratio) const override;
};

// True iff total tokens exceed theta_ctx, a search loop just completed, and no
// job is already in flight.
bool should_compress(const AgentMemory& memory, bool loop_completed, bool job_in_flight,
                     const CompressConfig& cfg);

// Snapshots the environment partition and runs the distiller over it. The
// caller decides when the result becomes visible (asynchronous by contract:
// memory is untouched here).
DistillJob submit_distill(const AgentMemory& memory, const Distiller& distiller,
                          const CompressConfig& cfg, double now);

// Replaces the snapshotted environment entries with the summary (a think-kind
// entry placed right after the last compressed step); later entries survive
// verbatim. Must only be called at a loop boundary with a Done job.
void apply_distill(AgentMemory& memory, DistillJob& job);

}  // namespace agentsim
