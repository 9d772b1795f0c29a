#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "agentsim/sam.hpp"
#include "agentsim/tokens.hpp"

namespace agentsim {

// Deterministic greedy continuation provider. Implementations must be pure:
// identical context yields identical tokens.
class TokenOracle {
 public:
  virtual ~TokenOracle() = default;
  virtual TokenVec next_tokens(TokenSpan context, std::size_t n) const = 0;
};

struct MemoryEntry {
  TokenVec query;
  TokenVec response;
  std::uint64_t session_id = 0;
};

// Append-only cross-session store of (query, response) pairs.
class MemoryRepository {
 public:
  explicit MemoryRepository(std::size_t capacity = 4096) : capacity_(capacity) {}

  void add(MemoryEntry entry) {
    if (entries_.size() < capacity_) entries_.push_back(std::move(entry));
  }
  const std::vector<MemoryEntry>& entries() const { return entries_; }

 private:
  std::vector<MemoryEntry> entries_;
  std::size_t capacity_;
};

struct RetrievalResult {
  std::size_t entry_index = 0;
  double similarity = 0.0;
};

struct SpecConfig {
  std::size_t n_propose = 4;        // tokens per step incl. the base token
  std::size_t top_k = 3;            // retrieved cross-session members
  std::size_t max_context_len = 32768;
  std::size_t max_batch_size = 8;
  std::size_t min_match = 2;
  double session_weight = 1.0;
  DraftPolicy draft_policy = DraftPolicy::LatestOnly;
  std::size_t sam_max_states = SuffixAutomaton::kDefaultMaxStates;
};

struct DecodeMetrics {
  std::uint64_t generated_tokens = 0;
  std::uint64_t forward_passes = 0;
  std::uint64_t proposed_spec_tokens = 0;
  std::uint64_t accepted_spec_tokens = 0;
  std::uint64_t nonempty_proposal_steps = 0;

  void merge(const DecodeMetrics& o) {
    generated_tokens += o.generated_tokens;
    forward_passes += o.forward_passes;
    proposed_spec_tokens += o.proposed_spec_tokens;
    accepted_spec_tokens += o.accepted_spec_tokens;
    nonempty_proposal_steps += o.nonempty_proposal_steps;
  }
};

// generated_tokens / forward_passes. Throws when no pass has run.
double ote(const DecodeMetrics& m);

// accepted / proposed over non-empty proposal steps; 0 (with had_proposals
// false through shr_defined) when speculation never proposed anything.
double shr(const DecodeMetrics& m);
bool shr_defined(const DecodeMetrics& m);

// Token-bigram Jaccard similarity between two sequences.
double bigram_jaccard(TokenSpan a, TokenSpan b);

// Top-k stored entries by bigram Jaccard between `query` and stored queries,
// descending; ties keep the older entry first. Entries whose session_id equals
// `session_id` are excluded.
std::vector<RetrievalResult> retrieve_top_k(TokenSpan query, const MemoryRepository& repo,
                                            std::size_t k, std::uint64_t session_id);

// Ensemble of per-corpus automata queried in parallel. Member 0 is the live
// session automaton; the rest are frozen, weighted by retrieval similarity.
class CompositeDraftSource {
 public:
  struct Member {
    std::shared_ptr<const SuffixAutomaton> sam;  // null for the session member
    double weight = 0.0;
    MatchCursor cursor;
  };

  struct Draft {
    TokenVec tokens;
    std::size_t member_index = 0;
  };

  CompositeDraftSource(SuffixAutomaton session, double session_weight, DraftPolicy policy);

  void add_frozen(std::shared_ptr<const SuffixAutomaton> sam, double weight);

  // Replaces the session automaton (used when an async build completes);
  // cursors are reset and re-synchronized over `tail`.
  void replace_session(SuffixAutomaton session, TokenSpan tail);

  Draft draft(std::size_t k, std::size_t min_match) const;

  // Extends the session automaton with newly committed tokens and advances
  // every cursor over them. Returns false on session capacity exhaustion.
  bool insert_verified(TokenSpan tokens);

  // Advances cursors without touching any corpus (e.g. over prompt tail).
  void advance_cursors(TokenSpan tokens);

  const SuffixAutomaton& session() const { return session_; }
  std::size_t member_count() const { return 1 + frozen_.size(); }
  const Member& frozen_member(std::size_t i) const { return frozen_[i]; }
  int session_match_len() const { return session_cursor_.match_len; }

 private:
  SuffixAutomaton session_;
  double session_weight_;
  MatchCursor session_cursor_;
  std::vector<Member> frozen_;
  DraftPolicy policy_;
};

// Builds the composite for a request: session automaton over
// session_ctx <sentinel> prompt plus one frozen member per retrieval hit over
// its query <sentinel> response, weighted by similarity.
CompositeDraftSource build_composite(TokenSpan session_ctx, TokenSpan prompt,
                                     const std::vector<RetrievalResult>& retrieved,
                                     const MemoryRepository& repo, const SpecConfig& cfg);

// One speculative step: drafts up to n_propose-1 tokens, verifies them with a
// single oracle pass, and commits the accepted prefix plus the bonus token.
// Appends the committed tokens to `context` and returns them.
TokenVec decode_step(const TokenOracle& oracle, CompositeDraftSource& src, TokenVec& context,
                     const SpecConfig& cfg, DecodeMetrics& metrics);

struct StopRule {
  std::size_t max_new_tokens = 256;
  std::optional<TokenId> eos;
};

struct DecodeResult {
  TokenVec output;  // newly generated tokens only
  DecodeMetrics metrics;
};

// Full speculative decode loop. Output is token-for-token identical to pure
// greedy decoding by the same oracle under the same stopping rule.
DecodeResult run_decode(const TokenOracle& oracle, CompositeDraftSource& src, TokenSpan prompt,
                        const StopRule& stop, const SpecConfig& cfg);

// Reference greedy loop (no speculation) used as the losslessness baseline.
TokenVec greedy_decode(const TokenOracle& oracle, TokenSpan prompt, const StopRule& stop);

enum class BuildStatus { Pending, Ready, Failed };

// FIFO queue of background automaton builds. Completion is driven explicitly
// by the caller (the simulator fires it at the job's virtual completion time).
class SamBuildQueue {
 public:
  std::uint64_t enqueue(TokenVec corpus, std::size_t max_states = SuffixAutomaton::kDefaultMaxStates);

  BuildStatus poll(std::uint64_t id) const;
  std::shared_ptr<const SuffixAutomaton> result(std::uint64_t id) const;

  // Builds the oldest pending job. Returns the id, or nullopt when idle.
  std::optional<std::uint64_t> process_next();

  std::size_t pending() const { return pending_.size(); }

 private:
  struct Job {
    TokenVec corpus;
    std::size_t max_states;
    BuildStatus status = BuildStatus::Pending;
    std::shared_ptr<const SuffixAutomaton> result;
  };
  std::vector<Job> jobs_;
  std::deque<std::uint64_t> pending_;
};

// True iff speculation stays enabled at this context length and batch size
// (inclusive thresholds).
bool adaptive_enabled(std::size_t context_len, std::size_t batch_size, const SpecConfig& cfg);

}  // namespace agentsim
