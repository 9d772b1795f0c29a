#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "agentsim/tokens.hpp"

namespace agentsim {

// One state of the suffix automaton. `len` is the length of the longest
// substring recognized here; states shorter than `minlen` belong to the
// suffix-link parent. `latest_end` / `first_end` are representative corpus
// positions where a substring of this state ends (most recent vs. the one
// recorded when the state was created).
struct SamState {
  int len = 0;
  int link = -1;
  int first_end = -1;
  int latest_end = -1;
  std::map<TokenId, int> next;
};

// Cursor tracking the longest suffix of the fed token stream that is a
// substring of the corpus. Invariant: minlen(state) <= match_len <= len(state).
struct MatchCursor {
  int state = 0;
  int match_len = 0;
};

// Which representative occurrence a draft reads its continuation from.
// LatestOnly returns nothing when the most recent occurrence sits at the
// corpus end; PreferEarlier falls back to the occurrence recorded at state
// creation in that case.
enum class DraftPolicy { LatestOnly, PreferEarlier };

// Online suffix automaton over a token sequence. Accepts exactly the set of
// substrings of the corpus; extension is amortized O(1) states per token.
class SuffixAutomaton {
 public:
  static constexpr std::size_t kDefaultMaxStates = 1u << 22;

  explicit SuffixAutomaton(std::size_t max_states = kDefaultMaxStates);

  // Appends one token. Returns false when the state arena is exhausted; the
  // automaton is left unchanged in that case and the caller should stop
  // speculating from this corpus.
  bool extend(TokenId token);
  bool extend_all(TokenSpan tokens);

  // Marks the automaton immutable. Further extends throw std::logic_error.
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  const TokenVec& corpus() const { return corpus_; }
  std::size_t state_count() const { return states_.size(); }
  const SamState& state(int idx) const { return states_[static_cast<std::size_t>(idx)]; }

  // True iff `seq` is a substring of the corpus (the empty sequence always is).
  bool accepts(TokenSpan seq) const;

  // Number of distinct non-empty substrings, from sum(len - len(link)).
  std::uint64_t distinct_substrings() const;

  MatchCursor root_cursor() const { return MatchCursor{0, 0}; }

  // Feeds one token to the cursor, following suffix links on mismatch.
  MatchCursor advance(MatchCursor cur, TokenId token) const;

  // Returns up to k continuation tokens following the cursor's matched suffix,
  // read verbatim from the corpus, or empty when match_len < min_match or no
  // continuation is available under `policy`. Drafts never cross sentinels.
  TokenVec draft(const MatchCursor& cur, std::size_t k, std::size_t min_match,
                 DraftPolicy policy = DraftPolicy::LatestOnly) const;

 private:
  TokenVec continuation_at(int end_pos, std::size_t k) const;

  std::vector<SamState> states_;
  TokenVec corpus_;
  int last_ = 0;
  std::size_t max_states_;
  bool frozen_ = false;
};

}  // namespace agentsim
