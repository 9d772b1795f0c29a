#include "agentsim/sam.hpp"

#include <algorithm>

namespace agentsim {

SuffixAutomaton::SuffixAutomaton(std::size_t max_states) : max_states_(max_states) {
  states_.emplace_back();  // root: len 0, no link
}

bool SuffixAutomaton::extend(TokenId token) {
  if (frozen_) throw std::logic_error("extend on frozen SuffixAutomaton");
  // An extend creates at most two states (new state + clone). Check up front
  // so a capacity failure leaves the automaton untouched.
  if (states_.size() + 2 > max_states_) return false;

  const int pos = static_cast<int>(corpus_.size());
  corpus_.push_back(token);

  int cur = static_cast<int>(states_.size());
  states_.emplace_back();
  states_[cur].len = states_[last_].len + 1;
  states_[cur].first_end = pos;
  states_[cur].latest_end = pos;

  int p = last_;
  while (p != -1 && !states_[p].next.count(token)) {
    states_[p].next[token] = cur;
    p = states_[p].link;
  }
  if (p == -1) {
    states_[cur].link = 0;
  } else {
    int q = states_[p].next[token];
    if (states_[p].len + 1 == states_[q].len) {
      states_[cur].link = q;
    } else {
      int clone = static_cast<int>(states_.size());
      states_.push_back(states_[q]);
      states_[clone].len = states_[p].len + 1;
      while (p != -1 && states_[p].next[token] == q) {
        states_[p].next[token] = clone;
        p = states_[p].link;
      }
      states_[q].link = clone;
      states_[cur].link = clone;
    }
  }

  // States on the suffix-link chain from `cur` all accept suffixes ending at
  // `pos`; record it as their most recent occurrence.
  for (int v = cur; v != -1; v = states_[v].link) states_[v].latest_end = pos;

  last_ = cur;
  return true;
}

bool SuffixAutomaton::extend_all(TokenSpan tokens) {
  for (TokenId t : tokens)
    if (!extend(t)) return false;
  return true;
}

bool SuffixAutomaton::accepts(TokenSpan seq) const {
  int s = 0;
  for (TokenId t : seq) {
    auto it = states_[static_cast<std::size_t>(s)].next.find(t);
    if (it == states_[static_cast<std::size_t>(s)].next.end()) return false;
    s = it->second;
  }
  return true;
}

std::uint64_t SuffixAutomaton::distinct_substrings() const {
  std::uint64_t total = 0;
  for (std::size_t i = 1; i < states_.size(); ++i)
    total += static_cast<std::uint64_t>(states_[i].len -
                                        states_[static_cast<std::size_t>(states_[i].link)].len);
  return total;
}

MatchCursor SuffixAutomaton::advance(MatchCursor cur, TokenId token) const {
  int s = cur.state;
  int len = cur.match_len;
  while (true) {
    const auto& st = states_[static_cast<std::size_t>(s)];
    auto it = st.next.find(token);
    if (it != st.next.end()) {
      return MatchCursor{it->second, len + 1};
    }
    if (s == 0) return MatchCursor{0, 0};
    s = st.link;
    len = states_[static_cast<std::size_t>(s)].len;
  }
}

TokenVec SuffixAutomaton::continuation_at(int end_pos, std::size_t k) const {
  TokenVec out;
  if (end_pos < 0) return out;
  std::size_t start = static_cast<std::size_t>(end_pos) + 1;
  for (std::size_t i = start; i < corpus_.size() && out.size() < k; ++i) {
    if (is_sentinel(corpus_[i])) break;
    out.push_back(corpus_[i]);
  }
  return out;
}

TokenVec SuffixAutomaton::draft(const MatchCursor& cur, std::size_t k, std::size_t min_match,
                                DraftPolicy policy) const {
  if (k == 0) return {};
  int s = cur.state;
  int len = cur.match_len;
  while (s != 0 && len >= static_cast<int>(min_match)) {
    const SamState& st = states_[static_cast<std::size_t>(s)];
    TokenVec out = continuation_at(st.latest_end, k);
    if (out.empty() && policy == DraftPolicy::PreferEarlier && st.first_end != st.latest_end)
      out = continuation_at(st.first_end, k);
    if (!out.empty()) return out;
    if (policy == DraftPolicy::LatestOnly) break;
    // The longest match ends at the corpus tail (or right before a separator):
    // fall back to the next shorter matched suffix via the suffix link.
    s = st.link;
    len = states_[static_cast<std::size_t>(s)].len;
  }
  return {};
}

}  // namespace agentsim
