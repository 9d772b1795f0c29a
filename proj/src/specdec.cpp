#include "agentsim/specdec.hpp"

#include <algorithm>
#include <set>
#include <utility>

namespace agentsim {

double ote(const DecodeMetrics& m) {
  if (m.forward_passes == 0) throw std::invalid_argument("ote: no forward passes");
  return static_cast<double>(m.generated_tokens) / static_cast<double>(m.forward_passes);
}

bool shr_defined(const DecodeMetrics& m) { return m.proposed_spec_tokens > 0; }

double shr(const DecodeMetrics& m) {
  if (!shr_defined(m)) return 0.0;
  return static_cast<double>(m.accepted_spec_tokens) / static_cast<double>(m.proposed_spec_tokens);
}

double bigram_jaccard(TokenSpan a, TokenSpan b) {
  std::set<std::pair<TokenId, TokenId>> sa, sb;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) sa.emplace(a[i], a[i + 1]);
  for (std::size_t i = 0; i + 1 < b.size(); ++i) sb.emplace(b[i], b[i + 1]);
  if (sa.empty() && sb.empty()) return a.empty() || b.empty() ? 0.0 : 1.0;
  std::size_t inter = 0;
  for (const auto& g : sa) inter += sb.count(g);
  std::size_t uni = sa.size() + sb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<RetrievalResult> retrieve_top_k(TokenSpan query, const MemoryRepository& repo,
                                            std::size_t k, std::uint64_t session_id) {
  std::vector<RetrievalResult> all;
  const auto& entries = repo.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].session_id == session_id) continue;
    all.push_back({i, bigram_jaccard(query, entries[i].query)});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const RetrievalResult& x, const RetrievalResult& y) {
                     return x.similarity > y.similarity;
                   });
  if (all.size() > k) all.resize(k);
  return all;
}

CompositeDraftSource::CompositeDraftSource(SuffixAutomaton session, double session_weight,
                                           DraftPolicy policy)
    : session_(std::move(session)), session_weight_(session_weight), policy_(policy) {
  session_cursor_ = session_.root_cursor();
}

void CompositeDraftSource::add_frozen(std::shared_ptr<const SuffixAutomaton> sam, double weight) {
  frozen_.push_back({std::move(sam), weight, MatchCursor{}});
}

void CompositeDraftSource::replace_session(SuffixAutomaton session, TokenSpan tail) {
  session_ = std::move(session);
  session_cursor_ = session_.root_cursor();
  for (auto& m : frozen_) m.cursor = m.sam->root_cursor();
  advance_cursors(tail);
}

CompositeDraftSource::Draft CompositeDraftSource::draft(std::size_t k, std::size_t min_match) const {
  Draft best;
  double best_score = -1.0;
  int best_len = -1;
  auto consider = [&](std::size_t idx, const SuffixAutomaton& sam, const MatchCursor& cur,
                      double weight) {
    TokenVec cand = sam.draft(cur, k, min_match, policy_);
    if (cand.empty()) return;
    double sc = weight * static_cast<double>(cur.match_len);
    if (sc > best_score || (sc == best_score && cur.match_len > best_len)) {
      best_score = sc;
      best_len = cur.match_len;
      best.tokens = std::move(cand);
      best.member_index = idx;
    }
  };
  consider(0, session_, session_cursor_, session_weight_);
  for (std::size_t i = 0; i < frozen_.size(); ++i)
    consider(i + 1, *frozen_[i].sam, frozen_[i].cursor, frozen_[i].weight);
  return best;
}

bool CompositeDraftSource::insert_verified(TokenSpan tokens) {
  bool ok = true;
  for (TokenId t : tokens) {
    if (ok && !session_.extend(t)) ok = false;  // stop growing, keep cursors in sync
  }
  advance_cursors(tokens);
  return ok;
}

void CompositeDraftSource::advance_cursors(TokenSpan tokens) {
  for (TokenId t : tokens) {
    session_cursor_ = session_.advance(session_cursor_, t);
    for (auto& m : frozen_) m.cursor = m.sam->advance(m.cursor, t);
  }
}

namespace {

TokenVec joined_corpus(TokenSpan a, TokenSpan b, std::uint32_t sentinel_id) {
  TokenVec out;
  out.reserve(a.size() + b.size() + 1);
  out.insert(out.end(), a.begin(), a.end());
  if (!a.empty() && !b.empty()) out.push_back(sentinel(sentinel_id));
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

CompositeDraftSource build_composite(TokenSpan session_ctx, TokenSpan prompt,
                                     const std::vector<RetrievalResult>& retrieved,
                                     const MemoryRepository& repo, const SpecConfig& cfg) {
  SuffixAutomaton session(cfg.sam_max_states);
  session.extend_all(joined_corpus(session_ctx, prompt, 0));
  CompositeDraftSource src(std::move(session), cfg.session_weight, cfg.draft_policy);
  std::uint32_t sep = 1;
  for (const auto& r : retrieved) {
    const MemoryEntry& e = repo.entries()[r.entry_index];
    auto sam = std::make_shared<SuffixAutomaton>(cfg.sam_max_states);
    sam->extend_all(joined_corpus(e.query, e.response, sep++));
    sam->freeze();
    src.add_frozen(std::move(sam), r.similarity);
  }
  src.advance_cursors(prompt);  // decoding starts with the prompt verified
  return src;
}

TokenVec decode_step(const TokenOracle& oracle, CompositeDraftSource& src, TokenVec& context,
                     const SpecConfig& cfg, DecodeMetrics& metrics) {
  const std::size_t k = cfg.n_propose > 0 ? cfg.n_propose - 1 : 0;
  auto d = src.draft(k, cfg.min_match);
  TokenVec g = oracle.next_tokens(context, d.tokens.size() + 1);
  std::size_t lcp = 0;
  while (lcp < d.tokens.size() && d.tokens[lcp] == g[lcp]) ++lcp;

  TokenVec accepted(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(lcp + 1));
  metrics.forward_passes += 1;
  metrics.generated_tokens += accepted.size();
  if (!d.tokens.empty()) {
    metrics.proposed_spec_tokens += d.tokens.size();
    metrics.accepted_spec_tokens += lcp;
    metrics.nonempty_proposal_steps += 1;
  }
  src.insert_verified(accepted);
  context.insert(context.end(), accepted.begin(), accepted.end());
  return accepted;
}

DecodeResult run_decode(const TokenOracle& oracle, CompositeDraftSource& src, TokenSpan prompt,
                        const StopRule& stop, const SpecConfig& cfg) {
  DecodeResult res;
  TokenVec context(prompt.begin(), prompt.end());
  bool done = false;
  while (!done && res.output.size() < stop.max_new_tokens) {
    TokenVec accepted = decode_step(oracle, src, context, cfg, res.metrics);
    for (TokenId t : accepted) {
      res.output.push_back(t);
      if ((stop.eos && t == *stop.eos) || res.output.size() >= stop.max_new_tokens) {
        done = true;
        break;
      }
    }
  }
  // Tokens past the stopping point were verified but discarded; keep the
  // metrics consistent with the emitted stream.
  std::size_t emitted = res.output.size();
  if (res.metrics.generated_tokens > emitted) res.metrics.generated_tokens = emitted;
  if (context.size() > prompt.size() + emitted) context.resize(prompt.size() + emitted);
  return res;
}

TokenVec greedy_decode(const TokenOracle& oracle, TokenSpan prompt, const StopRule& stop) {
  TokenVec context(prompt.begin(), prompt.end());
  TokenVec out;
  while (out.size() < stop.max_new_tokens) {
    TokenVec next = oracle.next_tokens(context, 1);
    out.push_back(next[0]);
    context.push_back(next[0]);
    if (stop.eos && next[0] == *stop.eos) break;
  }
  return out;
}

std::uint64_t SamBuildQueue::enqueue(TokenVec corpus, std::size_t max_states) {
  std::uint64_t id = jobs_.size();
  jobs_.push_back({std::move(corpus), max_states, BuildStatus::Pending, nullptr});
  pending_.push_back(id);
  return id;
}

BuildStatus SamBuildQueue::poll(std::uint64_t id) const { return jobs_.at(id).status; }

std::shared_ptr<const SuffixAutomaton> SamBuildQueue::result(std::uint64_t id) const {
  const Job& j = jobs_.at(id);
  if (j.status != BuildStatus::Ready) throw std::logic_error("build result not ready");
  return j.result;
}

std::optional<std::uint64_t> SamBuildQueue::process_next() {
  if (pending_.empty()) return std::nullopt;
  std::uint64_t id = pending_.front();
  pending_.pop_front();
  Job& j = jobs_[id];
  auto sam = std::make_shared<SuffixAutomaton>(j.max_states);
  if (!sam->extend_all(j.corpus)) {
    j.status = BuildStatus::Failed;
  } else {
    sam->freeze();
    j.result = std::move(sam);
    j.status = BuildStatus::Ready;
  }
  j.corpus.clear();
  return id;
}

bool adaptive_enabled(std::size_t context_len, std::size_t batch_size, const SpecConfig& cfg) {
  return context_len <= cfg.max_context_len && batch_size <= cfg.max_batch_size;
}

}  // namespace agentsim
