#include <random>

#include "agentsim/specdec.hpp"
#include "doctest.h"

using namespace agentsim;

namespace {

TokenVec tv(std::initializer_list<TokenId> l) { return TokenVec(l); }

// Hash-driven deterministic oracle: next token is a pure function of the
// context tail, so sequences repeat whenever the tail recurs.
class HashOracle : public TokenOracle {
 public:
  HashOracle(std::uint64_t seed, std::size_t order, TokenId vocab)
      : seed_(seed), order_(order), vocab_(vocab) {}

  TokenVec next_tokens(TokenSpan context, std::size_t n) const override {
    TokenVec ctx(context.begin(), context.end());
    TokenVec out;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t h = seed_ * 0x9e3779b97f4a7c15ull;
      std::size_t from = ctx.size() > order_ ? ctx.size() - order_ : 0;
      for (std::size_t j = from; j < ctx.size(); ++j) {
        h ^= ctx[j] + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      }
      TokenId t = static_cast<TokenId>(h % vocab_);
      out.push_back(t);
      ctx.push_back(t);
    }
    return out;
  }

 private:
  std::uint64_t seed_;
  std::size_t order_;
  TokenId vocab_;
};

// Replays a fixed target stream from a known prompt length.
class FixedOracle : public TokenOracle {
 public:
  FixedOracle(TokenVec target, std::size_t base_len)
      : target_(std::move(target)), base_(base_len) {}

  TokenVec next_tokens(TokenSpan context, std::size_t n) const override {
    TokenVec out;
    std::size_t pos = context.size() - base_;
    for (std::size_t i = 0; i < n; ++i) out.push_back(target_[(pos + i) % target_.size()]);
    return out;
  }

 private:
  TokenVec target_;
  std::size_t base_;
};

SpecConfig fallback_cfg() {
  SpecConfig cfg;
  cfg.draft_policy = DraftPolicy::PreferEarlier;
  return cfg;
}

}  // namespace

TEST_CASE("bigram jaccard") {
  CHECK(bigram_jaccard(tv({1, 2, 3}), tv({1, 2, 3})) == doctest::Approx(1.0));
  CHECK(bigram_jaccard(tv({1, 2, 3}), tv({7, 8, 9})) == doctest::Approx(0.0));
  // {ab,bc,cd} vs {ab,bc,ce} -> 2/4
  CHECK(bigram_jaccard(tv({0, 1, 2, 3}), tv({0, 1, 2, 4})) == doctest::Approx(0.5));
}

TEST_CASE("retrieve_top_k ranks by similarity and excludes the querying session") {
  MemoryRepository repo;
  repo.add({tv({0, 1, 2, 3}), tv({9}), /*session=*/1});
  repo.add({tv({0, 1, 2, 4}), tv({9}), 2});
  repo.add({tv({5, 6, 7, 8}), tv({9}), 3});
  repo.add({tv({0, 1, 2, 3}), tv({9}), 4});  // identical query, later entry

  auto res = retrieve_top_k(tv({0, 1, 2, 3}), repo, 3, /*session_id=*/99);
  REQUIRE(res.size() == 3);
  CHECK(res[0].entry_index == 0);  // 1.0, older wins the tie
  CHECK(res[0].similarity == doctest::Approx(1.0));
  CHECK(res[1].entry_index == 3);
  CHECK(res[2].entry_index == 1);
  CHECK(res[2].similarity == doctest::Approx(0.5));

  auto excl = retrieve_top_k(tv({0, 1, 2, 3}), repo, 10, /*session_id=*/1);
  for (const auto& r : excl) CHECK(repo.entries()[r.entry_index].session_id != 1);

  CHECK(retrieve_top_k(tv({1}), MemoryRepository{}, 5, 0).empty());
}

TEST_CASE("composite draft scoring weight times match length") {
  // Session indexes nothing useful; two frozen members compete.
  SuffixAutomaton session;
  CompositeDraftSource src(std::move(session), 1.0, DraftPolicy::PreferEarlier);

  auto a = std::make_shared<SuffixAutomaton>();
  REQUIRE(a->extend_all(tv({1, 2, 7, 1, 2, 8})));  // can match "1 2"
  a->freeze();
  auto b = std::make_shared<SuffixAutomaton>();
  REQUIRE(b->extend_all(tv({5, 5, 1, 2, 9, 5, 5, 1, 2, 4})));  // can match "5 5 1 2" etc.
  b->freeze();
  src.add_frozen(a, 1.0);
  src.add_frozen(b, 0.4);

  src.advance_cursors(tv({9, 5, 5, 1, 2}));
  // member a matched "1 2" (len 2, score 2.0); member b matched "9 5 5 1 2"
  // wait: b corpus has "2 9 5 5 1 2" so the full fed tail matches len 5 -> 2.0
  // Tie at 2.0 resolves toward the longer match.
  auto d = src.draft(3, 2);
  CHECK(d.member_index == 2);
  CHECK_FALSE(d.tokens.empty());
}

TEST_CASE("composite tie on score and match length goes to the lower index") {
  SuffixAutomaton session;
  CompositeDraftSource src(std::move(session), 1.0, DraftPolicy::PreferEarlier);
  auto a = std::make_shared<SuffixAutomaton>();
  REQUIRE(a->extend_all(tv({1, 2, 3, 1, 2})));
  a->freeze();
  auto b = std::make_shared<SuffixAutomaton>();
  REQUIRE(b->extend_all(tv({1, 2, 4, 1, 2})));
  b->freeze();
  src.add_frozen(a, 0.5);
  src.add_frozen(b, 0.5);
  src.advance_cursors(tv({1, 2}));
  auto d = src.draft(1, 2);
  CHECK(d.member_index == 1);
  CHECK(d.tokens == tv({3}));
}

TEST_CASE("only the session member with a match produces the draft") {
  SuffixAutomaton session;
  REQUIRE(session.extend_all(tv({4, 5, 6, 4, 5})));
  CompositeDraftSource src(std::move(session), 1.0, DraftPolicy::PreferEarlier);
  src.advance_cursors(tv({4, 5}));
  auto d = src.draft(1, 2);
  CHECK(d.member_index == 0);
  CHECK(d.tokens == tv({6}));
}

TEST_CASE("insert_verified extends only the session automaton") {
  SuffixAutomaton session;
  CompositeDraftSource src(std::move(session), 1.0, DraftPolicy::PreferEarlier);
  auto frozen = std::make_shared<SuffixAutomaton>();
  REQUIRE(frozen->extend_all(tv({1, 2, 3})));
  frozen->freeze();
  std::size_t frozen_states = frozen->state_count();
  src.add_frozen(frozen, 0.8);

  REQUIRE(src.insert_verified(tv({7, 8, 7, 8})));
  CHECK(src.session().corpus().size() == 4);
  CHECK(frozen->state_count() == frozen_states);
  CHECK(src.session_match_len() > 0);  // cursors tracked the inserted tokens
}

TEST_CASE("decode_step with empty draft is a pure greedy step") {
  HashOracle oracle(1, 3, 50);
  SuffixAutomaton session;
  CompositeDraftSource src(std::move(session), 1.0, DraftPolicy::PreferEarlier);
  TokenVec context = tv({1, 2, 3});
  DecodeMetrics m;
  TokenVec accepted = decode_step(oracle, src, context, fallback_cfg(), m);
  CHECK(accepted.size() == 1);
  CHECK(m.forward_passes == 1);
  CHECK(m.generated_tokens == 1);
  CHECK(m.proposed_spec_tokens == 0);
  CHECK(m.nonempty_proposal_steps == 0);
}

TEST_CASE("decode_step commits draft plus bonus token on full agreement") {
  // Oracle replays a fixed cycle; the session automaton indexes the same
  // material, so drafts agree with the oracle completely.
  TokenVec cycle = tv({5, 6, 7, 8});
  TokenVec prompt = tv({5, 6, 7, 8, 5, 6, 7, 8});
  FixedOracle oracle(cycle, prompt.size());

  SuffixAutomaton session;
  REQUIRE(session.extend_all(prompt));
  SpecConfig cfg = fallback_cfg();
  CompositeDraftSource src(std::move(session), 1.0, cfg.draft_policy);
  src.advance_cursors(prompt);

  TokenVec context = prompt;
  DecodeMetrics m;
  TokenVec accepted = decode_step(oracle, src, context, cfg, m);
  CHECK(accepted.size() == 4);  // 3 drafted + bonus
  CHECK(m.forward_passes == 1);
  CHECK(m.accepted_spec_tokens == 3);
  CHECK(m.proposed_spec_tokens == 3);
  CHECK(ote(m) == doctest::Approx(4.0));
}

TEST_CASE("decode_step partial agreement commits lcp plus bonus") {
  // Draft comes from a frozen member that diverges after one token.
  TokenVec target = tv({1, 2, 9, 9, 9, 9, 9, 9});
  TokenVec prompt = tv({0, 0, 1, 2});
  FixedOracle oracle(target, prompt.size());  // emits 1,2,9,9,...

  SuffixAutomaton session;
  CompositeDraftSource src(std::move(session), 1.0, DraftPolicy::PreferEarlier);
  auto frozen = std::make_shared<SuffixAutomaton>();
  REQUIRE(frozen->extend_all(tv({7, 1, 2, 4, 4, 1, 2})));  // continuation of "1 2" is "4 4"
  frozen->freeze();
  src.add_frozen(frozen, 1.0);

  TokenVec context = prompt;
  DecodeMetrics m;
  // Feed the first two oracle tokens through decode steps with no draft
  // available, then the cursors have matched "1 2".
  decode_step(oracle, src, context, fallback_cfg(), m);
  decode_step(oracle, src, context, fallback_cfg(), m);
  REQUIRE(context == tv({0, 0, 1, 2, 1, 2}));

  DecodeMetrics step;
  TokenVec accepted = decode_step(oracle, src, context, fallback_cfg(), step);
  // draft was {4,4,...}; oracle says 9 -> lcp 0, bonus only
  CHECK(accepted.size() == 1);
  CHECK(step.proposed_spec_tokens >= 1);
  CHECK(step.accepted_spec_tokens == 0);
}

TEST_CASE("ote and shr definitions") {
  DecodeMetrics m;
  CHECK_THROWS_AS(ote(m), std::invalid_argument);
  m.generated_tokens = 100;
  m.forward_passes = 25;
  CHECK(ote(m) == doctest::Approx(4.0));
  CHECK_FALSE(shr_defined(m));
  CHECK(shr(m) == 0.0);
  m.proposed_spec_tokens = 30;
  m.accepted_spec_tokens = 12;
  CHECK(shr(m) == doctest::Approx(0.4));

  DecodeMetrics plain;
  plain.generated_tokens = 40;
  plain.forward_passes = 40;
  CHECK(ote(plain) == doctest::Approx(1.0));
}

TEST_CASE("run_decode is lossless against greedy decoding") {
  std::mt19937 rng(123);
  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_int_distribution<std::uint64_t> seed(1, 1u << 20);
    std::uniform_int_distribution<std::size_t> order(1, 4);
    std::uniform_int_distribution<TokenId> vocab(4, 40);
    std::uniform_int_distribution<std::size_t> plen(1, 60);

    HashOracle oracle(seed(rng), order(rng), vocab(rng));
    TokenVec prompt;
    std::size_t n = plen(rng);
    std::uniform_int_distribution<TokenId> tok(0, 30);
    for (std::size_t i = 0; i < n; ++i) prompt.push_back(tok(rng));

    MemoryRepository repo;
    for (int e = 0; e < 3; ++e) {
      TokenVec q, r;
      for (int i = 0; i < 20; ++i) q.push_back(tok(rng));
      for (int i = 0; i < 30; ++i) r.push_back(tok(rng));
      repo.add({q, r, static_cast<std::uint64_t>(e)});
    }
    SpecConfig cfg = fallback_cfg();
    auto retrieved = retrieve_top_k(prompt, repo, cfg.top_k, 99);
    auto src = build_composite({}, prompt, retrieved, repo, cfg);

    StopRule stop{50, std::nullopt};
    auto spec = run_decode(oracle, src, prompt, stop, cfg);
    auto greedy = greedy_decode(oracle, prompt, stop);
    REQUIRE(spec.output == greedy);
  }
}

TEST_CASE("run_decode losslessness with eos stopping") {
  HashOracle oracle(77, 2, 12);
  TokenVec prompt = tv({1, 2, 3});
  SpecConfig cfg = fallback_cfg();
  auto src = build_composite({}, prompt, {}, MemoryRepository{}, cfg);
  StopRule stop{200, TokenId{5}};
  auto spec = run_decode(oracle, src, prompt, stop, cfg);
  auto greedy = greedy_decode(oracle, prompt, stop);
  CHECK(spec.output == greedy);
}

TEST_CASE("monotone benefit: a member containing the full output never hurts OTE") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<TokenId> tok(0, 20);
  for (int trial = 0; trial < 10; ++trial) {
    HashOracle oracle(1000 + trial, 2, 24);
    TokenVec prompt;
    for (int i = 0; i < 20; ++i) prompt.push_back(tok(rng));
    StopRule stop{40, std::nullopt};
    SpecConfig cfg = fallback_cfg();

    auto base_src = build_composite({}, prompt, {}, MemoryRepository{}, cfg);
    auto base = run_decode(oracle, base_src, prompt, stop, cfg);

    // A member whose corpus embeds the oracle's full output as a substring.
    TokenVec full = greedy_decode(oracle, prompt, stop);
    MemoryRepository repo;
    repo.add({prompt, full, 1});
    std::vector<RetrievalResult> retrieved = {{0, 1.0}};
    auto mem_src = build_composite({}, prompt, retrieved, repo, cfg);
    auto with_mem = run_decode(oracle, mem_src, prompt, stop, cfg);

    REQUIRE(with_mem.output == base.output);
    CHECK(ote(with_mem.metrics) >= ote(base.metrics));
  }
}

TEST_CASE("shr is 1.0 when the oracle replays an indexed corpus") {
  // Distinct tokens: every substring of the target is unique, so drafts
  // always continue from the occurrence the oracle is replaying.
  TokenVec target;
  for (TokenId i = 0; i < 400; ++i) target.push_back(i);

  TokenVec prompt(target.begin(), target.begin() + 8);
  // base_len 0: with an 8-token prompt the oracle continues at target[8],
  // so the full context replays target exactly and stays repetition-free.
  FixedOracle oracle(target, 0);

  MemoryRepository repo;
  repo.add({prompt, target, 1});
  SpecConfig cfg = fallback_cfg();
  auto src = build_composite({}, prompt, {{0, 1.0}}, repo, cfg);
  StopRule stop{100, std::nullopt};
  auto res = run_decode(oracle, src, prompt, stop, cfg);
  REQUIRE(shr_defined(res.metrics));
  CHECK(shr(res.metrics) == doctest::Approx(1.0));
  CHECK(ote(res.metrics) > 2.0);
}

TEST_CASE("build queue is FIFO with one-way status transitions") {
  SamBuildQueue q;
  auto id1 = q.enqueue(tv({1, 2, 3}));
  auto id2 = q.enqueue(tv({4, 5}));
  CHECK(q.poll(id1) == BuildStatus::Pending);
  CHECK(q.pending() == 2);
  CHECK_THROWS_AS(q.result(id1), std::logic_error);

  auto done = q.process_next();
  REQUIRE(done.has_value());
  CHECK(*done == id1);
  CHECK(q.poll(id1) == BuildStatus::Ready);
  CHECK(q.result(id1)->corpus().size() == 3);
  CHECK(q.result(id1)->frozen());
  CHECK(q.poll(id2) == BuildStatus::Pending);

  q.process_next();
  CHECK(q.poll(id2) == BuildStatus::Ready);
  CHECK_FALSE(q.process_next().has_value());
}

TEST_CASE("build queue reports failure on capacity exhaustion") {
  SamBuildQueue q;
  auto id = q.enqueue(tv({1, 2, 3, 4, 5, 6, 7, 8}), /*max_states=*/3);
  q.process_next();
  CHECK(q.poll(id) == BuildStatus::Failed);
}

TEST_CASE("adaptive switch thresholds are inclusive") {
  SpecConfig cfg;
  cfg.max_context_len = 32768;
  cfg.max_batch_size = 8;
  CHECK(adaptive_enabled(1000, 1, cfg));
  CHECK_FALSE(adaptive_enabled(1000, 9, cfg));
  CHECK(adaptive_enabled(32768, 8, cfg));
  CHECK_FALSE(adaptive_enabled(32769, 8, cfg));
}
