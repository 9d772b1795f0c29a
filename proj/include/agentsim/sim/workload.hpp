#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agentsim/sim/oracle.hpp"
#include "agentsim/tokens.hpp"

namespace agentsim {

// Deterministic library of fixed-length phrases; token content is a pure
// function of (lib_seed, phrase, offset). Streams built from it contain
// verbatim phrase repeats, which is what gives a substring index something to
// speculate on.
class PhraseLibrary {
 public:
  PhraseLibrary(std::uint64_t lib_seed, std::size_t num_phrases, std::size_t phrase_len,
                TokenId vocab = 50000)
      : seed_(lib_seed), phrases_(num_phrases), len_(phrase_len), vocab_(vocab) {}

  std::size_t phrase_len() const { return len_; }
  std::size_t num_phrases() const { return phrases_; }

  TokenId token(std::size_t phrase, std::size_t offset) const {
    return static_cast<TokenId>(mix64(seed_ ^ mix64(phrase * 1315423911ull + offset)) % vocab_);
  }

  // Stream of `count` tokens: phrase ids drawn by hash of (stream_seed, k).
  TokenVec stream(std::uint64_t stream_seed, std::size_t count) const {
    TokenVec out;
    out.reserve(count);
    std::size_t k = 0;
    while (out.size() < count) {
      std::size_t p = mix64(stream_seed ^ mix64(k++)) % phrases_;
      for (std::size_t j = 0; j < len_ && out.size() < count; ++j) out.push_back(token(p, j));
    }
    return out;
  }

  // Concatenation of the whole library in phrase order.
  TokenVec full_library() const {
    TokenVec out;
    out.reserve(phrases_ * len_);
    for (std::size_t p = 0; p < phrases_; ++p)
      for (std::size_t j = 0; j < len_; ++j) out.push_back(token(p, j));
    return out;
  }

 private:
  std::uint64_t seed_;
  std::size_t phrases_;
  std::size_t len_;
  TokenId vocab_;
};

struct TurnSpec {
  std::size_t new_prompt_tokens = 0;  // user/tool content appended this turn
  std::size_t output_tokens = 0;
  double think_time = 0.0;            // gap before the next turn arrives
  std::vector<std::string> tools;     // tool calls between this turn and the next
};

struct SessionSpec {
  std::uint64_t session_id = 0;
  double arrival = 0.0;  // arrival of the first turn
  std::string cls;       // "long" | "short" per the classification threshold
  std::vector<TurnSpec> turns;
};

struct WorkloadConfig {
  std::size_t num_sessions = 4;
  std::size_t num_long = 2;                 // remainder are short sessions
  std::size_t long_prompt_tokens = 12000;
  std::size_t short_prompt_tokens = 1800;
  std::size_t long_turns = 4;
  std::size_t short_turns = 4;
  std::size_t followup_tokens = 600;        // appended prompt content per later turn
  std::size_t output_tokens = 256;
  std::size_t long_output_tokens = 0;       // 0 = same as output_tokens
  double arrival_gap = 0.5;                 // stagger between session starts
  double think_time = 1.0;
  std::size_t classify_threshold = 10000;   // long iff first prompt exceeds this

  void validate() const {
    if (num_sessions == 0) throw std::invalid_argument("workload.num_sessions must be > 0");
    if (num_long > num_sessions)
      throw std::invalid_argument("workload.num_long exceeds num_sessions");
    if (output_tokens == 0) throw std::invalid_argument("workload.output_tokens must be > 0");
  }
};

// Long sessions first in id order, then short; arrivals staggered by
// arrival_gap in session order. Content is generated elsewhere (per session,
// deterministically), so the spec carries sizes only.
inline std::vector<SessionSpec> make_sessions(const WorkloadConfig& cfg) {
  cfg.validate();
  std::vector<SessionSpec> out;
  for (std::size_t s = 0; s < cfg.num_sessions; ++s) {
    SessionSpec spec;
    spec.session_id = s;
    spec.arrival = static_cast<double>(s) * cfg.arrival_gap;
    bool is_long = s < cfg.num_long;
    std::size_t first = is_long ? cfg.long_prompt_tokens : cfg.short_prompt_tokens;
    spec.cls = first > cfg.classify_threshold ? "long" : "short";
    std::size_t turns = is_long ? cfg.long_turns : cfg.short_turns;
    for (std::size_t t = 0; t < turns; ++t) {
      TurnSpec turn;
      turn.new_prompt_tokens = t == 0 ? first : cfg.followup_tokens;
      turn.output_tokens =
          is_long && cfg.long_output_tokens > 0 ? cfg.long_output_tokens : cfg.output_tokens;
      turn.think_time = cfg.think_time;
      spec.turns.push_back(turn);
    }
    out.push_back(std::move(spec));
  }
  return out;
}

// Per-session token content: pure function of (seed, session, index).
inline TokenId session_token(std::uint64_t seed, std::uint64_t session, std::size_t index,
                             TokenId vocab = 50000) {
  return static_cast<TokenId>(mix64(seed ^ mix64(session * 2654435761ull + index)) % vocab);
}

}  // namespace agentsim
