#pragma once

#include <cstdint>

#include "agentsim/specdec.hpp"

namespace agentsim {

// Deterministic mixing hash used across the simulator (splitmix64 finalizer).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Markov-style mock model: the next token depends only on (seed, context).
// With probability rho the oracle re-emits the continuation of the most
// recent earlier occurrence of the current order-k tail; otherwise it emits a
// hash-fresh token. rho = 0 yields an incompressible stream, rho near 1 a
// highly repetitive one. Occurrence search is limited to a recency window to
// bound cost; the window is part of the oracle definition.
class MarkovOracle : public TokenOracle {
 public:
  MarkovOracle(std::uint64_t seed, std::size_t order, double rho, TokenId vocab,
               std::size_t window = 4096)
      : seed_(seed), order_(order), rho_(rho), vocab_(vocab), window_(window) {}

  TokenVec next_tokens(TokenSpan context, std::size_t n) const override {
    TokenVec ctx(context.begin(), context.end());
    TokenVec out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      TokenId t = next_one(ctx);
      out.push_back(t);
      ctx.push_back(t);
    }
    return out;
  }

 private:
  TokenId next_one(const TokenVec& ctx) const {
    std::uint64_t h = seed_;
    std::size_t from = ctx.size() > order_ ? ctx.size() - order_ : 0;
    for (std::size_t j = from; j < ctx.size(); ++j) h = mix64(h ^ ctx[j]);
    h = mix64(h ^ ctx.size());

    double coin = static_cast<double>(h % 1000000ull) / 1000000.0;
    if (coin < rho_ && ctx.size() > order_ && order_ > 0) {
      // Latest earlier occurrence of the order-k tail inside the window.
      std::size_t lo = ctx.size() > window_ ? ctx.size() - window_ : 0;
      std::size_t tail = ctx.size() - order_;
      for (std::size_t p = tail; p-- > lo;) {
        bool match = true;
        for (std::size_t j = 0; j < order_; ++j) {
          if (ctx[p + j] != ctx[tail + j]) {
            match = false;
            break;
          }
        }
        if (match) return ctx[p + order_];
      }
    }
    return static_cast<TokenId>(mix64(h) % vocab_);
  }

  std::uint64_t seed_;
  std::size_t order_;
  double rho_;
  TokenId vocab_;
  std::size_t window_;
};

// Replays a fixed stream: the token emitted at context length c is
// stream[c - base_len]. With base_len equal to the prompt length, generation
// continues the stream right after the prompt.
class ReplayOracle : public TokenOracle {
 public:
  ReplayOracle(TokenVec stream, std::size_t base_len)
      : stream_(std::move(stream)), base_(base_len) {}

  TokenVec next_tokens(TokenSpan context, std::size_t n) const override {
    TokenVec out;
    out.reserve(n);
    std::size_t pos = context.size() - base_;
    for (std::size_t i = 0; i < n; ++i) out.push_back(stream_[(pos + i) % stream_.size()]);
    return out;
  }

  const TokenVec& stream() const { return stream_; }

 private:
  TokenVec stream_;
  std::size_t base_;
};

}  // namespace agentsim
