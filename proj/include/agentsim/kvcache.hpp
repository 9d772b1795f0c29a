#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "agentsim/tokens.hpp"

namespace agentsim {

using RequestId = std::uint64_t;

struct RequestFootprint {
  std::size_t hit = 0;   // blocks reusable from cache
  std::size_t need = 0;  // new blocks required
  std::size_t prompt_tok = 0;

  std::size_t total() const { return hit + need; }
};

// Paged KV-cache pool with chained prefix hashing, reference counting and LRU
// eviction over unpinned blocks. Only full blocks are hashable; the trailing
// partial block always counts as need.
class BlockPool {
 public:
  BlockPool(std::size_t total_blocks, std::size_t tokens_per_block);

  std::size_t total_blocks() const { return blocks_.size(); }
  std::size_t tokens_per_block() const { return tpb_; }

  RequestFootprint footprint(TokenSpan prompt) const;

  // True iff `need` new blocks can be provided from free plus evictable
  // blocks, not counting the prompt's own cached hit chain.
  bool feasible(TokenSpan prompt, const RequestFootprint& fp) const;

  // Pins the hit chain, allocates `need` blocks (evicting LRU unpinned blocks
  // as necessary) and hashes the newly covered full blocks. Returns false on
  // rejection, leaving the pool unchanged.
  bool admit(RequestId id, TokenSpan prompt, const RequestFootprint& fp, double now);

  // Allocates one more (unhashed) block for decode-phase KV growth. Returns
  // false when nothing is free or evictable.
  bool grow(RequestId id, double now);

  void release(RequestId id, double now);

  std::size_t free_blocks() const { return free_count_; }
  // Allocated blocks with refcount 0 (reusable capacity).
  std::size_t evictable_blocks() const;

  double hit_rate() const;
  std::uint64_t admitted_requests() const { return admissions_; }
  std::uint64_t total_hit_blocks() const { return sum_hit_; }
  std::uint64_t total_need_blocks() const { return sum_need_; }

 private:
  struct Block {
    std::uint64_t hash = 0;
    bool hashed = false;
    bool allocated = false;
    int refcount = 0;
    double last_use = 0.0;
  };

  std::vector<std::uint64_t> block_hashes(TokenSpan prompt) const;
  std::size_t hit_chain(const std::vector<std::uint64_t>& hashes) const;
  std::optional<std::size_t> take_block(const std::vector<bool>& pinned_now, double now);
  void evict(std::size_t idx);

  std::size_t tpb_;
  std::vector<Block> blocks_;
  std::unordered_map<std::uint64_t, std::size_t> hash_index_;
  std::map<RequestId, std::vector<std::size_t>> owned_;  // pinned + allocated per request
  std::size_t free_count_;
  std::uint64_t admissions_ = 0;
  std::uint64_t sum_hit_ = 0;
  std::uint64_t sum_need_ = 0;
  std::uint64_t grow_failures_ = 0;
};

}  // namespace agentsim
