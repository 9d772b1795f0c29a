#include "agentsim/kvcache.hpp"

#include <algorithm>

namespace agentsim {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv_step(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (i * 8)) & 0xff;
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

BlockPool::BlockPool(std::size_t total_blocks, std::size_t tokens_per_block)
    : tpb_(tokens_per_block), blocks_(total_blocks), free_count_(total_blocks) {
  if (total_blocks == 0 || tokens_per_block == 0)
    throw std::invalid_argument("BlockPool: total_blocks and tokens_per_block must be positive");
}

std::vector<std::uint64_t> BlockPool::block_hashes(TokenSpan prompt) const {
  // Chained hashing: block i's hash commits to block i-1's, so a cached block
  // is only a hit when its whole preceding prefix matches.
  std::vector<std::uint64_t> hashes;
  std::uint64_t h = kFnvOffset;
  std::size_t full = prompt.size() / tpb_;
  hashes.reserve(full);
  for (std::size_t b = 0; b < full; ++b) {
    for (std::size_t i = 0; i < tpb_; ++i) h = fnv_step(h, prompt[b * tpb_ + i]);
    hashes.push_back(h);
  }
  return hashes;
}

std::size_t BlockPool::hit_chain(const std::vector<std::uint64_t>& hashes) const {
  std::size_t hit = 0;
  for (std::uint64_t h : hashes) {
    auto it = hash_index_.find(h);
    if (it == hash_index_.end()) break;
    ++hit;
  }
  return hit;
}

RequestFootprint BlockPool::footprint(TokenSpan prompt) const {
  RequestFootprint fp;
  fp.prompt_tok = prompt.size();
  std::size_t total = (prompt.size() + tpb_ - 1) / tpb_;
  fp.hit = hit_chain(block_hashes(prompt));
  fp.need = total - fp.hit;
  return fp;
}

std::size_t BlockPool::evictable_blocks() const {
  std::size_t n = 0;
  for (const Block& b : blocks_)
    if (b.allocated && b.refcount == 0) ++n;
  return n;
}

bool BlockPool::feasible(TokenSpan prompt, const RequestFootprint& fp) const {
  auto hashes = block_hashes(prompt);
  std::size_t hit = hit_chain(hashes);
  // Hit blocks get pinned by this admission, so unpinned hit blocks must not
  // be counted as evictable capacity for the need side.
  std::size_t hit_unpinned = 0;
  for (std::size_t b = 0; b < hit; ++b) {
    const Block& blk = blocks_[hash_index_.at(hashes[b])];
    if (blk.refcount == 0) ++hit_unpinned;
  }
  return fp.need <= free_count_ + evictable_blocks() - hit_unpinned;
}

std::optional<std::size_t> BlockPool::take_block(const std::vector<bool>& pinned_now, double now) {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (!blocks_[i].allocated) {
      --free_count_;
      blocks_[i].allocated = true;
      blocks_[i].refcount = 0;
      blocks_[i].hashed = false;
      blocks_[i].last_use = now;
      return i;
    }
  }
  // LRU over unpinned allocated blocks, lowest index on ties.
  std::optional<std::size_t> victim;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Block& b = blocks_[i];
    if (!b.allocated || b.refcount > 0 || pinned_now[i]) continue;
    if (!victim || b.last_use < blocks_[*victim].last_use) victim = i;
  }
  if (!victim) return std::nullopt;
  evict(*victim);
  blocks_[*victim].allocated = true;
  blocks_[*victim].last_use = now;
  return victim;
}

void BlockPool::evict(std::size_t idx) {
  Block& b = blocks_[idx];
  if (b.hashed) {
    auto it = hash_index_.find(b.hash);
    if (it != hash_index_.end() && it->second == idx) hash_index_.erase(it);
  }
  b.hashed = false;
  b.allocated = false;
  b.refcount = 0;
}

bool BlockPool::admit(RequestId id, TokenSpan prompt, const RequestFootprint& fp, double now) {
  if (owned_.count(id)) throw std::logic_error("BlockPool::admit: request already admitted");
  if (!feasible(prompt, fp)) return false;

  auto hashes = block_hashes(prompt);
  std::size_t hit = hit_chain(hashes);
  std::size_t total = (prompt.size() + tpb_ - 1) / tpb_;

  std::vector<std::size_t>& owned = owned_[id];
  std::vector<bool> pinned_now(blocks_.size(), false);

  for (std::size_t b = 0; b < hit; ++b) {
    std::size_t idx = hash_index_.at(hashes[b]);
    ++blocks_[idx].refcount;
    blocks_[idx].last_use = now;
    pinned_now[idx] = true;
    owned.push_back(idx);
  }
  for (std::size_t b = hit; b < total; ++b) {
    auto idx = take_block(pinned_now, now);
    if (!idx) {  // feasible() should have caught this
      release(id, now);
      throw std::logic_error("BlockPool::admit: allocation failed after feasibility check");
    }
    Block& blk = blocks_[*idx];
    blk.refcount = 1;
    pinned_now[*idx] = true;
    if (b < hashes.size() && !hash_index_.count(hashes[b])) {
      blk.hash = hashes[b];
      blk.hashed = true;
      hash_index_[hashes[b]] = *idx;
    }
    owned.push_back(*idx);
  }

  ++admissions_;
  sum_hit_ += hit;
  sum_need_ += total - hit;
  return true;
}

bool BlockPool::grow(RequestId id, double now) {
  auto it = owned_.find(id);
  if (it == owned_.end()) throw std::logic_error("BlockPool::grow: request not admitted");
  std::vector<bool> pinned_now(blocks_.size(), false);
  auto idx = take_block(pinned_now, now);
  if (!idx) {
    ++grow_failures_;
    return false;
  }
  blocks_[*idx].refcount = 1;
  it->second.push_back(*idx);
  return true;
}

void BlockPool::release(RequestId id, double now) {
  auto it = owned_.find(id);
  if (it == owned_.end()) throw std::logic_error("BlockPool::release: request not admitted");
  for (std::size_t idx : it->second) {
    Block& b = blocks_[idx];
    --b.refcount;
    b.last_use = now;
  }
  owned_.erase(it);
}

double BlockPool::hit_rate() const {
  std::uint64_t denom = sum_hit_ + sum_need_;
  if (denom == 0) throw std::logic_error("BlockPool::hit_rate: no admissions");
  return static_cast<double>(sum_hit_) / static_cast<double>(denom);
}

}  // namespace agentsim
