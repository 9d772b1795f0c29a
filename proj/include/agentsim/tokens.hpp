#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace agentsim {

// Integer token ids. Real vocabularies live below kSentinelBase; ids at or
// above it are reserved separator sentinels used to join documents inside a
// single index without creating cross-document matches.
using TokenId = std::uint32_t;

inline constexpr TokenId kSentinelBase = 1u << 30;

inline constexpr bool is_sentinel(TokenId t) { return t >= kSentinelBase; }

// Unique sentinel for the n-th document boundary.
inline constexpr TokenId sentinel(std::uint32_t n) { return kSentinelBase + n; }

using TokenSpan = std::span<const TokenId>;
using TokenVec = std::vector<TokenId>;

}  // namespace agentsim
