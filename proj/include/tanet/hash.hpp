// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace tanet {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

/// 64-bit FNV-1a, chainable through `state`.
inline std::uint64_t fnv1a(std::span<const unsigned char> bytes,
                           std::uint64_t state = kFnvOffset) {
  for (unsigned char b : bytes) {
    state ^= b;
    state *= 0x100000001b3ULL;
  }
  return state;
}

inline std::uint64_t fnv1a(std::string_view text, std::uint64_t state = kFnvOffset) {
  return fnv1a({reinterpret_cast<const unsigned char*>(text.data()), text.size()}, state);
}

/// Fixed-width lowercase hex, 16 digits.
std::string hex64(std::uint64_t value);

}  // namespace tanet
