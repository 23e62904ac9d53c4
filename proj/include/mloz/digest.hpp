#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace mloz {

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(const void* bytes, std::size_t n,
                             std::uint64_t state = kFnvOffsetBasis) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
        state ^= p[i];
        state *= kFnvPrime;
    }
    return state;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t state = kFnvOffsetBasis) {
    return fnv1a64(s.data(), s.size(), state);
}

}  // namespace mloz
