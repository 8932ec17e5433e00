#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>

namespace dean {

/// 32-byte SHA-256 digest. Ordered lexicographically by byte.
struct Hash32 {
    std::array<std::uint8_t, 32> bytes{};

    static Hash32 zero() { return Hash32{}; }
    bool isZero() const;

    std::string hex() const;
    /// Short prefix for log lines.
    std::string shortHex(std::size_t chars = 12) const;
    static Hash32 fromHex(std::string_view hex);

    auto operator<=>(const Hash32&) const = default;
    bool operator==(const Hash32&) const = default;
};

/// SHA-256 over an arbitrary byte sequence.
Hash32 hashBytes(std::span<const std::uint8_t> payload);
Hash32 hashBytes(std::string_view payload);

struct Hash32Hasher {
    std::size_t operator()(const Hash32& h) const noexcept {
        std::size_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | h.bytes[static_cast<std::size_t>(i)];
        return v;
    }
};

}  // namespace dean
