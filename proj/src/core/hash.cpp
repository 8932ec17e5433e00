#include "dean/core/hash.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <stdexcept>

#include "dean/core/error.hpp"

namespace dean {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

bool Hash32::isZero() const {
    return std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b == 0; });
}

std::string Hash32::hex() const {
    std::string out;
    out.reserve(64);
    for (auto b : bytes) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0f]);
    }
    return out;
}

std::string Hash32::shortHex(std::size_t chars) const { return hex().substr(0, chars); }

Hash32 Hash32::fromHex(std::string_view hex) {
    if (hex.size() != 64) throw DeanError(ErrorCode::BadFormat, "hash hex must be 64 chars");
    Hash32 h;
    for (std::size_t i = 0; i < 32; ++i) {
        int hi = nibble(hex[2 * i]);
        int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw DeanError(ErrorCode::BadFormat, "non-hex digit in hash");
        h.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return h;
}

Hash32 hashBytes(std::span<const std::uint8_t> payload) {
    Hash32 out;
    unsigned int len = 0;
    // EVP_Digest is one-shot and allocates its own context.
    if (EVP_Digest(payload.data(), payload.size(), out.bytes.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.bytes.size()) {
        throw std::runtime_error("EVP_Digest(sha256) failed");
    }
    return out;
}

Hash32 hashBytes(std::string_view payload) {
    return hashBytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(payload.data()),
                                                   payload.size()));
}

}  // namespace dean
