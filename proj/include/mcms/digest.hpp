#pragma once

#include "mcms/bytes.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mcms {

/// SHA-256 content digest. Used for asset dedup and distribution addressing.
struct Digest {
    std::array<std::uint8_t, 32> bytes{};

    [[nodiscard]] std::string hex() const;
    static std::optional<Digest> from_hex(std::string_view hex);

    friend auto operator<=>(const Digest&, const Digest&) = default;
};

Digest sha256(ByteView data);
inline Digest sha256(std::string_view data) { return sha256(as_bytes(data)); }

/// CRC-32C (Castagnoli), reflected, init and xorout 0xFFFFFFFF.
std::uint32_t crc32c(ByteView data);

} // namespace mcms
