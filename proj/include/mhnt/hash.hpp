#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace mhnt {

using Sha256Digest = std::array<std::uint8_t, 32>;

Sha256Digest sha256(std::span<const std::uint8_t> data);
Sha256Digest sha256(std::string_view data);

std::string digest_hex(const Sha256Digest& d);

/// Parses exactly 64 lowercase hex chars. Throws FormatError otherwise.
Sha256Digest digest_from_hex(std::string_view hex);

}  // namespace mhnt
