#include "mhnt/hash.hpp"

#include <openssl/evp.h>

#include "mhnt/common.hpp"

namespace mhnt {

Sha256Digest sha256(std::span<const std::uint8_t> data) {
    Sha256Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(),
                   nullptr) != 1 ||
        len != out.size())
        throw Error("sha256 computation failed");
    return out;
}

Sha256Digest sha256(std::string_view data) {
    return sha256(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::string digest_hex(const Sha256Digest& d) {
    return to_hex(d.data(), d.size());
}

Sha256Digest digest_from_hex(std::string_view hex) {
    if (hex.size() != 64)
        throw FormatError("digest hex must be 64 chars");
    // Lowercase only: tamper checks re-parse stored digests, and accepting
    // 'A' for 'a' would let a byte flip through unnoticed.
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9')
            return c - '0';
        if (c >= 'a' && c <= 'f')
            return c - 'a' + 10;
        throw FormatError("invalid hex digit in digest");
    };
    Sha256Digest d{};
    for (std::size_t i = 0; i < 32; ++i)
        d[i] = std::uint8_t(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    return d;
}

}  // namespace mhnt
