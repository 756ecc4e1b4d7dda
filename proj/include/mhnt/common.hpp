#ifndef MHNT_COMMON_HPP
#define MHNT_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mhnt {

// Base for all errors raised by the toolkit.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : Error {
    using Error::Error;
};

// Unrecognized or corrupt on-disk formats (pcap magic, model magic, csv header).
struct FormatError : Error {
    using Error::Error;
};

// Structurally valid file carrying values that violate a contract.
struct ValidationError : Error {
    using Error::Error;
};

// Recognized format cut short or internally inconsistent.
struct CorruptError : Error {
    using Error::Error;
};

struct UnsupportedVersionError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// IPv4 address held in host byte order.
struct Ipv4Addr {
    std::uint32_t value = 0;

    constexpr Ipv4Addr() = default;
    constexpr explicit Ipv4Addr(std::uint32_t v) : value(v) {}
    constexpr Ipv4Addr(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
        : value((std::uint32_t(a) << 24) | (std::uint32_t(b) << 16) |
                (std::uint32_t(c) << 8) | std::uint32_t(d)) {}

    auto operator<=>(const Ipv4Addr&) const = default;

    std::string str() const;
    // Parses dotted-quad notation; throws ValidationError on anything else.
    static Ipv4Addr parse(const std::string& text);
};

// splitmix64: cheap stream derivation so every component owns an
// independent deterministic seed derived from one user-facing seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

std::string to_hex(const std::uint8_t* data, std::size_t len);

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

}  // namespace mhnt

#endif
