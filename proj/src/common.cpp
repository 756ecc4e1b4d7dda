#include "mhnt/common.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>

namespace mhnt {

std::string Ipv4Addr::str() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (value >> 24) & 0xFF,
                  (value >> 16) & 0xFF, (value >> 8) & 0xFF, value & 0xFF);
    return buf;
}

Ipv4Addr Ipv4Addr::parse(const std::string& text) {
    std::uint32_t parts[4];
    const char* p = text.c_str();
    const char* end = p + text.size();
    for (int i = 0; i < 4; ++i) {
        if (i > 0) {
            if (p >= end || *p != '.')
                throw ValidationError("bad IPv4 address: " + text);
            ++p;
        }
        auto [next, ec] = std::from_chars(p, end, parts[i]);
        if (ec != std::errc{} || next == p || parts[i] > 255)
            throw ValidationError("bad IPv4 address: " + text);
        p = next;
    }
    if (p != end)
        throw ValidationError("bad IPv4 address: " + text);
    return Ipv4Addr(std::uint8_t(parts[0]), std::uint8_t(parts[1]),
                    std::uint8_t(parts[2]), std::uint8_t(parts[3]));
}

std::string to_hex(const std::uint8_t* data, std::size_t len) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (std::size_t i = 0; i < len; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xF]);
    }
    return out;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{})
        throw Error("double formatting failed");
    return std::string(buf, ptr);
}

}  // namespace mhnt
