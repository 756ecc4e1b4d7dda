#include "mhnt/packet.hpp"

#include <cmath>

namespace mhnt {

namespace {

void set_ts(PacketRecord& p, double ts) {
    if (ts < 0)
        throw ValidationError("packet timestamp must be non-negative");
    double sec = std::floor(ts);
    p.ts_sec = std::uint32_t(sec);
    p.ts_usec = std::uint32_t(std::llround((ts - sec) * 1e6));
    if (p.ts_usec >= 1000000) {  // rounding carried into the next second
        p.ts_sec += 1;
        p.ts_usec -= 1000000;
    }
}

}  // namespace

PacketRecord make_tcp_packet(double ts, Ipv4Addr src_ip, std::uint16_t src_port,
                             Ipv4Addr dst_ip, std::uint16_t dst_port,
                             std::uint8_t flags, std::vector<std::uint8_t> payload) {
    PacketRecord p;
    set_ts(p, ts);
    p.src_ip = src_ip;
    p.dst_ip = dst_ip;
    p.src_port = src_port;
    p.dst_port = dst_port;
    p.proto = Proto::Tcp;
    p.tcp_flags = flags;
    p.ip_len = std::uint32_t(20 + 20 + payload.size());
    p.payload = std::move(payload);
    return p;
}

PacketRecord make_udp_packet(double ts, Ipv4Addr src_ip, std::uint16_t src_port,
                             Ipv4Addr dst_ip, std::uint16_t dst_port,
                             std::vector<std::uint8_t> payload) {
    PacketRecord p;
    set_ts(p, ts);
    p.src_ip = src_ip;
    p.dst_ip = dst_ip;
    p.src_port = src_port;
    p.dst_port = dst_port;
    p.proto = Proto::Udp;
    p.ip_len = std::uint32_t(20 + 8 + payload.size());
    p.payload = std::move(payload);
    return p;
}

}  // namespace mhnt
