#ifndef MHNT_PACKET_HPP
#define MHNT_PACKET_HPP

#include <cstdint>
#include <vector>

#include "mhnt/common.hpp"

namespace mhnt {

enum class Proto : std::uint8_t { Tcp = 6, Udp = 17, Other = 0 };

// TCP flag bits, matching byte 13 of the TCP header.
namespace tcpflag {
inline constexpr std::uint8_t FIN = 0x01;
inline constexpr std::uint8_t SYN = 0x02;
inline constexpr std::uint8_t RST = 0x04;
inline constexpr std::uint8_t PSH = 0x08;
inline constexpr std::uint8_t ACK = 0x10;
inline constexpr std::uint8_t URG = 0x20;
}  // namespace tcpflag

// One captured (or synthesized) IPv4 packet. ip_len is the total IP
// datagram length; for records built with the make_* helpers it equals
// header lengths + payload exactly, which is what the pcap writer emits.
struct PacketRecord {
    std::uint32_t ts_sec = 0;
    std::uint32_t ts_usec = 0;  // < 1'000'000
    Ipv4Addr src_ip;
    Ipv4Addr dst_ip;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    Proto proto = Proto::Other;
    std::uint8_t tcp_flags = 0;  // meaningful only for proto == Tcp
    std::uint32_t ip_len = 0;
    std::vector<std::uint8_t> payload;

    double ts() const { return double(ts_sec) + double(ts_usec) * 1e-6; }

    bool operator==(const PacketRecord&) const = default;
};

PacketRecord make_tcp_packet(double ts, Ipv4Addr src_ip, std::uint16_t src_port,
                             Ipv4Addr dst_ip, std::uint16_t dst_port,
                             std::uint8_t flags,
                             std::vector<std::uint8_t> payload = {});

PacketRecord make_udp_packet(double ts, Ipv4Addr src_ip, std::uint16_t src_port,
                             Ipv4Addr dst_ip, std::uint16_t dst_port,
                             std::vector<std::uint8_t> payload = {});

}  // namespace mhnt

#endif
