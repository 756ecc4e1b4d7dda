#ifndef MHNT_PCAP_IO_HPP
#define MHNT_PCAP_IO_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "mhnt/packet.hpp"

namespace mhnt::pcap {

struct ReadResult {
    std::vector<PacketRecord> packets;
    std::size_t skipped = 0;  // non-IPv4, fragmented or truncated frames
};

// Reads a classic pcap file (magic 0xA1B2C3D4, either byte order,
// linktype Ethernet). Frames that are not parseable IPv4 are counted in
// `skipped`, never fatal. Throws FormatError on a foreign magic,
// CorruptError on a truncated global header, IoError if unreadable.
ReadResult read_pcap(const std::string& path);

// Writes packets as Ethernet/IPv4/{TCP,UDP} frames with microsecond
// timestamps. Every packet must have proto Tcp or Udp. Returns the
// number of records written.
std::size_t write_pcap(const std::vector<PacketRecord>& packets,
                       const std::string& path);

}  // namespace mhnt::pcap

#endif
