#include "mhnt/pcap_io.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace mhnt::pcap {

namespace {

constexpr std::uint32_t kMagic = 0xA1B2C3D4;
constexpr std::uint32_t kMagicSwapped = 0xD4C3B2A1;
constexpr std::size_t kGlobalHeaderLen = 24;
constexpr std::size_t kRecordHeaderLen = 16;
constexpr std::size_t kEthLen = 14;
constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;

// Synthesized captures carry a constant dummy MAC pair.
constexpr std::array<std::uint8_t, 6> kSrcMac = {0x02, 0x00, 0x00, 0x00, 0x00, 0x01};
constexpr std::array<std::uint8_t, 6> kDstMac = {0x02, 0x00, 0x00, 0x00, 0x00, 0x02};

std::uint32_t load_u32(const std::uint8_t* p, bool swap) {
    std::uint32_t v = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
                      std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
    if (swap)
        v = __builtin_bswap32(v);
    return v;
}

std::uint16_t load_be16(const std::uint8_t* p) {
    return std::uint16_t(std::uint16_t(p[0]) << 8 | p[1]);
}

std::uint32_t load_be32(const std::uint8_t* p) {
    return std::uint32_t(p[0]) << 24 | std::uint32_t(p[1]) << 16 |
           std::uint32_t(p[2]) << 8 | std::uint32_t(p[3]);
}

void put_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(std::uint8_t(v & 0xFF));
    out.push_back(std::uint8_t(v >> 8));
}

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v & 0xFF));
    out.push_back(std::uint8_t((v >> 8) & 0xFF));
    out.push_back(std::uint8_t((v >> 16) & 0xFF));
    out.push_back(std::uint8_t((v >> 24) & 0xFF));
}

void put_be16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v & 0xFF));
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v >> 24));
    out.push_back(std::uint8_t((v >> 16) & 0xFF));
    out.push_back(std::uint8_t((v >> 8) & 0xFF));
    out.push_back(std::uint8_t(v & 0xFF));
}

std::uint16_t inet_checksum(const std::uint8_t* data, std::size_t len,
                            std::uint32_t initial = 0) {
    std::uint32_t sum = initial;
    for (std::size_t i = 0; i + 1 < len; i += 2)
        sum += std::uint32_t(data[i]) << 8 | data[i + 1];
    if (len & 1)
        sum += std::uint32_t(data[len - 1]) << 8;
    while (sum >> 16)
        sum = (sum & 0xFFFF) + (sum >> 16);
    return std::uint16_t(~sum);
}

// Parses one Ethernet frame; returns false when the frame must be skipped.
bool parse_frame(const std::uint8_t* frame, std::size_t caplen,
                 std::uint32_t ts_sec, std::uint32_t ts_usec, PacketRecord& out) {
    if (caplen < kEthLen + 20)
        return false;
    if (load_be16(frame + 12) != kEtherTypeIpv4)
        return false;

    const std::uint8_t* ip = frame + kEthLen;
    if ((ip[0] >> 4) != 4)
        return false;
    std::size_t ihl = std::size_t(ip[0] & 0x0F) * 4;
    if (ihl < 20 || caplen < kEthLen + ihl)
        return false;
    std::uint16_t tot_len = load_be16(ip + 2);
    if (tot_len < ihl)
        return false;
    std::uint16_t frag = load_be16(ip + 6);
    if ((frag & 0x1FFF) != 0)  // non-first fragment, no reassembly
        return false;

    out.ts_sec = ts_sec;
    out.ts_usec = ts_usec;
    out.src_ip = Ipv4Addr(load_be32(ip + 12));
    out.dst_ip = Ipv4Addr(load_be32(ip + 16));
    out.ip_len = tot_len;
    out.tcp_flags = 0;
    out.src_port = 0;
    out.dst_port = 0;

    const std::uint8_t* transport = ip + ihl;
    std::size_t transport_avail = caplen - kEthLen - ihl;
    std::uint8_t proto = ip[9];

    if (proto == 6) {
        if (transport_avail < 20)
            return false;
        std::size_t thl = std::size_t(transport[12] >> 4) * 4;
        if (thl < 20 || transport_avail < thl)
            return false;
        if (tot_len < ihl + thl)
            return false;
        std::size_t payload_len = tot_len - ihl - thl;
        if (transport_avail < thl + payload_len)
            return false;  // snapped capture, payload incomplete
        out.proto = Proto::Tcp;
        out.src_port = load_be16(transport);
        out.dst_port = load_be16(transport + 2);
        out.tcp_flags = transport[13] & 0x3F;
        out.payload.assign(transport + thl, transport + thl + payload_len);
    } else if (proto == 17) {
        if (transport_avail < 8)
            return false;
        std::uint16_t udp_len = load_be16(transport + 4);
        if (udp_len < 8 || tot_len < ihl + udp_len)
            return false;
        std::size_t payload_len = udp_len - 8;
        if (transport_avail < 8 + payload_len)
            return false;
        out.proto = Proto::Udp;
        out.src_port = load_be16(transport);
        out.dst_port = load_be16(transport + 2);
        out.payload.assign(transport + 8, transport + 8 + payload_len);
    } else {
        std::size_t payload_len = tot_len - ihl;
        if (transport_avail < payload_len)
            return false;
        out.proto = Proto::Other;
        out.payload.assign(transport, transport + payload_len);
    }
    return true;
}

std::vector<std::uint8_t> build_frame(const PacketRecord& p) {
    std::vector<std::uint8_t> frame;
    std::size_t transport_hdr = p.proto == Proto::Tcp ? 20 : 8;
    std::size_t min_ip_len = 20 + transport_hdr + p.payload.size();
    std::size_t ip_len = std::max<std::size_t>(p.ip_len, min_ip_len);
    frame.reserve(kEthLen + ip_len);

    frame.insert(frame.end(), kDstMac.begin(), kDstMac.end());
    frame.insert(frame.end(), kSrcMac.begin(), kSrcMac.end());
    put_be16(frame, kEtherTypeIpv4);

    // IPv4 header, no options.
    frame.push_back(0x45);
    frame.push_back(0x00);
    put_be16(frame, std::uint16_t(ip_len));
    put_be16(frame, 0);       // identification
    put_be16(frame, 0x4000);  // DF
    frame.push_back(64);      // TTL
    frame.push_back(p.proto == Proto::Tcp ? 6 : 17);
    put_be16(frame, 0);  // checksum placeholder
    put_be32(frame, p.src_ip.value);
    put_be32(frame, p.dst_ip.value);
    std::uint16_t ip_csum = inet_checksum(frame.data() + kEthLen, 20);
    frame[kEthLen + 10] = std::uint8_t(ip_csum >> 8);
    frame[kEthLen + 11] = std::uint8_t(ip_csum & 0xFF);

    std::size_t transport_off = frame.size();
    if (p.proto == Proto::Tcp) {
        put_be16(frame, p.src_port);
        put_be16(frame, p.dst_port);
        put_be32(frame, 0);  // seq
        put_be32(frame, 0);  // ack
        frame.push_back(0x50);
        frame.push_back(p.tcp_flags);
        put_be16(frame, 65535);
        put_be16(frame, 0);  // checksum placeholder
        put_be16(frame, 0);  // urgent pointer
    } else {
        put_be16(frame, p.src_port);
        put_be16(frame, p.dst_port);
        put_be16(frame, std::uint16_t(8 + p.payload.size()));
        put_be16(frame, 0);  // checksum placeholder
    }
    frame.insert(frame.end(), p.payload.begin(), p.payload.end());
    frame.resize(kEthLen + ip_len, 0);

    // Transport checksum over the pseudo header + segment.
    std::size_t seg_len = transport_hdr + p.payload.size();
    std::uint32_t pseudo = 0;
    pseudo += (p.src_ip.value >> 16) + (p.src_ip.value & 0xFFFF);
    pseudo += (p.dst_ip.value >> 16) + (p.dst_ip.value & 0xFFFF);
    pseudo += p.proto == Proto::Tcp ? 6 : 17;
    pseudo += std::uint32_t(seg_len);
    std::uint16_t csum = inet_checksum(frame.data() + transport_off, seg_len, pseudo);
    std::size_t csum_off = transport_off + (p.proto == Proto::Tcp ? 16 : 6);
    if (p.proto == Proto::Udp && csum == 0)
        csum = 0xFFFF;
    frame[csum_off] = std::uint8_t(csum >> 8);
    frame[csum_off + 1] = std::uint8_t(csum & 0xFF);
    return frame;
}

}  // namespace

ReadResult read_pcap(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open pcap file: " + path);
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (in.bad())
        throw IoError("read failure on: " + path);

    if (data.size() >= 4) {
        std::uint32_t magic = load_u32(data.data(), false);
        if (magic != kMagic && magic != kMagicSwapped)
            throw FormatError("not a classic pcap file (bad magic): " + path);
    }
    if (data.size() < kGlobalHeaderLen)
        throw CorruptError("truncated pcap global header: " + path);

    bool swap = load_u32(data.data(), false) == kMagicSwapped;

    ReadResult result;
    std::size_t off = kGlobalHeaderLen;
    while (off + kRecordHeaderLen <= data.size()) {
        std::uint32_t ts_sec = load_u32(data.data() + off, swap);
        std::uint32_t ts_usec = load_u32(data.data() + off + 4, swap);
        std::uint32_t incl_len = load_u32(data.data() + off + 8, swap);
        off += kRecordHeaderLen;
        if (off + incl_len > data.size()) {
            ++result.skipped;  // torn final record
            break;
        }
        PacketRecord rec;
        if (parse_frame(data.data() + off, incl_len, ts_sec, ts_usec, rec))
            result.packets.push_back(std::move(rec));
        else
            ++result.skipped;
        off += incl_len;
    }
    return result;
}

std::size_t write_pcap(const std::vector<PacketRecord>& packets,
                       const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open pcap file for writing: " + path);

    std::vector<std::uint8_t> header;
    put_u32le(header, kMagic);
    put_u16le(header, 2);
    put_u16le(header, 4);
    put_u32le(header, 0);      // thiszone
    put_u32le(header, 0);      // sigfigs
    put_u32le(header, 65535);  // snaplen
    put_u32le(header, 1);      // linktype: Ethernet
    out.write(reinterpret_cast<const char*>(header.data()),
              std::streamsize(header.size()));

    for (const PacketRecord& p : packets) {
        if (p.proto == Proto::Other)
            throw ValidationError("write_pcap requires TCP or UDP packets");
        std::vector<std::uint8_t> frame = build_frame(p);
        std::vector<std::uint8_t> rec;
        put_u32le(rec, p.ts_sec);
        put_u32le(rec, p.ts_usec);
        put_u32le(rec, std::uint32_t(frame.size()));
        put_u32le(rec, std::uint32_t(frame.size()));
        out.write(reinterpret_cast<const char*>(rec.data()), std::streamsize(rec.size()));
        out.write(reinterpret_cast<const char*>(frame.data()), std::streamsize(frame.size()));
    }
    out.flush();
    if (!out)
        throw IoError("write failure on: " + path);
    return packets.size();
}

}  // namespace mhnt::pcap
