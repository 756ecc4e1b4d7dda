#ifndef MHNT_FLOW_HPP
#define MHNT_FLOW_HPP

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mhnt/packet.hpp"

namespace mhnt::flow {

enum class AttackClass : std::uint8_t {
    Benign = 0,
    InvalidSubPub,
    SynFlood,
    BruteForce,
    Malformed,
    PortScan,
    WillPayload,
};

inline constexpr std::size_t kAttackClassCount = 7;

const char* attack_class_name(AttackClass c);
AttackClass attack_class_from_name(const std::string& name);

struct FlowKey {
    Ipv4Addr src_ip;
    Ipv4Addr dst_ip;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    Proto proto = Proto::Tcp;

    auto operator<=>(const FlowKey&) const = default;

    FlowKey reverse() const { return {dst_ip, src_ip, dst_port, src_port, proto}; }
};

inline constexpr std::size_t kFeatureCount = 24;

// Statistical summary of one unidirectional flow. Only header and MQTT
// structural counts; no payload contents.
struct FeatureVector {
    double duration_s = 0;
    double pkt_count = 0;
    double byte_count = 0;
    double pkt_len_min = 0;
    double pkt_len_max = 0;
    double pkt_len_mean = 0;
    double pkt_len_std = 0;
    double iat_min = 0;
    double iat_max = 0;
    double iat_mean = 0;
    double iat_std = 0;
    double syn_cnt = 0;
    double ack_cnt = 0;
    double fin_cnt = 0;
    double rst_cnt = 0;
    double psh_cnt = 0;
    double mqtt_pkt_cnt = 0;
    double mqtt_connect_cnt = 0;
    double mqtt_publish_cnt = 0;
    double mqtt_subscribe_cnt = 0;
    double mqtt_malformed_cnt = 0;
    double mqtt_mean_topic_len = 0;
    double dst_port_is_broker = 0;
    double direction = 0;

    std::array<double, kFeatureCount> to_array() const;
    static FeatureVector from_array(const std::array<double, kFeatureCount>& a);
    static const std::array<const char*, kFeatureCount>& names();

    bool operator==(const FeatureVector&) const = default;
};

struct FlowRecord {
    FlowKey key;
    std::uint8_t direction = 0;  // 0 = client->broker endpoint, 1 = otherwise
    double first_ts = 0;
    double last_ts = 0;
    FeatureVector features;
    std::optional<AttackClass> label;

    bool operator==(const FlowRecord&) const = default;
};

struct AssembleOptions {
    Ipv4Addr broker_ip;
    std::uint16_t broker_port = 1883;
    double idle_timeout_s = 60.0;
};

struct AssembleResult {
    std::vector<FlowRecord> flows;
    std::size_t dropped = 0;  // packets with proto OTHER
    // Input packet indices per flow, parallel to `flows`. Members are in
    // time order; every non-dropped packet appears in exactly one flow.
    std::vector<std::vector<std::size_t>> members;
};

// Groups packets into unidirectional flows. A flow ends after an idle
// gap longer than idle_timeout_s or once a FIN/RST was seen on it.
// Output is ordered by first_ts (key order breaks ties).
AssembleResult assemble(const std::vector<PacketRecord>& packets,
                        const AssembleOptions& opts);

// Computes the feature vector for one flow's packets (time-ordered,
// same 5-tuple, non-empty).
FeatureVector featurize(std::span<const PacketRecord> flow_packets,
                        std::uint8_t direction, std::uint16_t broker_port);

// Assigns each flow the majority label of its member packets; ties go
// to the non-benign class (lowest class id among tied attack classes).
void label_flows(AssembleResult& result,
                 const std::vector<AttackClass>& packet_labels);

// CSV interchange. Header is fixed; import rejects unknown headers and
// non-finite feature values. import(export(x)) == x.
std::size_t export_csv(const std::vector<FlowRecord>& flows, const std::string& path);
std::vector<FlowRecord> import_csv(const std::string& path);

std::string csv_header();
std::string csv_row(const FlowRecord& f, std::uint64_t flow_id);

}  // namespace mhnt::flow

#endif
