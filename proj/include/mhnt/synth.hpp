#ifndef MHNT_SYNTH_HPP
#define MHNT_SYNTH_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mhnt/flow.hpp"
#include "mhnt/packet.hpp"

namespace mhnt::synth {

struct ClientSpec {
    Ipv4Addr ip;
    std::string client_id;
    std::string topic;  // publish topic, or subscription filter
    double publish_interval_s = 2.0;
};

struct AttackSpec {
    flow::AttackClass attack_class = flow::AttackClass::SynFlood;
    double start_s = 0;
    double end_s = 0;
    double intensity = 1.0;  // events per second, deterministic count
    Ipv4Addr attacker_ip;
    // class-specific parameters
    std::uint16_t port_range_begin = 1;    // PORT_SCAN
    std::uint16_t port_range_end = 1024;   // PORT_SCAN, inclusive
    std::uint32_t credential_list_size = 64;  // BRUTE_FORCE
    std::uint32_t will_size = 4096;           // WILL_PAYLOAD payload bytes
};

// Testbed shape: one broker, five publishers, five subscribers, plus a
// list of attack windows launched from dedicated attacker hosts.
struct ScenarioConfig {
    std::uint64_t seed = 1;
    double duration_s = 60;
    double start_epoch_s = 1700000000;
    Ipv4Addr broker_ip = Ipv4Addr(10, 0, 0, 1);
    std::uint16_t broker_port = 1883;
    std::vector<ClientSpec> publishers;   // exactly 5
    std::vector<ClientSpec> subscribers;  // exactly 5
    std::vector<AttackSpec> attacks;
    double benign_fraction_target = 0.55;

    // benign session shaping
    double session_mean_s = 4.0;
    double session_gap_mean_s = 2.25;
    double keepalive_s = 15.0;
    double flaky_session_fraction = 0.1;  // benign sessions torn down by RST

    void validate() const;

    static ScenarioConfig benign_default(std::uint64_t seed, double duration_s);
    // Mixed benign + all six attack classes, tuned so flow assembly at the
    // default 60 s idle timeout yields > 20k flows at ~55% benign.
    static ScenarioConfig mixed_default(std::uint64_t seed);

    std::string to_json() const;
    static ScenarioConfig from_json(const std::string& text);
    static ScenarioConfig load(const std::string& path);
    void save(const std::string& path) const;
};

struct SimResult {
    std::vector<PacketRecord> packets;              // time-ordered
    std::vector<flow::AttackClass> labels;          // parallel to packets
};

// Deterministic per config (including seed).
SimResult simulate(const ScenarioConfig& config);

struct DatasetBuild {
    flow::AssembleResult assembled;  // flows carry ground-truth labels
    std::size_t benign_flows = 0;
    std::size_t attack_flows = 0;
    std::size_t packets = 0;
    double benign_fraction = 0;
};

DatasetBuild build_dataset(const ScenarioConfig& config, double idle_timeout_s = 60.0);

// Sidecar label file: header `packet_index,label`, one row per packet.
void write_labels_csv(const std::vector<flow::AttackClass>& labels,
                      const std::string& path);
std::vector<flow::AttackClass> read_labels_csv(const std::string& path);

}  // namespace mhnt::synth

#endif
