#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "mhnt/evidence.hpp"
#include "mhnt/models.hpp"

namespace mhnt::pipeline {

struct DetectOptions {
    std::string pcap_path;      // exactly one of pcap_path / scenario_path
    std::string scenario_path;
    std::string model_path;
    std::string store_path;
    std::optional<Ipv4Addr> broker_ip;  // required for pcap input; a scenario
                                        // supplies its own unless overridden
    std::optional<std::uint16_t> broker_port;
    double threshold = 0.5;
    double idle_timeout_s = 60;
};

struct DetectSummary {
    std::size_t flows_seen = 0;
    std::size_t flagged = 0;
    std::map<std::string, std::size_t> per_verdict;
    double mean_latency_us = 0;  // featurize + single-flow predict
    std::string final_entry_hash;  // hex of the chain head after appends
    std::uint64_t store_entries = 0;
};

/// Classifies every assembled flow; flows whose top class is non-BENIGN with
/// score >= threshold are appended to the evidence store. detected_at is the
/// flow's last packet timestamp, which keeps equal-seed runs bit-identical.
DetectSummary detect(const DetectOptions& opts);

std::string render_summary(const DetectSummary& s);

}  // namespace mhnt::pipeline
