#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mhnt/flow.hpp"
#include "mhnt/hash.hpp"

namespace mhnt::evidence {

struct EvidenceEntry {
    std::uint64_t entry_id = 0;
    flow::FlowRecord flow;
    std::string verdict;  // attack class name, or MALICIOUS from binary models
    double score = 0;     // top class probability in [0,1]
    std::string model_kind;
    double detected_at = 0;  // epoch seconds
    Sha256Digest prev_hash{};
    Sha256Digest entry_hash{};
};

struct VerifyResult {
    bool valid = false;
    std::optional<std::uint64_t> first_bad_entry;
    std::uint64_t entries = 0;  // verified entries (full count when valid)
};

struct Filter {
    std::optional<flow::AttackClass> attack_class;
    std::optional<Ipv4Addr> src_ip;
    std::optional<Ipv4Addr> dst_ip;
    std::optional<std::pair<double, double>> time_range;  // detected_at in [a,b]
};

/// Append-only JSONL hash chain. One JSON object per line with sorted keys;
/// entry_hash = SHA-256(prev_hash bytes || canonical JSON of the entry minus
/// both hash fields). Entry 0 chains from 32 zero bytes.
class EvidenceStore {
public:
    /// Opens (creating if needed) for appending; takes an exclusive advisory
    /// lock and replays the existing chain. Throws CorruptError when the
    /// existing content fails verification.
    explicit EvidenceStore(std::string path);
    ~EvidenceStore();
    EvidenceStore(const EvidenceStore&) = delete;
    EvidenceStore& operator=(const EvidenceStore&) = delete;

    /// Durable append (fsync before return). Throws ValidationError on a
    /// BENIGN verdict or out-of-range score.
    EvidenceEntry append(const flow::FlowRecord& f, const std::string& verdict,
                         double score, const std::string& model_kind,
                         double detected_at);

    std::uint64_t entries() const { return next_id_; }
    const Sha256Digest& last_hash() const { return last_hash_; }

    static VerifyResult verify(const std::string& path);

    /// Entries matching every present filter field, in id order.
    /// Throws CorruptError when the store does not verify.
    static std::vector<EvidenceEntry> query(const std::string& path,
                                            const Filter& filter);

private:
    std::string path_;
    int fd_ = -1;
    std::uint64_t next_id_ = 0;
    Sha256Digest last_hash_{};
};

}  // namespace mhnt::evidence
