#include "mhnt/evidence.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mhnt::evidence {

namespace {

nlohmann::json flow_to_json(const flow::FlowRecord& f) {
    nlohmann::json j;
    j["src_ip"] = f.key.src_ip.str();
    j["dst_ip"] = f.key.dst_ip.str();
    j["src_port"] = f.key.src_port;
    j["dst_port"] = f.key.dst_port;
    j["proto"] = f.key.proto == Proto::Tcp   ? "TCP"
                 : f.key.proto == Proto::Udp ? "UDP"
                                             : "OTHER";
    j["direction"] = f.direction;
    j["first_ts"] = f.first_ts;
    j["last_ts"] = f.last_ts;
    auto feats = f.features.to_array();
    j["features"] = std::vector<double>(feats.begin(), feats.end());
    j["label"] = f.label ? flow::attack_class_name(*f.label) : "";
    return j;
}

flow::FlowRecord flow_from_json(const nlohmann::json& j) {
    flow::FlowRecord f;
    f.key.src_ip = Ipv4Addr::parse(j.at("src_ip").get<std::string>());
    f.key.dst_ip = Ipv4Addr::parse(j.at("dst_ip").get<std::string>());
    f.key.src_port = j.at("src_port").get<std::uint16_t>();
    f.key.dst_port = j.at("dst_port").get<std::uint16_t>();
    std::string proto = j.at("proto").get<std::string>();
    f.key.proto = proto == "TCP"   ? Proto::Tcp
                  : proto == "UDP" ? Proto::Udp
                                   : Proto::Other;
    f.direction = j.at("direction").get<std::uint8_t>();
    f.first_ts = j.at("first_ts").get<double>();
    f.last_ts = j.at("last_ts").get<double>();
    auto feats = j.at("features").get<std::vector<double>>();
    if (feats.size() != flow::kFeatureCount)
        throw FormatError("evidence flow has wrong feature count");
    std::array<double, flow::kFeatureCount> a{};
    std::copy(feats.begin(), feats.end(), a.begin());
    f.features = flow::FeatureVector::from_array(a);
    std::string label = j.at("label").get<std::string>();
    if (!label.empty())
        f.label = flow::attack_class_from_name(label);
    return f;
}

// Canonical serialization that feeds the hash: sorted keys, compact, the two
// hash fields excluded. nlohmann::json already sorts keys and prints doubles
// as shortest round-trip decimals.
std::string canonical_body(const EvidenceEntry& e) {
    nlohmann::json j;
    j["detected_at"] = e.detected_at;
    j["entry_id"] = e.entry_id;
    j["flow"] = flow_to_json(e.flow);
    j["model_kind"] = e.model_kind;
    j["score"] = e.score;
    j["verdict"] = e.verdict;
    return j.dump();
}

Sha256Digest chain_hash(const Sha256Digest& prev, const std::string& body) {
    std::vector<std::uint8_t> buf;
    buf.reserve(prev.size() + body.size());
    buf.insert(buf.end(), prev.begin(), prev.end());
    buf.insert(buf.end(), body.begin(), body.end());
    return sha256(std::span<const std::uint8_t>(buf.data(), buf.size()));
}

std::string entry_line(const EvidenceEntry& e) {
    nlohmann::json j;
    j["detected_at"] = e.detected_at;
    j["entry_hash"] = digest_hex(e.entry_hash);
    j["entry_id"] = e.entry_id;
    j["flow"] = flow_to_json(e.flow);
    j["model_kind"] = e.model_kind;
    j["prev_hash"] = digest_hex(e.prev_hash);
    j["score"] = e.score;
    j["verdict"] = e.verdict;
    return j.dump() + "\n";
}

// Parses and chain-checks every line. Returns entries up to the first bad
// one (recorded in `result`).
std::vector<EvidenceEntry> replay(std::istream& in, VerifyResult& result) {
    std::vector<EvidenceEntry> entries;
    Sha256Digest prev{};
    std::string line;
    std::uint64_t id = 0;
    result = VerifyResult{true, std::nullopt, 0};
    while (std::getline(in, line)) {
        auto fail = [&] {
            result.valid = false;
            result.first_bad_entry = id;
        };
        EvidenceEntry e;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            e.entry_id = j.at("entry_id").get<std::uint64_t>();
            e.flow = flow_from_json(j.at("flow"));
            e.verdict = j.at("verdict").get<std::string>();
            e.score = j.at("score").get<double>();
            e.model_kind = j.at("model_kind").get<std::string>();
            e.detected_at = j.at("detected_at").get<double>();
            e.prev_hash = digest_from_hex(j.at("prev_hash").get<std::string>());
            e.entry_hash = digest_from_hex(j.at("entry_hash").get<std::string>());
        } catch (const std::exception&) {
            fail();
            return entries;
        }
        if (e.entry_id != id || e.prev_hash != prev ||
            chain_hash(prev, canonical_body(e)) != e.entry_hash) {
            fail();
            return entries;
        }
        prev = e.entry_hash;
        entries.push_back(std::move(e));
        ++id;
        ++result.entries;
    }
    if (in.bad())
        throw IoError("read failure while replaying evidence store");
    return entries;
}

}  // namespace

EvidenceStore::EvidenceStore(std::string path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND, 0644);
    if (fd_ < 0)
        throw IoError("cannot open evidence store: " + path_ + ": " +
                      std::strerror(errno));
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw IoError("evidence store is locked by another appender: " + path_);
    }

    std::ifstream in(path_);
    if (!in) {
        ::close(fd_);
        fd_ = -1;
        throw IoError("cannot read evidence store: " + path_);
    }
    VerifyResult check;
    std::vector<EvidenceEntry> entries = replay(in, check);
    if (!check.valid) {
        ::close(fd_);
        fd_ = -1;
        throw CorruptError("evidence store fails verification at entry " +
                           std::to_string(*check.first_bad_entry) + ": " + path_);
    }
    next_id_ = check.entries;
    if (!entries.empty())
        last_hash_ = entries.back().entry_hash;
}

EvidenceStore::~EvidenceStore() {
    if (fd_ >= 0)
        ::close(fd_);  // releases the advisory lock
}

EvidenceEntry EvidenceStore::append(const flow::FlowRecord& f,
                                    const std::string& verdict, double score,
                                    const std::string& model_kind,
                                    double detected_at) {
    if (verdict == "BENIGN" || verdict.empty())
        throw ValidationError("evidence verdict must be non-BENIGN");
    if (!(score >= 0 && score <= 1))
        throw ValidationError("evidence score must lie in [0,1]");

    EvidenceEntry e;
    e.entry_id = next_id_;
    e.flow = f;
    e.verdict = verdict;
    e.score = score;
    e.model_kind = model_kind;
    e.detected_at = detected_at;
    e.prev_hash = last_hash_;
    e.entry_hash = chain_hash(e.prev_hash, canonical_body(e));

    std::string line = entry_line(e);
    std::size_t off = 0;
    while (off < line.size()) {
        ssize_t n = ::write(fd_, line.data() + off, line.size() - off);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw IoError("evidence append failed: " +
                          std::string(std::strerror(errno)));
        }
        off += std::size_t(n);
    }
    if (::fsync(fd_) != 0)
        throw IoError("evidence fsync failed: " + std::string(std::strerror(errno)));

    last_hash_ = e.entry_hash;
    ++next_id_;
    return e;
}

VerifyResult EvidenceStore::verify(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open evidence store: " + path);
    int fd = ::open(path.c_str(), O_RDONLY);
    if (fd >= 0)
        ::flock(fd, LOCK_SH);
    VerifyResult result;
    try {
        replay(in, result);
    } catch (...) {
        if (fd >= 0)
            ::close(fd);
        throw;
    }
    if (fd >= 0)
        ::close(fd);
    return result;
}

std::vector<EvidenceEntry> EvidenceStore::query(const std::string& path,
                                                const Filter& filter) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open evidence store: " + path);
    VerifyResult result;
    std::vector<EvidenceEntry> entries = replay(in, result);
    if (!result.valid)
        throw CorruptError("evidence store fails verification at entry " +
                           std::to_string(*result.first_bad_entry) +
                           "; refusing to query");

    std::vector<EvidenceEntry> out;
    for (EvidenceEntry& e : entries) {
        if (filter.attack_class &&
            e.verdict != flow::attack_class_name(*filter.attack_class))
            continue;
        if (filter.src_ip && !(e.flow.key.src_ip == *filter.src_ip))
            continue;
        if (filter.dst_ip && !(e.flow.key.dst_ip == *filter.dst_ip))
            continue;
        if (filter.time_range && (e.detected_at < filter.time_range->first ||
                                  e.detected_at > filter.time_range->second))
            continue;
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace mhnt::evidence
