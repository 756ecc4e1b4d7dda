#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mhnt/evidence.hpp"

using namespace mhnt;
using namespace mhnt::evidence;
namespace fs = std::filesystem;

namespace {

fs::path tmp_path(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "mhnt_test_evidence";
    fs::create_directories(dir);
    fs::path p = dir / name;
    fs::remove(p);
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), std::streamsize(bytes.size()));
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t pos = text.find('\n', start);
        if (pos == std::string::npos)
            pos = text.size();
        out.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::vector<std::uint8_t> hex_bytes(const std::string& hex) {
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
        out.push_back(
            std::uint8_t(std::stoi(hex.substr(i, 2), nullptr, 16)));
    return out;
}

// Independent digest via OpenSSL's one-shot EVP interface.
std::string oracle_sha256_hex(const std::vector<std::uint8_t>& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    static const char* digits = "0123456789abcdef";
    std::string hex;
    for (unsigned i = 0; i < len; ++i) {
        hex += digits[md[i] >> 4];
        hex += digits[md[i] & 15];
    }
    return hex;
}

std::string oracle_chain_hex(const std::vector<std::uint8_t>& prev,
                             const std::string& body) {
    std::vector<std::uint8_t> buf = prev;
    buf.insert(buf.end(), body.begin(), body.end());
    return oracle_sha256_hex(buf);
}

// Reproduces the canonical body from a stored line: parse, drop the two
// hash fields, re-dump with sorted keys.
std::string body_of_line(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);
    j.erase("entry_hash");
    j.erase("prev_hash");
    return j.dump();
}

flow::FlowRecord make_flow(int i) {
    flow::FlowRecord f;
    f.key.src_ip = Ipv4Addr(10, 0, 9, std::uint8_t(1 + i % 5));
    f.key.dst_ip = Ipv4Addr(10, 0, 0, std::uint8_t(1 + i % 3));
    f.key.src_port = std::uint16_t(40000 + i);
    f.key.dst_port = 1883;
    f.key.proto = Proto::Tcp;
    f.direction = 0;
    f.first_ts = 1000.0 + i;
    f.last_ts = 1000.5 + i;
    std::array<double, flow::kFeatureCount> a{};
    for (std::size_t k = 0; k < a.size(); ++k)
        a[k] = double(k) * 0.25 + i;
    f.features = flow::FeatureVector::from_array(a);
    return f;
}

std::vector<EvidenceEntry> append_n(const std::string& path, int n,
                                    int offset = 0) {
    EvidenceStore store(path);
    std::vector<EvidenceEntry> out;
    for (int k = 0; k < n; ++k) {
        int i = offset + k;
        out.push_back(store.append(
            make_flow(i), flow::attack_class_name(flow::AttackClass(1 + i % 6)),
            0.5 + double(i % 5) * 0.1, "rf", 1000.0 + i));
    }
    return out;  // store closes on return, releasing the lock
}

const std::string kZeros(64, '0');

}  // namespace

TEST_CASE("sha256 matches published test vectors") {
    CHECK(digest_hex(sha256(std::string_view(""))) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(digest_hex(sha256(std::string_view("abc"))) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

    Sha256Digest d = sha256(std::string_view("abc"));
    CHECK(digest_from_hex(digest_hex(d)) == d);
    CHECK_THROWS_AS(digest_from_hex("BA7816BF8F01CFEA414140DE5DAE2223B00361A3"
                                    "96177A9CB410FF61F20015AD"),
                    FormatError);
    CHECK_THROWS_AS(digest_from_hex("abc"), FormatError);
    CHECK_THROWS_AS(digest_from_hex(std::string(64, 'g')), FormatError);
}

TEST_CASE("a fresh store chains from thirty-two zero bytes") {
    fs::path path = tmp_path("fresh.jsonl");
    EvidenceEntry first;
    {
        EvidenceStore store(path.string());
        CHECK(store.entries() == 0);
        CHECK(digest_hex(store.last_hash()) == kZeros);
        first = store.append(make_flow(0), "SYN_FLOOD", 0.97, "rf", 1234.5);
        CHECK(store.entries() == 1);
        CHECK(store.last_hash() == first.entry_hash);
    }

    CHECK(first.entry_id == 0);
    CHECK(digest_hex(first.prev_hash) == kZeros);

    auto lines = lines_of(read_file(path));
    REQUIRE(lines.size() == 1);
    nlohmann::json j = nlohmann::json::parse(lines[0]);
    CHECK(j.at("prev_hash").get<std::string>() == kZeros);
    CHECK(j.at("entry_hash").get<std::string>() == digest_hex(first.entry_hash));
    CHECK(j.at("verdict").get<std::string>() == "SYN_FLOOD");
    CHECK(j.at("score").get<double>() == 0.97);
    CHECK(j.at("model_kind").get<std::string>() == "rf");
    CHECK(j.at("detected_at").get<double>() == 1234.5);
    CHECK(j.at("entry_id").get<std::uint64_t>() == 0);

    std::string want = oracle_chain_hex(std::vector<std::uint8_t>(32, 0),
                                        body_of_line(lines[0]));
    CHECK(digest_hex(first.entry_hash) == want);
}

TEST_CASE("every entry hash links to its predecessor") {
    fs::path path = tmp_path("chain.jsonl");
    auto appended = append_n(path.string(), 20);

    auto lines = lines_of(read_file(path));
    REQUIRE(lines.size() == 20);
    std::string prev_hex = kZeros;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        nlohmann::json j = nlohmann::json::parse(lines[i]);
        CHECK(j.at("entry_id").get<std::uint64_t>() == i);
        CHECK(j.at("prev_hash").get<std::string>() == prev_hex);
        std::string want =
            oracle_chain_hex(hex_bytes(prev_hex), body_of_line(lines[i]));
        CHECK(j.at("entry_hash").get<std::string>() == want);
        CHECK(digest_hex(appended[i].entry_hash) == want);
        prev_hex = want;
    }

    VerifyResult r = EvidenceStore::verify(path.string());
    CHECK(r.valid);
    CHECK(!r.first_bad_entry.has_value());
    CHECK(r.entries == 20);
}

TEST_CASE("stored lines are compact json with sorted keys") {
    fs::path path = tmp_path("canon.jsonl");
    append_n(path.string(), 1);
    std::string line = lines_of(read_file(path))[0];
    CHECK(line.find(' ') == std::string::npos);
    const char* keys[] = {"\"detected_at\":", "\"entry_hash\":", "\"entry_id\":",
                          "\"flow\":",        "\"model_kind\":", "\"prev_hash\":",
                          "\"score\":",       "\"verdict\":"};
    std::size_t last = 0;
    for (const char* key : keys) {
        std::size_t pos = line.find(key);
        REQUIRE(pos != std::string::npos);
        CHECK(pos >= last);
        last = pos;
    }
}

TEST_CASE("append validates verdict and score") {
    fs::path path = tmp_path("reject.jsonl");
    EvidenceStore store(path.string());
    flow::FlowRecord f = make_flow(1);
    CHECK_THROWS_WITH_AS(store.append(f, "BENIGN", 0.9, "rf", 1.0),
                         "evidence verdict must be non-BENIGN", ValidationError);
    CHECK_THROWS_WITH_AS(store.append(f, "", 0.9, "rf", 1.0),
                         "evidence verdict must be non-BENIGN", ValidationError);
    for (double s : {-0.1, 1.1, std::nan("")})
        CHECK_THROWS_WITH_AS(store.append(f, "SYN_FLOOD", s, "rf", 1.0),
                             "evidence score must lie in [0,1]",
                             ValidationError);
    CHECK_NOTHROW(store.append(f, "SYN_FLOOD", 0.0, "rf", 1.0));
    CHECK_NOTHROW(store.append(f, "MALICIOUS", 1.0, "gbt", 2.0));
    CHECK(store.entries() == 2);
}

TEST_CASE("reopening continues the chain where it stopped") {
    fs::path path = tmp_path("reopen.jsonl");
    auto first = append_n(path.string(), 5);

    {
        EvidenceStore store(path.string());
        CHECK(store.entries() == 5);
        CHECK(store.last_hash() == first.back().entry_hash);
        EvidenceEntry next =
            store.append(make_flow(5), "PORT_SCAN", 0.8, "dt", 2000.0);
        CHECK(next.entry_id == 5);
        CHECK(next.prev_hash == first.back().entry_hash);
    }
    append_n(path.string(), 2, 6);

    VerifyResult r = EvidenceStore::verify(path.string());
    CHECK(r.valid);
    CHECK(r.entries == 8);
}

TEST_CASE("a second appender is locked out while the store is open") {
    fs::path path = tmp_path("locked.jsonl");
    {
        EvidenceStore store(path.string());
        store.append(make_flow(0), "MALFORMED", 0.6, "svm", 1.0);
        CHECK_THROWS_WITH_AS(EvidenceStore(path.string()),
                             doctest::Contains("locked by another appender"),
                             IoError);
    }
    CHECK_NOTHROW(EvidenceStore(path.string()));
}

TEST_CASE("verification pinpoints any single corrupted byte") {
    fs::path path = tmp_path("corrupt.jsonl");
    append_n(path.string(), 20);
    const std::string orig = read_file(path);
    REQUIRE(EvidenceStore::verify(path.string()).valid);

    std::vector<std::uint64_t> line_of(orig.size());
    std::uint64_t line = 0;
    for (std::size_t p = 0; p < orig.size(); ++p) {
        line_of[p] = line;
        if (orig[p] == '\n')
            ++line;
    }

    for (std::size_t p = 0; p < orig.size(); ++p) {
        std::string mutated = orig;
        mutated[p] = char(mutated[p] ^ 0x01);
        write_file(path, mutated);
        VerifyResult r = EvidenceStore::verify(path.string());
        REQUIRE(!r.valid);
        REQUIRE(r.first_bad_entry.has_value());
        REQUIRE(*r.first_bad_entry == line_of[p]);
        REQUIRE(r.entries == line_of[p]);
    }

    write_file(path, orig);
    VerifyResult r = EvidenceStore::verify(path.string());
    CHECK(r.valid);
    CHECK(r.entries == 20);
}

TEST_CASE("a torn tail invalidates only the final entry") {
    fs::path path = tmp_path("torn.jsonl");
    append_n(path.string(), 5);
    const std::string orig = read_file(path);

    std::size_t last_line_start = orig.rfind('\n', orig.size() - 2) + 1;

    write_file(path, orig.substr(0, last_line_start));
    VerifyResult clean = EvidenceStore::verify(path.string());
    CHECK(clean.valid);
    CHECK(clean.entries == 4);

    write_file(path, orig.substr(0, last_line_start + 10));
    VerifyResult torn = EvidenceStore::verify(path.string());
    CHECK(!torn.valid);
    CHECK(*torn.first_bad_entry == 4);
    CHECK(torn.entries == 4);
}

TEST_CASE("query composes filters over a verified store") {
    fs::path path = tmp_path("query.jsonl");
    flow::FlowRecord f0 = make_flow(0);
    f0.key.src_ip = Ipv4Addr(10, 0, 9, 1);
    f0.key.dst_ip = Ipv4Addr(10, 0, 0, 1);
    f0.label = flow::AttackClass::SynFlood;
    flow::FlowRecord f1 = make_flow(1);
    f1.key.src_ip = Ipv4Addr(10, 0, 9, 2);
    f1.key.dst_ip = Ipv4Addr(10, 0, 0, 1);
    flow::FlowRecord f2 = make_flow(2);
    f2.key.src_ip = Ipv4Addr(10, 0, 9, 1);
    f2.key.dst_ip = Ipv4Addr(10, 0, 0, 2);
    flow::FlowRecord f3 = make_flow(3);
    f3.key.src_ip = Ipv4Addr(10, 0, 9, 3);
    f3.key.dst_ip = Ipv4Addr(10, 0, 0, 2);

    {
        EvidenceStore store(path.string());
        store.append(f0, "SYN_FLOOD", 0.9, "rf", 100.0);
        store.append(f1, "PORT_SCAN", 0.8, "rf", 200.0);
        store.append(f2, "SYN_FLOOD", 0.7, "gbt", 300.0);
        store.append(f3, "MALICIOUS", 0.6, "gbt", 400.0);
    }

    auto ids = [](const std::vector<EvidenceEntry>& v) {
        std::vector<std::uint64_t> out;
        for (const auto& e : v)
            out.push_back(e.entry_id);
        return out;
    };

    auto all = EvidenceStore::query(path.string(), Filter{});
    CHECK(ids(all) == std::vector<std::uint64_t>{0, 1, 2, 3});
    CHECK(all[0].flow == f0);
    CHECK(all[0].flow.label == flow::AttackClass::SynFlood);
    CHECK(!all[1].flow.label.has_value());
    CHECK(all[3].verdict == "MALICIOUS");

    Filter by_class;
    by_class.attack_class = flow::AttackClass::SynFlood;
    CHECK(ids(EvidenceStore::query(path.string(), by_class)) ==
          std::vector<std::uint64_t>{0, 2});

    Filter by_src;
    by_src.src_ip = Ipv4Addr(10, 0, 9, 1);
    CHECK(ids(EvidenceStore::query(path.string(), by_src)) ==
          std::vector<std::uint64_t>{0, 2});

    Filter by_dst;
    by_dst.dst_ip = Ipv4Addr(10, 0, 0, 1);
    CHECK(ids(EvidenceStore::query(path.string(), by_dst)) ==
          std::vector<std::uint64_t>{0, 1});

    Filter combo;
    combo.attack_class = flow::AttackClass::SynFlood;
    combo.dst_ip = Ipv4Addr(10, 0, 0, 1);
    CHECK(ids(EvidenceStore::query(path.string(), combo)) ==
          std::vector<std::uint64_t>{0});

    Filter window;
    window.time_range = {150.0, 350.0};
    CHECK(ids(EvidenceStore::query(path.string(), window)) ==
          std::vector<std::uint64_t>{1, 2});

    Filter point;
    point.time_range = {100.0, 100.0};
    CHECK(ids(EvidenceStore::query(path.string(), point)) ==
          std::vector<std::uint64_t>{0});

    Filter nowhere;
    nowhere.time_range = {500.0, 600.0};
    CHECK(EvidenceStore::query(path.string(), nowhere).empty());
}

TEST_CASE("corrupt stores refuse querying and reopening") {
    fs::path path = tmp_path("refuse.jsonl");
    append_n(path.string(), 6);
    std::string bytes = read_file(path);
    bytes[bytes.size() / 2] = char(bytes[bytes.size() / 2] ^ 0x01);
    write_file(path, bytes);

    CHECK_THROWS_WITH_AS(EvidenceStore::query(path.string(), Filter{}),
                         doctest::Contains("; refusing to query"),
                         CorruptError);
    CHECK_THROWS_WITH_AS(
        EvidenceStore(path.string()),
        doctest::Contains("evidence store fails verification at entry"),
        CorruptError);
}

TEST_CASE("an empty store verifies and accepts appends") {
    fs::path path = tmp_path("empty.jsonl");
    write_file(path, "");
    VerifyResult r = EvidenceStore::verify(path.string());
    CHECK(r.valid);
    CHECK(r.entries == 0);

    EvidenceStore store(path.string());
    CHECK(store.entries() == 0);
    CHECK_NOTHROW(store.append(make_flow(0), "WILL_PAYLOAD", 0.5, "mlp", 9.0));
}

TEST_CASE("missing paths raise io errors") {
    fs::path gone = tmp_path("never-created.jsonl");
    CHECK_THROWS_AS(EvidenceStore::verify(gone.string()), IoError);
    CHECK_THROWS_AS(EvidenceStore::query(gone.string(), Filter{}), IoError);
    CHECK_THROWS_WITH_AS(
        EvidenceStore("/nonexistent-dir/store.jsonl"),
        doctest::Contains("cannot open evidence store"), IoError);
}
