#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mhnt/cli.hpp"
#include "mhnt/evidence.hpp"
#include "mhnt/flow.hpp"
#include "mhnt/models.hpp"
#include "mhnt/pcap_io.hpp"
#include "mhnt/pipeline.hpp"
#include "mhnt/synth.hpp"

using namespace mhnt;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "mhnt_test_pipeline";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const fs::path& p, const std::string& data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(data.data(), std::streamsize(data.size()));
    REQUIRE(out.good());
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("mhnt");
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream captured_out, captured_err;
    auto* old_out = std::cout.rdbuf(captured_out.rdbuf());
    auto* old_err = std::cerr.rdbuf(captured_err.rdbuf());
    CliResult r;
    try {
        r.code = cli::run(int(argv.size()), argv.data());
    } catch (...) {
        std::cout.rdbuf(old_out);
        std::cerr.rdbuf(old_err);
        throw;
    }
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    r.out = captured_out.str();
    r.err = captured_err.str();
    return r;
}

// A two-minute capture with bursts of SYN flooding and credential guessing on
// top of the stock benign testbed. Small enough to train in seconds, large
// enough that every stage of the chain sees real work.
struct Artifacts {
    fs::path scenario;
    fs::path pcap;
    fs::path labels;
    fs::path flows_csv;
    fs::path model;
    fs::path benign_pcap;
    synth::ScenarioConfig cfg;
};

const Artifacts& artifacts() {
    static Artifacts a = [] {
        Artifacts art;
        fs::path dir = work_dir();

        synth::ScenarioConfig cfg = synth::ScenarioConfig::benign_default(5, 120);
        synth::AttackSpec syn;
        syn.attack_class = flow::AttackClass::SynFlood;
        syn.attacker_ip = Ipv4Addr(10, 0, 9, 1);
        syn.start_s = 20;
        syn.end_s = 50;
        syn.intensity = 8;
        synth::AttackSpec brute;
        brute.attack_class = flow::AttackClass::BruteForce;
        brute.attacker_ip = Ipv4Addr(10, 0, 9, 2);
        brute.start_s = 60;
        brute.end_s = 90;
        brute.intensity = 2;
        cfg.attacks = {syn, brute};
        art.cfg = cfg;

        art.scenario = dir / "scenario.json";
        cfg.save(art.scenario.string());
        art.pcap = dir / "capture.pcap";
        art.labels = dir / "labels.csv";
        art.flows_csv = dir / "flows.csv";
        art.model = dir / "model.bin";
        art.benign_pcap = dir / "benign.pcap";

        CliResult synth_run = run_cli({"synth", "--config", art.scenario.string(),
                                       "--out", art.pcap.string(),
                                       "--labels", art.labels.string(),
                                       "--flows", art.flows_csv.string()});
        REQUIRE(synth_run.code == 0);
        REQUIRE(synth_run.out.find("packets=") != std::string::npos);

        CliResult train_run = run_cli({"train", "--data", art.flows_csv.string(),
                                       "--mode", "multi", "--model", "rf",
                                       "--seed", "3", "--out", art.model.string()});
        REQUIRE(train_run.code == 0);
        REQUIRE(train_run.out.find("trained rf on ") != std::string::npos);

        CliResult benign_run = run_cli({"synth", "--preset", "benign", "--seed", "9",
                                        "--duration", "120",
                                        "--out", art.benign_pcap.string()});
        REQUIRE(benign_run.code == 0);
        return art;
    }();
    return a;
}

}  // namespace

TEST_CASE("the cli rejects bad invocations with exit code 2") {
    CHECK(run_cli({"--help"}).code == 0);
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"frobnicate"}).code == 2);
    CHECK(run_cli({"synth", "--no-such-flag"}).code == 2);
    CHECK(run_cli({"train"}).code == 2);
}

TEST_CASE("synth writes a readable capture with both traffic classes") {
    const Artifacts& art = artifacts();
    pcap::ReadResult cap = pcap::read_pcap(art.pcap.string());
    CHECK(cap.packets.size() > 1000);
    CHECK(cap.skipped == 0);

    std::vector<flow::FlowRecord> flows = flow::import_csv(art.flows_csv.string());
    CHECK(flows.size() > 100);
    std::size_t benign = 0, syn = 0, brute = 0;
    for (const auto& f : flows) {
        REQUIRE(f.label.has_value());
        if (*f.label == flow::AttackClass::Benign) ++benign;
        if (*f.label == flow::AttackClass::SynFlood) ++syn;
        if (*f.label == flow::AttackClass::BruteForce) ++brute;
    }
    CHECK(benign > 0);
    CHECK(syn > 100);
    CHECK(brute > 10);
    CHECK(benign + syn + brute == flows.size());
}

TEST_CASE("the flows subcommand reproduces synth's flow csv byte for byte") {
    const Artifacts& art = artifacts();
    fs::path redo = work_dir() / "flows_redo.csv";
    CliResult r = run_cli({"flows", "--pcap", art.pcap.string(),
                           "--broker-ip", art.cfg.broker_ip.str(),
                           "--labels", art.labels.string(),
                           "--out", redo.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("flows=") != std::string::npos);
    CHECK(read_file(redo) == read_file(art.flows_csv));
}

TEST_CASE("detect flags attacks, exits 3 and leaves a verifiable store") {
    const Artifacts& art = artifacts();
    fs::path store = work_dir() / "detect.jsonl";
    CliResult r = run_cli({"detect", "--pcap", art.pcap.string(),
                           "--model", art.model.string(),
                           "--store", store.string(),
                           "--broker-ip", art.cfg.broker_ip.str()});
    CHECK(r.code == 3);
    CHECK(r.out.find("flows_seen=") != std::string::npos);
    CHECK(r.out.find("final_entry_hash=") != std::string::npos);

    CliResult verify = run_cli({"evidence", "verify", store.string()});
    CHECK(verify.code == 0);
    CHECK(verify.out.substr(0, 14) == "valid entries=");

    evidence::Filter all;
    std::vector<evidence::EvidenceEntry> entries =
        evidence::EvidenceStore::query(store.string(), all);
    REQUIRE(!entries.empty());
    std::size_t syn_hits = 0;
    for (const auto& e : entries) {
        CHECK(e.verdict != "BENIGN");
        CHECK(e.score >= 0.5);
        CHECK(e.score <= 1.0);
        CHECK(e.model_kind == "rf");
        CHECK(e.detected_at == e.flow.last_ts);
        CHECK(!e.flow.label.has_value());
        if (e.verdict == "SYN_FLOOD") ++syn_hits;
    }
    CHECK(syn_hits > 50);

    evidence::Filter by_class;
    by_class.attack_class = flow::AttackClass::SynFlood;
    CHECK(evidence::EvidenceStore::query(store.string(), by_class).size() == syn_hits);

    CliResult q = run_cli({"evidence", "query", store.string(), "--class", "SYN_FLOOD"});
    REQUIRE(q.code == 0);
    std::vector<std::string> qlines = lines_of(q.out);
    REQUIRE(qlines.size() == syn_hits + 1);
    CHECK(qlines[0] == flow::csv_header() + ",verdict,score,model_kind,detected_at");
    CHECK(qlines[1].find(",SYN_FLOOD,") != std::string::npos);
}

TEST_CASE("detect on purely benign traffic stays near silent") {
    const Artifacts& art = artifacts();
    pipeline::DetectOptions opts;
    opts.pcap_path = art.benign_pcap.string();
    opts.model_path = art.model.string();
    opts.store_path = (work_dir() / "benign.jsonl").string();
    opts.broker_ip = art.cfg.broker_ip;
    pipeline::DetectSummary s = pipeline::detect(opts);
    CHECK(s.flows_seen > 50);
    CHECK(double(s.flagged) <= 0.02 * double(s.flows_seen));
    CHECK(s.store_entries == s.flagged);
    CHECK(s.final_entry_hash.size() == 64);

    fs::path store2 = work_dir() / "benign_cli.jsonl";
    CliResult r = run_cli({"detect", "--pcap", art.benign_pcap.string(),
                           "--model", art.model.string(),
                           "--store", store2.string(),
                           "--broker-ip", art.cfg.broker_ip.str()});
    CHECK(r.code == (s.flagged > 0 ? 3 : 0));
}

TEST_CASE("equal-seed detect runs produce bit-identical evidence chains") {
    const Artifacts& art = artifacts();
    auto run_once = [&](const fs::path& store) {
        pipeline::DetectOptions opts;
        opts.scenario_path = art.scenario.string();
        opts.model_path = art.model.string();
        opts.store_path = store.string();
        return pipeline::detect(opts);
    };
    fs::path store_a = work_dir() / "det_a.jsonl";
    fs::path store_b = work_dir() / "det_b.jsonl";
    pipeline::DetectSummary a = run_once(store_a);
    pipeline::DetectSummary b = run_once(store_b);
    CHECK(a.flows_seen == b.flows_seen);
    CHECK(a.flagged == b.flagged);
    CHECK(a.per_verdict == b.per_verdict);
    CHECK(a.final_entry_hash == b.final_entry_hash);
    CHECK(read_file(store_a) == read_file(store_b));
    CHECK(a.flagged > 0);
    CHECK(a.per_verdict.count("SYN_FLOOD") == 1);
    CHECK(a.mean_latency_us > 0.0);

    // The scenario branch must agree with the pcap branch on what it flags.
    evidence::Filter all;
    auto from_scenario = evidence::EvidenceStore::query(store_a.string(), all);
    CHECK(from_scenario.size() == a.flagged);
}

TEST_CASE("raising the threshold only prunes detections") {
    const Artifacts& art = artifacts();
    auto run_at = [&](double threshold, const fs::path& store) {
        pipeline::DetectOptions opts;
        opts.scenario_path = art.scenario.string();
        opts.model_path = art.model.string();
        opts.store_path = store.string();
        opts.threshold = threshold;
        return pipeline::detect(opts);
    };
    pipeline::DetectSummary base = run_at(0.5, work_dir() / "thr_base.jsonl");
    fs::path strict_store = work_dir() / "thr_strict.jsonl";
    pipeline::DetectSummary strict = run_at(1.0, strict_store);
    CHECK(strict.flagged <= base.flagged);
    CHECK(strict.flows_seen == base.flows_seen);

    evidence::Filter all;
    for (const auto& e : evidence::EvidenceStore::query(strict_store.string(), all))
        CHECK(e.score == 1.0);
    evidence::VerifyResult v = evidence::EvidenceStore::verify(strict_store.string());
    CHECK(v.valid);
    CHECK(v.entries == strict.flagged);
}

TEST_CASE("detect validates its option combinations") {
    const Artifacts& art = artifacts();
    pipeline::DetectOptions base;
    base.model_path = art.model.string();
    base.store_path = (work_dir() / "never.jsonl").string();

    pipeline::DetectOptions neither = base;
    CHECK_THROWS_WITH_AS(pipeline::detect(neither),
                         "detect needs exactly one of --pcap / --scenario",
                         ValidationError);

    pipeline::DetectOptions both = base;
    both.pcap_path = art.pcap.string();
    both.scenario_path = art.scenario.string();
    CHECK_THROWS_WITH_AS(pipeline::detect(both),
                         "detect needs exactly one of --pcap / --scenario",
                         ValidationError);

    pipeline::DetectOptions no_model;
    no_model.scenario_path = art.scenario.string();
    no_model.store_path = base.store_path;
    no_model.model_path.clear();
    CHECK_THROWS_WITH_AS(pipeline::detect(no_model), "detect needs --model and --store",
                         ValidationError);

    pipeline::DetectOptions bad_threshold = base;
    bad_threshold.scenario_path = art.scenario.string();
    bad_threshold.threshold = 1.5;
    CHECK_THROWS_WITH_AS(pipeline::detect(bad_threshold), "threshold must lie in [0,1]",
                         ValidationError);

    pipeline::DetectOptions no_broker = base;
    no_broker.pcap_path = art.pcap.string();
    CHECK_THROWS_WITH_AS(pipeline::detect(no_broker), "--pcap input requires --broker-ip",
                         ValidationError);

    CliResult r = run_cli({"detect", "--scenario", art.scenario.string(),
                           "--model", (work_dir() / "missing.bin").string(),
                           "--store", (work_dir() / "never2.jsonl").string()});
    CHECK(r.code == 1);
    CHECK(r.err.substr(0, 7) == "error: ");
}

TEST_CASE("a model with a foreign feature schema is refused") {
    const Artifacts& art = artifacts();
    learn::TrainedModel m = learn::load_model(art.model.string());
    m.scaler_mean.resize(23);
    m.scaler_std.resize(23);
    fs::path narrow = work_dir() / "narrow.bin";
    learn::save_model(m, narrow.string());

    pipeline::DetectOptions opts;
    opts.scenario_path = art.scenario.string();
    opts.model_path = narrow.string();
    opts.store_path = (work_dir() / "never3.jsonl").string();
    CHECK_THROWS_WITH_AS(
        pipeline::detect(opts),
        "feature schema mismatch: model expects 23 features, flow engine produces 24",
        ValidationError);

    CliResult r = run_cli({"detect", "--scenario", art.scenario.string(),
                           "--model", narrow.string(),
                           "--store", (work_dir() / "never4.jsonl").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("feature schema mismatch") != std::string::npos);
}

TEST_CASE("render_summary lays out counts one verdict per line") {
    pipeline::DetectSummary s;
    s.flows_seen = 10;
    s.flagged = 3;
    s.per_verdict = {{"SYN_FLOOD", 2}, {"MALICIOUS", 1}};
    s.mean_latency_us = 12.5;
    s.final_entry_hash = std::string(64, 'a');
    s.store_entries = 3;
    std::string expected = "flows_seen=10 flagged=3 mean_latency_us=12.5\n"
                           "  MALICIOUS: 1\n"
                           "  SYN_FLOOD: 2\n"
                           "store_entries=3\n"
                           "final_entry_hash=" + std::string(64, 'a') + "\n";
    CHECK(pipeline::render_summary(s) == expected);
}

TEST_CASE("eval picks its report format from the output extension") {
    const Artifacts& art = artifacts();
    fs::path csv = work_dir() / "report.csv";
    CliResult r1 = run_cli({"eval", "--data", art.flows_csv.string(), "--mode", "multi",
                            "--models", "dt,nb", "--seed", "2",
                            "--test-fraction", "0.3", "--out", csv.string()});
    REQUIRE(r1.code == 0);
    CHECK(r1.out.find("mode=multi") != std::string::npos);
    std::vector<std::string> csv_lines = lines_of(read_file(csv));
    REQUIRE(csv_lines.size() == 3);
    CHECK(csv_lines[0] ==
          "model,mode,sampling,accuracy,precision,recall,f1,train_s,infer_us_per_flow,seed");
    CHECK(csv_lines[1].substr(0, 3) == "dt,");
    CHECK(csv_lines[2].substr(0, 3) == "nb,");

    fs::path md = work_dir() / "report.md";
    CliResult r2 = run_cli({"eval", "--data", art.flows_csv.string(), "--mode", "multi",
                            "--models", "dt,nb", "--seed", "2",
                            "--test-fraction", "0.3", "--out", md.string()});
    REQUIRE(r2.code == 0);
    std::vector<std::string> md_lines = lines_of(read_file(md));
    REQUIRE(md_lines.size() == 4);
    CHECK(md_lines[0].substr(0, 9) == "| model |");
    CHECK(md_lines[1].substr(0, 5) == "|---|");

    fs::path txt = work_dir() / "report.txt";
    CliResult r3 = run_cli({"eval", "--data", art.flows_csv.string(), "--mode", "multi",
                            "--models", "dt,nb", "--seed", "2",
                            "--test-fraction", "0.3", "--out", txt.string()});
    REQUIRE(r3.code == 0);
    std::string txt_report = read_file(txt);
    CHECK(txt_report.substr(0, 11) == "mode=multi ");
    CHECK(txt_report.find("dataset_fingerprint=") != std::string::npos);
    CHECK(txt_report == r3.out);

    CliResult bad = run_cli({"eval", "--data", art.flows_csv.string(),
                             "--models", "", "--out", csv.string()});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("--models lists no model kinds") != std::string::npos);
}

TEST_CASE("evidence verify reports tampering through the cli") {
    const Artifacts& art = artifacts();
    fs::path store = work_dir() / "tamper.jsonl";
    pipeline::DetectOptions opts;
    opts.scenario_path = art.scenario.string();
    opts.model_path = art.model.string();
    opts.store_path = store.string();
    pipeline::DetectSummary s = pipeline::detect(opts);
    REQUIRE(s.flagged > 2);

    CliResult ok = run_cli({"evidence", "verify", store.string()});
    CHECK(ok.code == 0);
    CHECK(ok.out == "valid entries=" + std::to_string(s.flagged) + "\n");

    std::string blob = read_file(store);
    std::size_t mid = blob.find("\"score\"", blob.find('\n') + 1);
    REQUIRE(mid != std::string::npos);
    blob[mid + 1] ^= 0x01;
    write_file(store, blob);
    CliResult bad = run_cli({"evidence", "verify", store.string()});
    CHECK(bad.code == 1);
    CHECK(bad.out == "INVALID first_bad_entry=1 valid_prefix=1\n");
}

TEST_CASE("synth can emit the scenario it ran") {
    fs::path out = work_dir() / "echo.pcap";
    fs::path scen = work_dir() / "echo_scenario.json";
    CliResult r = run_cli({"synth", "--preset", "benign", "--seed", "9",
                           "--duration", "60", "--out", out.string(),
                           "--scenario-out", scen.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("scenario -> ") != std::string::npos);
    synth::ScenarioConfig loaded = synth::ScenarioConfig::load(scen.string());
    synth::ScenarioConfig expected = synth::ScenarioConfig::benign_default(9, 60);
    CHECK(loaded.seed == expected.seed);
    CHECK(loaded.duration_s == expected.duration_s);
    CHECK(loaded.broker_ip == expected.broker_ip);
    CHECK(loaded.publishers.size() == 5);
    CHECK(loaded.subscribers.size() == 5);
    CHECK(loaded.attacks.empty());

    synth::SimResult direct = synth::simulate(expected);
    pcap::ReadResult written = pcap::read_pcap(out.string());
    CHECK(written.packets.size() == direct.packets.size());
}
