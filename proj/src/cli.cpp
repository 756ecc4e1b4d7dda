#include "mhnt/cli.hpp"

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mhnt/eval.hpp"
#include "mhnt/pcap_io.hpp"
#include "mhnt/pipeline.hpp"
#include "mhnt/synth.hpp"

namespace mhnt::cli {

namespace {

struct SynthArgs {
    std::string preset = "mixed";
    std::string config_path;
    std::uint64_t seed = 1;
    double duration = 600;
    std::string out_pcap;
    std::string out_labels;
    std::string out_flows;
    std::string out_scenario;
};

int cmd_synth(const SynthArgs& a) {
    synth::ScenarioConfig config;
    if (!a.config_path.empty()) {
        config = synth::ScenarioConfig::load(a.config_path);
    } else if (a.preset == "benign") {
        config = synth::ScenarioConfig::benign_default(a.seed, a.duration);
    } else if (a.preset == "mixed") {
        config = synth::ScenarioConfig::mixed_default(a.seed);
    } else {
        throw ValidationError("unknown preset: " + a.preset);
    }
    if (a.config_path.empty())
        config.seed = a.seed;

    synth::SimResult sim = synth::simulate(config);
    std::size_t written = pcap::write_pcap(sim.packets, a.out_pcap);
    std::cout << "packets=" << written << " -> " << a.out_pcap << "\n";
    if (!a.out_labels.empty()) {
        synth::write_labels_csv(sim.labels, a.out_labels);
        std::cout << "labels -> " << a.out_labels << "\n";
    }
    if (!a.out_flows.empty()) {
        flow::AssembleOptions opts;
        opts.broker_ip = config.broker_ip;
        opts.broker_port = config.broker_port;
        flow::AssembleResult assembled = flow::assemble(sim.packets, opts);
        flow::label_flows(assembled, sim.labels);
        flow::export_csv(assembled.flows, a.out_flows);
        std::cout << "flows=" << assembled.flows.size() << " -> " << a.out_flows
                  << "\n";
    }
    if (!a.out_scenario.empty()) {
        config.save(a.out_scenario);
        std::cout << "scenario -> " << a.out_scenario << "\n";
    }
    return 0;
}

struct FlowsArgs {
    std::string pcap_path;
    std::string broker_ip;
    std::uint16_t broker_port = 1883;
    double timeout = 60;
    std::string labels_path;
    std::string out_csv;
};

int cmd_flows(const FlowsArgs& a) {
    pcap::ReadResult input = pcap::read_pcap(a.pcap_path);
    flow::AssembleOptions opts;
    opts.broker_ip = Ipv4Addr::parse(a.broker_ip);
    opts.broker_port = a.broker_port;
    opts.idle_timeout_s = a.timeout;
    flow::AssembleResult assembled = flow::assemble(input.packets, opts);
    if (!a.labels_path.empty()) {
        auto labels = synth::read_labels_csv(a.labels_path);
        flow::label_flows(assembled, labels);
    }
    flow::export_csv(assembled.flows, a.out_csv);
    std::cout << "packets=" << input.packets.size() << " skipped=" << input.skipped
              << " flows=" << assembled.flows.size() << " -> " << a.out_csv
              << "\n";
    return 0;
}

struct TrainArgs {
    std::string data_csv;
    std::string mode = "binary";
    std::string sampling = "none";
    std::string model = "rf";
    std::uint64_t seed = 1;
    std::string out_path;
};

int cmd_train(const TrainArgs& a) {
    auto flows = flow::import_csv(a.data_csv);
    learn::Dataset d =
        learn::dataset_from_flows(flows, learn::mode_from_name(a.mode));
    switch (learn::sampling_from_name(a.sampling)) {
        case learn::Sampling::Under:
            d = learn::undersample(d, a.seed);
            break;
        case learn::Sampling::Over:
            d = learn::oversample(d, a.seed);
            break;
        case learn::Sampling::None:
            break;
    }
    learn::HyperParams hyper;
    learn::TrainedModel model =
        learn::train(learn::model_kind_from_name(a.model), d, hyper, a.seed);
    learn::save_model(model, a.out_path);
    std::cout << "trained " << a.model << " on " << d.size() << " rows -> "
              << a.out_path << "\n";
    return 0;
}

struct EvalArgs {
    std::string data_csv;
    std::string mode = "binary";
    std::string sampling = "none";
    std::string models = "dt,rf,svm,nb,mlp,gbt";
    std::uint64_t seed = 1;
    std::string out_path;
    double test_fraction = 0.2;
    int repeats = 3;
};

int cmd_eval(const EvalArgs& a) {
    auto flows = flow::import_csv(a.data_csv);
    learn::Dataset d =
        learn::dataset_from_flows(flows, learn::mode_from_name(a.mode));

    std::vector<learn::ModelKind> kinds;
    std::stringstream ss(a.models);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            kinds.push_back(learn::model_kind_from_name(item));
    if (kinds.empty())
        throw ValidationError("--models lists no model kinds");

    eval::SplitResult parts = eval::split(d, a.test_fraction, a.seed);
    learn::Sampling sampling = learn::sampling_from_name(a.sampling);
    switch (sampling) {  // resample the training partition only
        case learn::Sampling::Under:
            parts.train = learn::undersample(parts.train, a.seed);
            break;
        case learn::Sampling::Over:
            parts.train = learn::oversample(parts.train, a.seed);
            break;
        case learn::Sampling::None:
            break;
    }

    learn::HyperParams hyper;
    eval::EvalReport report = eval::benchmark(kinds, parts.train, parts.test,
                                              hyper, a.repeats, a.seed, sampling);

    eval::ReportFormat format = eval::ReportFormat::Text;
    if (a.out_path.ends_with(".csv"))
        format = eval::ReportFormat::Csv;
    else if (a.out_path.ends_with(".md"))
        format = eval::ReportFormat::Markdown;
    std::ofstream out(a.out_path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open report for writing: " + a.out_path);
    out << eval::render_report(report, format);
    if (!out)
        throw IoError("write failure on: " + a.out_path);
    std::cout << eval::render_report(report, eval::ReportFormat::Text);
    return 0;
}

struct DetectArgs {
    std::string pcap_path;
    std::string scenario_path;
    std::string model_path;
    std::string store_path;
    std::string broker_ip;
    std::uint16_t broker_port = 0;
    bool broker_port_set = false;
    double threshold = 0.5;
    double timeout = 60;
};

int cmd_detect(const DetectArgs& a) {
    pipeline::DetectOptions opts;
    opts.pcap_path = a.pcap_path;
    opts.scenario_path = a.scenario_path;
    opts.model_path = a.model_path;
    opts.store_path = a.store_path;
    if (!a.broker_ip.empty())
        opts.broker_ip = Ipv4Addr::parse(a.broker_ip);
    if (a.broker_port_set)
        opts.broker_port = a.broker_port;
    opts.threshold = a.threshold;
    opts.idle_timeout_s = a.timeout;
    pipeline::DetectSummary summary = pipeline::detect(opts);
    std::cout << pipeline::render_summary(summary);
    return summary.flagged > 0 ? 3 : 0;
}

struct EvidenceArgs {
    std::string store;
    std::string cls;
    std::string src;
    std::string dst;
    double from = 0;
    double to = 0;
    bool from_set = false;
    bool to_set = false;
};

int cmd_evidence_verify(const EvidenceArgs& a) {
    evidence::VerifyResult r = evidence::EvidenceStore::verify(a.store);
    if (r.valid) {
        std::cout << "valid entries=" << r.entries << "\n";
        return 0;
    }
    std::cout << "INVALID first_bad_entry=" << *r.first_bad_entry
              << " valid_prefix=" << r.entries << "\n";
    return 1;
}

int cmd_evidence_query(const EvidenceArgs& a) {
    evidence::Filter filter;
    if (!a.cls.empty())
        filter.attack_class = flow::attack_class_from_name(a.cls);
    if (!a.src.empty())
        filter.src_ip = Ipv4Addr::parse(a.src);
    if (!a.dst.empty())
        filter.dst_ip = Ipv4Addr::parse(a.dst);
    if (a.from_set || a.to_set) {
        double lo = a.from_set ? a.from : -1e300;
        double hi = a.to_set ? a.to : 1e300;
        filter.time_range = {lo, hi};
    }
    auto entries = evidence::EvidenceStore::query(a.store, filter);
    std::cout << flow::csv_header() << ",verdict,score,model_kind,detected_at\n";
    for (const evidence::EvidenceEntry& e : entries)
        std::cout << flow::csv_row(e.flow, e.entry_id) << ',' << e.verdict << ','
                  << format_double(e.score) << ',' << e.model_kind << ','
                  << format_double(e.detected_at) << "\n";
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"MQTT flow forensics toolkit"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "Generate labeled MQTT traffic");
    synth_cmd->add_option("--preset", synth_args.preset,
                          "Scenario preset: benign | mixed");
    synth_cmd->add_option("--config", synth_args.config_path,
                          "Scenario config JSON (overrides --preset)");
    synth_cmd->add_option("--seed", synth_args.seed, "Deterministic seed");
    synth_cmd->add_option("--duration", synth_args.duration,
                          "Capture seconds (benign preset)");
    synth_cmd->add_option("--out", synth_args.out_pcap, "Output PCAP path")
        ->required();
    synth_cmd->add_option("--labels", synth_args.out_labels,
                          "Per-packet label sidecar CSV");
    synth_cmd->add_option("--flows", synth_args.out_flows,
                          "Assembled labeled flow CSV");
    synth_cmd->add_option("--scenario-out", synth_args.out_scenario,
                          "Write the effective scenario config");

    FlowsArgs flows_args;
    CLI::App* flows_cmd =
        app.add_subcommand("flows", "Convert a PCAP into flow records");
    flows_cmd->add_option("--pcap", flows_args.pcap_path, "Input PCAP")
        ->required();
    flows_cmd->add_option("--broker-ip", flows_args.broker_ip, "Broker IPv4")
        ->required();
    flows_cmd->add_option("--broker-port", flows_args.broker_port, "Broker port");
    flows_cmd->add_option("--timeout", flows_args.timeout,
                          "Flow idle timeout seconds");
    flows_cmd->add_option("--labels", flows_args.labels_path,
                          "Per-packet label sidecar CSV");
    flows_cmd->add_option("--out", flows_args.out_csv, "Output flow CSV")
        ->required();

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "Train one classifier");
    train_cmd->add_option("--data", train_args.data_csv, "Labeled flow CSV")
        ->required();
    train_cmd->add_option("--mode", train_args.mode, "binary | multi");
    train_cmd->add_option("--sampling", train_args.sampling,
                          "none | under | over");
    train_cmd->add_option("--model", train_args.model,
                          "dt | rf | svm | nb | mlp | gbt");
    train_cmd->add_option("--seed", train_args.seed, "Deterministic seed");
    train_cmd->add_option("--out", train_args.out_path, "Model file path")
        ->required();

    EvalArgs eval_args;
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "Benchmark classifiers on a labeled CSV");
    eval_cmd->add_option("--data", eval_args.data_csv, "Labeled flow CSV")
        ->required();
    eval_cmd->add_option("--mode", eval_args.mode, "binary | multi");
    eval_cmd->add_option("--sampling", eval_args.sampling,
                         "none | under | over (train split only)");
    eval_cmd->add_option("--models", eval_args.models,
                         "Comma list of dt,rf,svm,nb,mlp,gbt");
    eval_cmd->add_option("--seed", eval_args.seed, "Deterministic seed");
    eval_cmd->add_option("--out", eval_args.out_path,
                         "Report path (.txt, .csv or .md)")
        ->required();
    eval_cmd->add_option("--test-fraction", eval_args.test_fraction,
                         "Holdout fraction");
    eval_cmd->add_option("--repeats", eval_args.repeats,
                         "Timed inference passes (>= 3)");

    DetectArgs detect_args;
    CLI::App* detect_cmd =
        app.add_subcommand("detect", "Classify flows and store evidence");
    detect_cmd->add_option("--pcap", detect_args.pcap_path, "Input PCAP");
    detect_cmd->add_option("--scenario", detect_args.scenario_path,
                           "Scenario config JSON to synthesize");
    detect_cmd->add_option("--model", detect_args.model_path, "Trained model")
        ->required();
    detect_cmd->add_option("--store", detect_args.store_path, "Evidence store")
        ->required();
    detect_cmd->add_option("--broker-ip", detect_args.broker_ip, "Broker IPv4");
    detect_cmd
        ->add_option("--broker-port", detect_args.broker_port, "Broker port")
        ->each([&](const std::string&) { detect_args.broker_port_set = true; });
    detect_cmd->add_option("--threshold", detect_args.threshold,
                           "Flagging score threshold");
    detect_cmd->add_option("--timeout", detect_args.timeout,
                           "Flow idle timeout seconds");

    EvidenceArgs evidence_args;
    CLI::App* evidence_cmd =
        app.add_subcommand("evidence", "Inspect an evidence store");
    evidence_cmd->require_subcommand(1);
    CLI::App* verify_cmd =
        evidence_cmd->add_subcommand("verify", "Recompute the hash chain");
    verify_cmd->add_option("store", evidence_args.store, "Store path")
        ->required();
    CLI::App* query_cmd =
        evidence_cmd->add_subcommand("query", "Filter entries as CSV");
    query_cmd->add_option("store", evidence_args.store, "Store path")
        ->required();
    query_cmd->add_option("--class", evidence_args.cls, "Attack class name");
    query_cmd->add_option("--src", evidence_args.src, "Source IPv4");
    query_cmd->add_option("--dst", evidence_args.dst, "Destination IPv4");
    query_cmd->add_option("--from", evidence_args.from, "detected_at lower bound")
        ->each([&](const std::string&) { evidence_args.from_set = true; });
    query_cmd->add_option("--to", evidence_args.to, "detected_at upper bound")
        ->each([&](const std::string&) { evidence_args.to_set = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth_cmd->parsed())
            return cmd_synth(synth_args);
        if (flows_cmd->parsed())
            return cmd_flows(flows_args);
        if (train_cmd->parsed())
            return cmd_train(train_args);
        if (eval_cmd->parsed())
            return cmd_eval(eval_args);
        if (detect_cmd->parsed())
            return cmd_detect(detect_args);
        if (evidence_cmd->parsed()) {
            if (verify_cmd->parsed())
                return cmd_evidence_verify(evidence_args);
            if (query_cmd->parsed())
                return cmd_evidence_query(evidence_args);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace mhnt::cli
