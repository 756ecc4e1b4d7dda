#include "mhnt/flow.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "mhnt/mqtt.hpp"

namespace mhnt::flow {

namespace {

const std::array<const char*, kAttackClassCount> kClassNames = {
    "BENIGN",     "INVALID_SUB_PUB", "SYN_FLOOD", "BRUTE_FORCE",
    "MALFORMED",  "PORT_SCAN",       "WILL_PAYLOAD"};

struct OpenFlow {
    double first_ts = 0;
    double last_ts = 0;
    bool terminated = false;  // FIN or RST seen
    std::vector<std::size_t> members;
};

double population_std(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2)
        return 0;
    double acc = 0;
    for (double x : xs)
        acc += (x - mean) * (x - mean);
    return std::sqrt(std::max(0.0, acc / double(xs.size())));
}

const char* proto_name(Proto p) {
    switch (p) {
        case Proto::Tcp: return "TCP";
        case Proto::Udp: return "UDP";
        case Proto::Other: return "OTHER";
    }
    return "?";
}

Proto proto_from_name(const std::string& s) {
    if (s == "TCP") return Proto::Tcp;
    if (s == "UDP") return Proto::Udp;
    if (s == "OTHER") return Proto::Other;
    throw ValidationError("unknown protocol in csv: " + s);
}

double parse_double(const std::string& s) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ValidationError("bad numeric field in csv: " + s);
    return v;
}

std::uint64_t parse_uint(const std::string& s, std::uint64_t max) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || v > max)
        throw ValidationError("bad integer field in csv: " + s);
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

}  // namespace

const char* attack_class_name(AttackClass c) {
    return kClassNames[std::size_t(c)];
}

AttackClass attack_class_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kClassNames.size(); ++i)
        if (name == kClassNames[i])
            return AttackClass(i);
    throw ValidationError("unknown attack class: " + name);
}

std::array<double, kFeatureCount> FeatureVector::to_array() const {
    return {duration_s,      pkt_count,        byte_count,       pkt_len_min,
            pkt_len_max,     pkt_len_mean,     pkt_len_std,      iat_min,
            iat_max,         iat_mean,         iat_std,          syn_cnt,
            ack_cnt,         fin_cnt,          rst_cnt,          psh_cnt,
            mqtt_pkt_cnt,    mqtt_connect_cnt, mqtt_publish_cnt, mqtt_subscribe_cnt,
            mqtt_malformed_cnt, mqtt_mean_topic_len, dst_port_is_broker, direction};
}

FeatureVector FeatureVector::from_array(const std::array<double, kFeatureCount>& a) {
    FeatureVector f;
    f.duration_s = a[0];
    f.pkt_count = a[1];
    f.byte_count = a[2];
    f.pkt_len_min = a[3];
    f.pkt_len_max = a[4];
    f.pkt_len_mean = a[5];
    f.pkt_len_std = a[6];
    f.iat_min = a[7];
    f.iat_max = a[8];
    f.iat_mean = a[9];
    f.iat_std = a[10];
    f.syn_cnt = a[11];
    f.ack_cnt = a[12];
    f.fin_cnt = a[13];
    f.rst_cnt = a[14];
    f.psh_cnt = a[15];
    f.mqtt_pkt_cnt = a[16];
    f.mqtt_connect_cnt = a[17];
    f.mqtt_publish_cnt = a[18];
    f.mqtt_subscribe_cnt = a[19];
    f.mqtt_malformed_cnt = a[20];
    f.mqtt_mean_topic_len = a[21];
    f.dst_port_is_broker = a[22];
    f.direction = a[23];
    return f;
}

const std::array<const char*, kFeatureCount>& FeatureVector::names() {
    static const std::array<const char*, kFeatureCount> names = {
        "duration_s",      "pkt_count",        "byte_count",       "pkt_len_min",
        "pkt_len_max",     "pkt_len_mean",     "pkt_len_std",      "iat_min",
        "iat_max",         "iat_mean",         "iat_std",          "syn_cnt",
        "ack_cnt",         "fin_cnt",          "rst_cnt",          "psh_cnt",
        "mqtt_pkt_cnt",    "mqtt_connect_cnt", "mqtt_publish_cnt", "mqtt_subscribe_cnt",
        "mqtt_malformed_cnt", "mqtt_mean_topic_len", "dst_port_is_broker", "direction"};
    return names;
}

AssembleResult assemble(const std::vector<PacketRecord>& packets,
                        const AssembleOptions& opts) {
    if (opts.idle_timeout_s <= 0)
        throw ConfigError("idle timeout must be positive");

    // Time-order the input; ties keep file order.
    std::vector<std::size_t> order(packets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return packets[a].ts() < packets[b].ts();
    });

    AssembleResult result;
    std::map<FlowKey, OpenFlow> table;

    struct PendingFlow {
        FlowKey key;
        OpenFlow state;
    };
    std::vector<PendingFlow> finished;

    auto close_flow = [&](const FlowKey& key, OpenFlow&& state) {
        finished.push_back({key, std::move(state)});
    };

    for (std::size_t idx : order) {
        const PacketRecord& p = packets[idx];
        if (p.proto == Proto::Other) {
            ++result.dropped;
            continue;
        }
        FlowKey key{p.src_ip, p.dst_ip, p.src_port, p.dst_port, p.proto};
        auto it = table.find(key);
        if (it != table.end() &&
            (it->second.terminated || p.ts() - it->second.last_ts > opts.idle_timeout_s)) {
            close_flow(key, std::move(it->second));
            table.erase(it);
            it = table.end();
        }
        if (it == table.end()) {
            OpenFlow fresh;
            fresh.first_ts = p.ts();
            it = table.emplace(key, std::move(fresh)).first;
        }
        OpenFlow& open = it->second;
        open.last_ts = p.ts();
        open.members.push_back(idx);
        if (p.proto == Proto::Tcp && (p.tcp_flags & (tcpflag::FIN | tcpflag::RST)))
            open.terminated = true;
    }
    for (auto& [key, state] : table)  // std::map iterates in key order
        close_flow(key, std::move(state));

    std::stable_sort(finished.begin(), finished.end(),
                     [](const PendingFlow& a, const PendingFlow& b) {
                         if (a.state.first_ts != b.state.first_ts)
                             return a.state.first_ts < b.state.first_ts;
                         return a.key < b.key;
                     });

    result.flows.reserve(finished.size());
    result.members.reserve(finished.size());
    for (PendingFlow& pf : finished) {
        FlowRecord rec;
        rec.key = pf.key;
        rec.direction = (pf.key.dst_ip == opts.broker_ip &&
                         pf.key.dst_port == opts.broker_port)
                            ? 0
                            : 1;
        rec.first_ts = pf.state.first_ts;
        rec.last_ts = pf.state.last_ts;

        std::vector<PacketRecord> member_packets;
        member_packets.reserve(pf.state.members.size());
        for (std::size_t idx : pf.state.members)
            member_packets.push_back(packets[idx]);
        rec.features = featurize(member_packets, rec.direction, opts.broker_port);

        result.flows.push_back(std::move(rec));
        result.members.push_back(std::move(pf.state.members));
    }
    return result;
}

FeatureVector featurize(std::span<const PacketRecord> flow_packets,
                        std::uint8_t direction, std::uint16_t broker_port) {
    if (flow_packets.empty())
        throw ValidationError("featurize requires at least one packet");

    FeatureVector f;
    f.direction = direction;
    f.pkt_count = double(flow_packets.size());
    f.dst_port_is_broker = flow_packets.front().dst_port == broker_port ? 1 : 0;
    f.duration_s = flow_packets.back().ts() - flow_packets.front().ts();

    std::vector<double> lens;
    lens.reserve(flow_packets.size());
    std::vector<double> iats;
    iats.reserve(flow_packets.size());

    std::size_t topic_chars = 0;
    std::size_t topic_count = 0;
    double prev_ts = 0;
    bool have_prev = false;

    for (const PacketRecord& p : flow_packets) {
        lens.push_back(double(p.ip_len));
        f.byte_count += double(p.ip_len);
        if (have_prev)
            iats.push_back(p.ts() - prev_ts);
        prev_ts = p.ts();
        have_prev = true;

        if (p.proto == Proto::Tcp) {
            if (p.tcp_flags & tcpflag::SYN) f.syn_cnt += 1;
            if (p.tcp_flags & tcpflag::ACK) f.ack_cnt += 1;
            if (p.tcp_flags & tcpflag::FIN) f.fin_cnt += 1;
            if (p.tcp_flags & tcpflag::RST) f.rst_cnt += 1;
            if (p.tcp_flags & tcpflag::PSH) f.psh_cnt += 1;

            bool touches_broker =
                p.dst_port == broker_port || p.src_port == broker_port;
            if (touches_broker && !p.payload.empty()) {
                for (const mqtt::DecodeResult& r : mqtt::decode_stream(p.payload)) {
                    if (const auto* msg = std::get_if<mqtt::MqttMessage>(&r)) {
                        f.mqtt_pkt_cnt += 1;
                        switch (msg->type) {
                            case mqtt::PacketType::Connect:
                                f.mqtt_connect_cnt += 1;
                                break;
                            case mqtt::PacketType::Publish:
                                f.mqtt_publish_cnt += 1;
                                break;
                            case mqtt::PacketType::Subscribe:
                                f.mqtt_subscribe_cnt += 1;
                                break;
                            default:
                                break;
                        }
                        topic_chars += msg->topic_char_count();
                        topic_count += msg->topic_count();
                    } else {
                        f.mqtt_malformed_cnt += 1;
                    }
                }
            }
        }
    }

    f.pkt_len_min = *std::min_element(lens.begin(), lens.end());
    f.pkt_len_max = *std::max_element(lens.begin(), lens.end());
    f.pkt_len_mean = f.byte_count / f.pkt_count;
    f.pkt_len_std = population_std(lens, f.pkt_len_mean);

    if (!iats.empty()) {
        f.iat_min = *std::min_element(iats.begin(), iats.end());
        f.iat_max = *std::max_element(iats.begin(), iats.end());
        f.iat_mean = std::accumulate(iats.begin(), iats.end(), 0.0) / double(iats.size());
        f.iat_std = population_std(iats, f.iat_mean);
    }
    if (topic_count > 0)
        f.mqtt_mean_topic_len = double(topic_chars) / double(topic_count);
    return f;
}

void label_flows(AssembleResult& result, const std::vector<AttackClass>& packet_labels) {
    for (std::size_t i = 0; i < result.flows.size(); ++i) {
        std::array<std::size_t, kAttackClassCount> counts{};
        for (std::size_t idx : result.members[i]) {
            if (idx >= packet_labels.size())
                throw ValidationError("packet label index out of range");
            counts[std::size_t(packet_labels[idx])] += 1;
        }
        std::size_t best = 0;
        for (std::size_t c = 1; c < counts.size(); ++c) {
            if (counts[c] > counts[best])
                best = c;
        }
        // Benign wins only strictly; on a tie the attack class is kept.
        if (best == 0) {
            for (std::size_t c = 1; c < counts.size(); ++c) {
                if (counts[c] == counts[0]) {
                    best = c;
                    break;
                }
            }
        }
        result.flows[i].label = AttackClass(best);
    }
}

std::string csv_header() {
    std::string h = "flow_id,src_ip,dst_ip,src_port,dst_port,proto,direction,first_ts,last_ts";
    for (const char* name : FeatureVector::names()) {
        h += ',';
        h += name;
    }
    h += ",label";
    return h;
}

std::string csv_row(const FlowRecord& f, std::uint64_t flow_id) {
    std::ostringstream out;
    out << flow_id << ',' << f.key.src_ip.str() << ',' << f.key.dst_ip.str() << ','
        << f.key.src_port << ',' << f.key.dst_port << ',' << proto_name(f.key.proto)
        << ',' << int(f.direction) << ',' << format_double(f.first_ts) << ','
        << format_double(f.last_ts);
    for (double v : f.features.to_array())
        out << ',' << format_double(v);
    out << ',' << (f.label ? attack_class_name(*f.label) : "");
    return out.str();
}

std::size_t export_csv(const std::vector<FlowRecord>& flows, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open csv for writing: " + path);
    out << csv_header() << '\n';
    std::size_t id = 0;
    for (const FlowRecord& f : flows)
        out << csv_row(f, id++) << '\n';
    out.flush();
    if (!out)
        throw IoError("write failure on: " + path);
    return flows.size();
}

std::vector<FlowRecord> import_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open csv: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw FormatError("empty csv file: " + path);
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != csv_header())
        throw FormatError("unrecognized csv header in " + path);

    std::vector<FlowRecord> flows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 9 + kFeatureCount + 1)
            throw FormatError("wrong field count on line " + std::to_string(line_no));

        FlowRecord rec;
        rec.key.src_ip = Ipv4Addr::parse(fields[1]);
        rec.key.dst_ip = Ipv4Addr::parse(fields[2]);
        rec.key.src_port = std::uint16_t(parse_uint(fields[3], 65535));
        rec.key.dst_port = std::uint16_t(parse_uint(fields[4], 65535));
        rec.key.proto = proto_from_name(fields[5]);
        rec.direction = std::uint8_t(parse_uint(fields[6], 1));
        rec.first_ts = parse_double(fields[7]);
        rec.last_ts = parse_double(fields[8]);

        std::array<double, kFeatureCount> values{};
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            values[i] = parse_double(fields[9 + i]);
            if (!std::isfinite(values[i]))
                throw ValidationError("non-finite feature value on line " +
                                      std::to_string(line_no));
        }
        rec.features = FeatureVector::from_array(values);

        const std::string& label = fields[9 + kFeatureCount];
        if (!label.empty())
            rec.label = attack_class_from_name(label);
        flows.push_back(std::move(rec));
    }
    return flows;
}

}  // namespace mhnt::flow
