#include "mhnt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mhnt/mqtt.hpp"

namespace mhnt::synth {

using flow::AttackClass;

namespace {

constexpr double kRttMean = 0.0004;       // one-way delay scale, seconds
constexpr double kBrokerDelayMean = 0.001;  // publish forwarding delay

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}

    double uniform() { return double(gen() >> 11) * 0x1.0p-53; }
    double exponential(double mean) { return -std::log1p(-uniform()) * mean; }
    double range(double lo, double hi) { return lo + uniform() * (hi - lo); }
    std::uint64_t pick(std::uint64_t n) { return gen() % n; }
};

// True when an MQTT topic filter covers a concrete topic.
bool topic_matches(const std::string& filter, const std::string& topic) {
    std::size_t fi = 0, ti = 0;
    while (fi < filter.size()) {
        std::size_t fe = filter.find('/', fi);
        std::string level = filter.substr(fi, fe == std::string::npos ? fe : fe - fi);
        if (level == "#")
            return true;
        std::size_t te = topic.find('/', ti);
        std::string tlevel = topic.substr(ti, te == std::string::npos ? te : te - ti);
        if (level != "+" && level != tlevel)
            return false;
        if (fe == std::string::npos)
            return te == std::string::npos;
        if (te == std::string::npos)
            return false;
        fi = fe + 1;
        ti = te + 1;
    }
    return ti >= topic.size();
}

enum class EventKind {
    StartPublisherSession,
    StartSubscriberSession,
    DeliverPublish,  // broker fan-out to matching live subscriptions
    SubActivate,
    SubDeactivate,
};

struct Event {
    double t = 0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::DeliverPublish;
    int client = -1;
    std::uint64_t conn_id = 0;
    std::string topic;
    std::vector<std::uint8_t> publish_frame;
    AttackClass label = AttackClass::Benign;
    // SubActivate payload
    Ipv4Addr sub_ip;
    std::uint16_t sub_port = 0;
    std::string sub_filter;
};

struct EventLater {
    bool operator()(const Event& a, const Event& b) const {
        if (a.t != b.t)
            return a.t > b.t;
        return a.seq > b.seq;
    }
};

struct ActiveSub {
    Ipv4Addr ip;
    std::uint16_t port = 0;
    std::string filter;
};

class Simulator {
public:
    explicit Simulator(const ScenarioConfig& cfg)
        : cfg_(cfg), broker_rng_(derive_seed(cfg.seed, 0xB20)) {
        for (std::size_t i = 0; i < cfg.publishers.size(); ++i)
            pub_rng_.emplace_back(derive_seed(cfg.seed, 0x100 + i));
        for (std::size_t i = 0; i < cfg.subscribers.size(); ++i)
            sub_rng_.emplace_back(derive_seed(cfg.seed, 0x200 + i));
    }

    SimResult run() {
        for (std::size_t i = 0; i < cfg_.attacks.size(); ++i)
            script_attack(cfg_.attacks[i], i);

        for (std::size_t i = 0; i < cfg_.subscribers.size(); ++i) {
            Event e;
            e.kind = EventKind::StartSubscriberSession;
            e.client = int(i);
            e.t = 0.05 + 0.11 * double(i);
            push(e);
        }
        for (std::size_t i = 0; i < cfg_.publishers.size(); ++i) {
            Event e;
            e.kind = EventKind::StartPublisherSession;
            e.client = int(i);
            e.t = 0.8 + 0.13 * double(i);
            push(e);
        }

        while (!queue_.empty()) {
            Event e = queue_.top();
            queue_.pop();
            dispatch(e);
        }

        // Packets were emitted per event, not globally time-ordered.
        std::vector<std::size_t> order(packets_.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return packets_[a].ts() < packets_[b].ts();
        });
        SimResult result;
        result.packets.reserve(packets_.size());
        result.labels.reserve(packets_.size());
        for (std::size_t idx : order) {
            result.packets.push_back(std::move(packets_[idx]));
            result.labels.push_back(labels_[idx]);
        }
        return result;
    }

private:
    const ScenarioConfig& cfg_;
    std::uint64_t seq_counter_ = 0;
    std::uint64_t conn_counter_ = 0;
    std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
    std::vector<PacketRecord> packets_;
    std::vector<AttackClass> labels_;
    std::map<std::uint64_t, ActiveSub> subs_;
    std::map<std::uint32_t, std::uint16_t> next_port_;
    Rng broker_rng_;
    std::vector<Rng> pub_rng_;
    std::vector<Rng> sub_rng_;

    void push(Event e) {
        e.seq = seq_counter_++;
        queue_.push(std::move(e));
    }

    std::uint16_t alloc_port(Ipv4Addr ip) {
        std::uint16_t& next = next_port_[ip.value];
        if (next < 49152)
            next = 49152;
        std::uint16_t port = next;
        next = next == 65535 ? 49152 : std::uint16_t(next + 1);
        return port;
    }

    void emit(double t, Ipv4Addr src, std::uint16_t sport, Ipv4Addr dst,
              std::uint16_t dport, std::uint8_t flags,
              std::vector<std::uint8_t> payload, AttackClass label) {
        packets_.push_back(make_tcp_packet(cfg_.start_epoch_s + t, src, sport, dst,
                                           dport, flags, std::move(payload)));
        labels_.push_back(label);
    }

    void emit_mqtt(double t, Ipv4Addr src, std::uint16_t sport, Ipv4Addr dst,
                   std::uint16_t dport, const mqtt::MqttMessage& msg,
                   AttackClass label) {
        emit(t, src, sport, dst, dport, tcpflag::PSH | tcpflag::ACK,
             mqtt::encode(msg), label);
    }

    double rtt(Rng& rng) { return kRttMean * (0.5 + rng.uniform()); }

    // SYN, SYN-ACK, ACK. Returns the time after the handshake settles.
    double handshake(double t, Rng& rng, Ipv4Addr client_ip, std::uint16_t client_port,
                     AttackClass label) {
        emit(t, client_ip, client_port, cfg_.broker_ip, cfg_.broker_port, tcpflag::SYN,
             {}, label);
        double t1 = t + rtt(rng);
        emit(t1, cfg_.broker_ip, cfg_.broker_port, client_ip, client_port,
             tcpflag::SYN | tcpflag::ACK, {}, label);
        double t2 = t1 + rtt(rng);
        emit(t2, client_ip, client_port, cfg_.broker_ip, cfg_.broker_port, tcpflag::ACK,
             {}, label);
        return t2 + rtt(rng);
    }

    void teardown(double t, Rng& rng, Ipv4Addr client_ip, std::uint16_t client_port,
                  bool flaky, AttackClass label) {
        if (flaky) {
            emit(t, client_ip, client_port, cfg_.broker_ip, cfg_.broker_port,
                 tcpflag::RST | tcpflag::ACK, {}, label);
            return;
        }
        emit_mqtt(t, client_ip, client_port, cfg_.broker_ip, cfg_.broker_port,
                  mqtt::make_disconnect(), label);
        double t1 = t + rtt(rng);
        emit(t1, client_ip, client_port, cfg_.broker_ip, cfg_.broker_port,
             tcpflag::FIN | tcpflag::ACK, {}, label);
        emit(t1 + rtt(rng), cfg_.broker_ip, cfg_.broker_port, client_ip, client_port,
             tcpflag::FIN | tcpflag::ACK, {}, label);
    }

    std::vector<std::uint8_t> sensor_reading(int publisher, Rng& rng) {
        std::ostringstream os;
        os << "{\"dev\":\"" << cfg_.publishers[std::size_t(publisher)].client_id
           << "\",\"hr\":" << 58 + int(rng.pick(50))
           << ",\"spo2\":" << 92 + int(rng.pick(8)) << "}";
        std::string s = os.str();
        if (rng.uniform() < 0.15) {  // occasional richer report
            s.pop_back();
            s += ",\"note\":\"" + std::string(20 + rng.pick(120), 'x') + "\"}";
        }
        return {s.begin(), s.end()};
    }

    void dispatch(const Event& e) {
        switch (e.kind) {
            case EventKind::StartPublisherSession:
                run_publisher_session(e.client, e.t);
                break;
            case EventKind::StartSubscriberSession:
                run_subscriber_session(e.client, e.t);
                break;
            case EventKind::DeliverPublish:
                deliver_publish(e);
                break;
            case EventKind::SubActivate:
                subs_[e.conn_id] = ActiveSub{e.sub_ip, e.sub_port, e.sub_filter};
                break;
            case EventKind::SubDeactivate:
                subs_.erase(e.conn_id);
                break;
        }
    }

    void deliver_publish(const Event& e) {
        for (const auto& [cid, sub] : subs_) {
            if (!topic_matches(sub.filter, e.topic))
                continue;
            double t = e.t + kBrokerDelayMean * (0.3 + broker_rng_.uniform());
            if (t > cfg_.duration_s + 2.0)
                continue;
            emit(t, cfg_.broker_ip, cfg_.broker_port, sub.ip, sub.port,
                 tcpflag::PSH | tcpflag::ACK, e.publish_frame, e.label);
            emit(t + rtt(broker_rng_), sub.ip, sub.port, cfg_.broker_ip,
                 cfg_.broker_port, tcpflag::ACK, {}, e.label);
        }
    }

    void schedule_session_start(EventKind kind, int client, double t) {
        if (t + 3.0 >= cfg_.duration_s)
            return;
        Event e;
        e.kind = kind;
        e.client = client;
        e.t = t;
        push(e);
    }

    double session_length(Rng& rng) {
        return std::clamp(rng.exponential(cfg_.session_mean_s), 2.0,
                          cfg_.session_mean_s * 4);
    }

    void run_publisher_session(int idx, double t) {
        Rng& rng = pub_rng_[std::size_t(idx)];
        const ClientSpec& spec = cfg_.publishers[std::size_t(idx)];
        double end = std::min(t + session_length(rng), cfg_.duration_s);
        std::uint16_t port = alloc_port(spec.ip);

        double cursor = handshake(t, rng, spec.ip, port, AttackClass::Benign);
        mqtt::ConnectOpts opts;
        opts.client_id = spec.client_id;
        opts.keepalive = std::uint16_t(cfg_.keepalive_s);
        emit_mqtt(cursor, spec.ip, port, cfg_.broker_ip, cfg_.broker_port,
                  mqtt::make_connect(opts), AttackClass::Benign);
        emit_mqtt(cursor + rtt(rng), cfg_.broker_ip, cfg_.broker_port, spec.ip, port,
                  mqtt::make_connack(0), AttackClass::Benign);
        cursor += 0.01 + rng.exponential(0.05);

        while (cursor < end - 0.05) {
            mqtt::MqttMessage pub =
                mqtt::make_publish(spec.topic, sensor_reading(idx, rng));
            std::vector<std::uint8_t> frame = mqtt::encode(pub);
            emit(cursor, spec.ip, port, cfg_.broker_ip, cfg_.broker_port,
                 tcpflag::PSH | tcpflag::ACK, frame, AttackClass::Benign);
            emit(cursor + rtt(rng), cfg_.broker_ip, cfg_.broker_port, spec.ip, port,
                 tcpflag::ACK, {}, AttackClass::Benign);

            Event deliver;
            deliver.kind = EventKind::DeliverPublish;
            deliver.t = cursor + 0.0002;
            deliver.topic = spec.topic;
            deliver.publish_frame = std::move(frame);
            push(std::move(deliver));

            cursor += std::max(0.02, rng.exponential(spec.publish_interval_s));
        }

        bool flaky = rng.uniform() < cfg_.flaky_session_fraction;
        teardown(end, rng, spec.ip, port, flaky, AttackClass::Benign);
        schedule_session_start(EventKind::StartPublisherSession, idx,
                               end + 0.05 + rng.exponential(cfg_.session_gap_mean_s));
    }

    void run_subscriber_session(int idx, double t) {
        Rng& rng = sub_rng_[std::size_t(idx)];
        const ClientSpec& spec = cfg_.subscribers[std::size_t(idx)];
        double end = std::min(t + session_length(rng), cfg_.duration_s);
        std::uint16_t port = alloc_port(spec.ip);
        std::uint64_t conn_id = ++conn_counter_;

        double cursor = handshake(t, rng, spec.ip, port, AttackClass::Benign);
        mqtt::ConnectOpts opts;
        opts.client_id = spec.client_id;
        opts.keepalive = std::uint16_t(cfg_.keepalive_s);
        emit_mqtt(cursor, spec.ip, port, cfg_.broker_ip, cfg_.broker_port,
                  mqtt::make_connect(opts), AttackClass::Benign);
        emit_mqtt(cursor + rtt(rng), cfg_.broker_ip, cfg_.broker_port, spec.ip, port,
                  mqtt::make_connack(0), AttackClass::Benign);
        cursor += 0.005 + rng.exponential(0.02);
        emit_mqtt(cursor, spec.ip, port, cfg_.broker_ip, cfg_.broker_port,
                  mqtt::make_subscribe(1, spec.topic), AttackClass::Benign);
        double suback_t = cursor + rtt(rng);
        emit_mqtt(suback_t, cfg_.broker_ip, cfg_.broker_port, spec.ip, port,
                  mqtt::make_suback(1, 0), AttackClass::Benign);

        Event activate;
        activate.kind = EventKind::SubActivate;
        activate.t = suback_t;
        activate.conn_id = conn_id;
        activate.sub_ip = spec.ip;
        activate.sub_port = port;
        activate.sub_filter = spec.topic;
        push(std::move(activate));

        double ping_t = suback_t + cfg_.keepalive_s * (0.85 + 0.3 * rng.uniform());
        while (ping_t < end - 0.05) {
            emit_mqtt(ping_t, spec.ip, port, cfg_.broker_ip, cfg_.broker_port,
                      mqtt::make_pingreq(), AttackClass::Benign);
            emit_mqtt(ping_t + rtt(rng), cfg_.broker_ip, cfg_.broker_port, spec.ip,
                      port, mqtt::make_pingresp(), AttackClass::Benign);
            ping_t += cfg_.keepalive_s * (0.85 + 0.3 * rng.uniform());
        }

        Event deactivate;
        deactivate.kind = EventKind::SubDeactivate;
        deactivate.t = end;
        deactivate.conn_id = conn_id;
        push(std::move(deactivate));

        bool flaky = rng.uniform() < cfg_.flaky_session_fraction;
        teardown(end + 0.001, rng, spec.ip, port, flaky, AttackClass::Benign);
        schedule_session_start(EventKind::StartSubscriberSession, idx,
                               end + 0.05 + rng.exponential(cfg_.session_gap_mean_s));
    }

    // ---- attack generators ----

    void script_attack(const AttackSpec& a, std::size_t attack_idx) {
        Rng rng(derive_seed(cfg_.seed, 0xA000 + attack_idx));
        double window = a.end_s - a.start_s;
        auto count = std::size_t(std::llround(a.intensity * window));
        if (count == 0)
            count = 1;
        for (std::size_t k = 0; k < count; ++k) {
            // Jittered grid keeps the event count exact per window.
            double t = a.start_s + (double(k) + 0.85 * rng.uniform()) * window / double(count);
            switch (a.attack_class) {
                case AttackClass::SynFlood:
                    syn_flood_event(a, rng, t);
                    break;
                case AttackClass::PortScan:
                    port_scan_event(a, rng, t, k);
                    break;
                case AttackClass::BruteForce:
                    brute_force_event(a, rng, t, k);
                    break;
                case AttackClass::Malformed:
                    malformed_event(a, rng, t, k);
                    break;
                case AttackClass::InvalidSubPub:
                    invalid_sub_pub_event(a, rng, t, k);
                    break;
                case AttackClass::WillPayload:
                    will_payload_event(a, rng, t, k);
                    break;
                case AttackClass::Benign:
                    break;  // rejected by validate()
            }
        }
    }

    void syn_flood_event(const AttackSpec& a, Rng& rng, double t) {
        auto sport = std::uint16_t(1024 + rng.pick(64512));
        emit(t, a.attacker_ip, sport, cfg_.broker_ip, cfg_.broker_port, tcpflag::SYN,
             {}, AttackClass::SynFlood);
        emit(t + rtt(rng), cfg_.broker_ip, cfg_.broker_port, a.attacker_ip, sport,
             tcpflag::SYN | tcpflag::ACK, {}, AttackClass::SynFlood);
        // No final ACK: the handshake is left half-open.
    }

    void port_scan_event(const AttackSpec& a, Rng& rng, double t, std::size_t k) {
        std::size_t range = std::size_t(a.port_range_end - a.port_range_begin) + 1;
        auto target = std::uint16_t(a.port_range_begin + k % range);
        std::uint16_t sport = alloc_port(a.attacker_ip);
        emit(t, a.attacker_ip, sport, cfg_.broker_ip, target, tcpflag::SYN, {},
             AttackClass::PortScan);
        double t1 = t + rtt(rng);
        if (target == cfg_.broker_port) {
            emit(t1, cfg_.broker_ip, target, a.attacker_ip, sport,
                 tcpflag::SYN | tcpflag::ACK, {}, AttackClass::PortScan);
            emit(t1 + rtt(rng), a.attacker_ip, sport, cfg_.broker_ip, target,
                 tcpflag::RST, {}, AttackClass::PortScan);
        } else {
            emit(t1, cfg_.broker_ip, target, a.attacker_ip, sport,
                 tcpflag::RST | tcpflag::ACK, {}, AttackClass::PortScan);
        }
    }

    void brute_force_event(const AttackSpec& a, Rng& rng, double t, std::size_t k) {
        std::uint16_t sport = alloc_port(a.attacker_ip);
        double cursor = handshake(t, rng, a.attacker_ip, sport, AttackClass::BruteForce);
        mqtt::ConnectOpts opts;
        opts.client_id = "probe";
        opts.username = "admin";
        opts.password = "pw" + std::to_string(k % a.credential_list_size);
        opts.keepalive = 30;
        emit_mqtt(cursor, a.attacker_ip, sport, cfg_.broker_ip, cfg_.broker_port,
                  mqtt::make_connect(opts), AttackClass::BruteForce);
        double t1 = cursor + rtt(rng);
        emit_mqtt(t1, cfg_.broker_ip, cfg_.broker_port, a.attacker_ip, sport,
                  mqtt::make_connack(4), AttackClass::BruteForce);  // bad credentials
        // Broker drops the connection after the refusal.
        double t2 = t1 + rtt(rng);
        emit(t2, cfg_.broker_ip, cfg_.broker_port, a.attacker_ip, sport,
             tcpflag::FIN | tcpflag::ACK, {}, AttackClass::BruteForce);
        emit(t2 + rtt(rng), a.attacker_ip, sport, cfg_.broker_ip, cfg_.broker_port,
             tcpflag::FIN | tcpflag::ACK, {}, AttackClass::BruteForce);
    }

    void malformed_event(const AttackSpec& a, Rng& rng, double t, std::size_t k) {
        std::uint16_t sport = alloc_port(a.attacker_ip);
        double cursor = handshake(t, rng, a.attacker_ip, sport, AttackClass::Malformed);
        auto kind = mqtt::MalformationKind(k % 5);
        emit(cursor, a.attacker_ip, sport, cfg_.broker_ip, cfg_.broker_port,
             tcpflag::PSH | tcpflag::ACK,
             mqtt::forge_malformed(kind, derive_seed(cfg_.seed, 0xF00D + k)),
             AttackClass::Malformed);
        emit(cursor + rtt(rng), cfg_.broker_ip, cfg_.broker_port, a.attacker_ip, sport,
             tcpflag::RST | tcpflag::ACK, {}, AttackClass::Malformed);
    }

    void invalid_sub_pub_event(const AttackSpec& a, Rng& rng, double t, std::size_t k) {
        std::uint16_t sport = alloc_port(a.attacker_ip);
        double cursor = handshake(t, rng, a.attacker_ip, sport, AttackClass::InvalidSubPub);
        mqtt::ConnectOpts opts;
        opts.client_id = "ghost";
        opts.keepalive = 30;
        emit_mqtt(cursor, a.attacker_ip, sport, cfg_.broker_ip, cfg_.broker_port,
                  mqtt::make_connect(opts), AttackClass::InvalidSubPub);
        emit_mqtt(cursor + rtt(rng), cfg_.broker_ip, cfg_.broker_port, a.attacker_ip,
                  sport, mqtt::make_connack(0), AttackClass::InvalidSubPub);
        cursor += 0.004 + rng.exponential(0.01);
        if (k % 2 == 0) {
            // Wildcards are illegal in a PUBLISH topic; broker cuts the session.
            const char* topics[] = {"ward/#", "ward/+/vitals", "#"};
            emit_mqtt(cursor, a.attacker_ip, sport, cfg_.broker_ip, cfg_.broker_port,
                      mqtt::make_publish(topics[k / 2 % 3], {'0'}),
                      AttackClass::InvalidSubPub);
            emit(cursor + rtt(rng), cfg_.broker_ip, cfg_.broker_port, a.attacker_ip,
                 sport, tcpflag::RST | tcpflag::ACK, {}, AttackClass::InvalidSubPub);
        } else {
            // $SYS subscription from an unprivileged client is refused.
            emit_mqtt(cursor, a.attacker_ip, sport, cfg_.broker_ip, cfg_.broker_port,
                      mqtt::make_subscribe(1, "$SYS/#"), AttackClass::InvalidSubPub);
            emit_mqtt(cursor + rtt(rng), cfg_.broker_ip, cfg_.broker_port,
                      a.attacker_ip, sport, mqtt::make_suback(1, 0x80),
                      AttackClass::InvalidSubPub);
            teardown(cursor + 0.02, rng, a.attacker_ip, sport, false,
                     AttackClass::InvalidSubPub);
        }
    }

    void will_payload_event(const AttackSpec& a, Rng& rng, double t, std::size_t k) {
        std::uint16_t sport = alloc_port(a.attacker_ip);
        double cursor = handshake(t, rng, a.attacker_ip, sport, AttackClass::WillPayload);

        const std::string& will_topic =
            cfg_.subscribers[k % cfg_.subscribers.size()].topic;
        std::vector<std::uint8_t> will_payload(a.will_size);
        for (auto& b : will_payload)
            b = std::uint8_t(rng.pick(256));

        mqtt::ConnectOpts opts;
        opts.client_id = "willful";
        opts.keepalive = 30;
        opts.will_flag = true;
        opts.will_topic = will_topic;
        opts.will_payload = will_payload;
        emit_mqtt(cursor, a.attacker_ip, sport, cfg_.broker_ip, cfg_.broker_port,
                  mqtt::make_connect(opts), AttackClass::WillPayload);
        emit_mqtt(cursor + rtt(rng), cfg_.broker_ip, cfg_.broker_port, a.attacker_ip,
                  sport, mqtt::make_connack(0), AttackClass::WillPayload);

        double ping_t = cursor + 0.1 + rng.exponential(0.05);
        emit_mqtt(ping_t, a.attacker_ip, sport, cfg_.broker_ip, cfg_.broker_port,
                  mqtt::make_pingreq(), AttackClass::WillPayload);
        emit_mqtt(ping_t + rtt(rng), cfg_.broker_ip, cfg_.broker_port, a.attacker_ip,
                  sport, mqtt::make_pingresp(), AttackClass::WillPayload);

        // Abnormal disconnect: RST with no DISCONNECT, so the broker
        // publishes the registered will to matching subscribers.
        double rst_t = ping_t + 0.05 + rng.exponential(0.05);
        emit(rst_t, a.attacker_ip, sport, cfg_.broker_ip, cfg_.broker_port,
             tcpflag::RST | tcpflag::ACK, {}, AttackClass::WillPayload);

        Event fire;
        fire.kind = EventKind::DeliverPublish;
        fire.t = rst_t + 0.002;
        fire.topic = will_topic;
        fire.publish_frame =
            mqtt::encode(mqtt::make_publish(will_topic, std::move(will_payload)));
        fire.label = AttackClass::WillPayload;
        push(std::move(fire));
    }
};

}  // namespace

void ScenarioConfig::validate() const {
    if (duration_s <= 0)
        throw ConfigError("duration must be positive");
    if (publishers.size() != 5 || subscribers.size() != 5)
        throw ConfigError("topology requires exactly 5 publishers and 5 subscribers");
    if (benign_fraction_target <= 0 || benign_fraction_target >= 1)
        throw ConfigError("benign fraction target must lie in (0,1)");

    std::vector<std::uint32_t> ips;
    auto check_client = [&](const ClientSpec& c) {
        if (c.ip == broker_ip)
            throw ConfigError("client ip collides with broker: " + c.ip.str());
        ips.push_back(c.ip.value);
    };
    for (const auto& c : publishers)
        check_client(c);
    for (const auto& c : subscribers)
        check_client(c);
    std::sort(ips.begin(), ips.end());
    if (std::adjacent_find(ips.begin(), ips.end()) != ips.end())
        throw ConfigError("client ips must be distinct");

    for (const AttackSpec& a : attacks) {
        if (a.attack_class == flow::AttackClass::Benign)
            throw ConfigError("attack class cannot be BENIGN");
        if (!(a.start_s >= 0 && a.start_s < a.end_s && a.end_s <= duration_s))
            throw ConfigError("attack window must satisfy 0 <= start < end <= duration");
        if (a.intensity <= 0)
            throw ConfigError("attack intensity must be positive");
        if (a.port_range_begin > a.port_range_end)
            throw ConfigError("invalid port range");
        if (a.attacker_ip == broker_ip ||
            std::binary_search(ips.begin(), ips.end(), a.attacker_ip.value))
            throw ConfigError("attacker ip collides with testbed host: " +
                              a.attacker_ip.str());
    }
    for (std::size_t i = 0; i < attacks.size(); ++i) {
        for (std::size_t j = i + 1; j < attacks.size(); ++j) {
            const AttackSpec& x = attacks[i];
            const AttackSpec& y = attacks[j];
            bool overlap = x.start_s < y.end_s && y.start_s < x.end_s;
            if (overlap && x.attacker_ip == y.attacker_ip &&
                x.attack_class != y.attack_class)
                throw ConfigError(
                    "overlapping attack windows from one attacker with conflicting "
                    "classes");
        }
    }
}

SimResult simulate(const ScenarioConfig& config) {
    config.validate();
    return Simulator(config).run();
}

DatasetBuild build_dataset(const ScenarioConfig& config, double idle_timeout_s) {
    SimResult sim = simulate(config);
    flow::AssembleOptions opts;
    opts.broker_ip = config.broker_ip;
    opts.broker_port = config.broker_port;
    opts.idle_timeout_s = idle_timeout_s;

    DatasetBuild build;
    build.assembled = flow::assemble(sim.packets, opts);
    flow::label_flows(build.assembled, sim.labels);
    build.packets = sim.packets.size();
    for (const flow::FlowRecord& f : build.assembled.flows) {
        if (f.label == flow::AttackClass::Benign)
            ++build.benign_flows;
        else
            ++build.attack_flows;
    }
    std::size_t total = build.benign_flows + build.attack_flows;
    build.benign_fraction = total == 0 ? 0 : double(build.benign_flows) / double(total);
    return build;
}

ScenarioConfig ScenarioConfig::benign_default(std::uint64_t seed, double duration_s) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.duration_s = duration_s;
    static const char* wards[] = {"icu", "er", "surgery", "pediatrics", "general"};
    for (int i = 0; i < 5; ++i) {
        ClientSpec pub;
        pub.ip = Ipv4Addr(10, 0, 0, std::uint8_t(11 + i));
        pub.client_id = "pub-" + std::to_string(i + 1);
        pub.topic = std::string("ward/") + wards[i] + "/vitals";
        pub.publish_interval_s = 1.5;
        cfg.publishers.push_back(pub);

        ClientSpec sub;
        sub.ip = Ipv4Addr(10, 0, 0, std::uint8_t(21 + i));
        sub.client_id = "sub-" + std::to_string(i + 1);
        sub.topic = pub.topic;
        cfg.subscribers.push_back(sub);
    }
    return cfg;
}

ScenarioConfig ScenarioConfig::mixed_default(std::uint64_t seed) {
    ScenarioConfig cfg = benign_default(seed, 3600);
    cfg.session_mean_s = 4.0;
    cfg.session_gap_mean_s = 1.9;

    auto add = [&](flow::AttackClass cls, double start, double end, double intensity,
                   std::uint8_t ip_octet) {
        AttackSpec a;
        a.attack_class = cls;
        a.start_s = start;
        a.end_s = end;
        a.intensity = intensity;
        a.attacker_ip = Ipv4Addr(10, 0, 9, ip_octet);
        return a;
    };
    {
        AttackSpec a = add(flow::AttackClass::SynFlood, 300, 420, 12, 2);
        cfg.attacks.push_back(a);
    }
    {
        AttackSpec a = add(flow::AttackClass::PortScan, 700, 956, 4, 5);
        a.port_range_begin = 1;
        a.port_range_end = 1024;
        cfg.attacks.push_back(a);
    }
    {
        AttackSpec a = add(flow::AttackClass::BruteForce, 1200, 1500, 2, 3);
        a.credential_list_size = 64;
        cfg.attacks.push_back(a);
    }
    {
        AttackSpec a = add(flow::AttackClass::Malformed, 1800, 2100, 2, 4);
        cfg.attacks.push_back(a);
    }
    {
        AttackSpec a = add(flow::AttackClass::InvalidSubPub, 2400, 2700, 2, 1);
        cfg.attacks.push_back(a);
    }
    {
        AttackSpec a = add(flow::AttackClass::WillPayload, 3000, 3300, 1.5, 6);
        a.will_size = 4096;
        cfg.attacks.push_back(a);
    }
    return cfg;
}

std::string ScenarioConfig::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["duration_s"] = duration_s;
    j["start_epoch_s"] = start_epoch_s;
    j["broker"] = {{"ip", broker_ip.str()}, {"port", broker_port}};
    j["benign_fraction_target"] = benign_fraction_target;
    j["session_mean_s"] = session_mean_s;
    j["session_gap_mean_s"] = session_gap_mean_s;
    j["keepalive_s"] = keepalive_s;
    j["flaky_session_fraction"] = flaky_session_fraction;
    auto client_json = [](const ClientSpec& c, bool publisher) {
        nlohmann::json cj = {{"ip", c.ip.str()},
                             {"client_id", c.client_id},
                             {"topic", c.topic}};
        if (publisher)
            cj["publish_interval_s"] = c.publish_interval_s;
        return cj;
    };
    j["publishers"] = nlohmann::json::array();
    for (const auto& c : publishers)
        j["publishers"].push_back(client_json(c, true));
    j["subscribers"] = nlohmann::json::array();
    for (const auto& c : subscribers)
        j["subscribers"].push_back(client_json(c, false));
    j["attacks"] = nlohmann::json::array();
    for (const AttackSpec& a : attacks) {
        nlohmann::json aj = {{"class", flow::attack_class_name(a.attack_class)},
                             {"start_s", a.start_s},
                             {"end_s", a.end_s},
                             {"intensity", a.intensity},
                             {"attacker_ip", a.attacker_ip.str()}};
        nlohmann::json params = nlohmann::json::object();
        switch (a.attack_class) {
            case flow::AttackClass::PortScan:
                params["port_range_begin"] = a.port_range_begin;
                params["port_range_end"] = a.port_range_end;
                break;
            case flow::AttackClass::BruteForce:
                params["credential_list_size"] = a.credential_list_size;
                break;
            case flow::AttackClass::WillPayload:
                params["will_size"] = a.will_size;
                break;
            default:
                break;
        }
        aj["params"] = params;
        j["attacks"].push_back(aj);
    }
    return j.dump(2) + "\n";
}

ScenarioConfig ScenarioConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario config is not valid JSON: ") + e.what());
    }
    ScenarioConfig cfg;
    try {
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.duration_s = j.at("duration_s").get<double>();
        cfg.start_epoch_s = j.value("start_epoch_s", cfg.start_epoch_s);
        cfg.broker_ip = Ipv4Addr::parse(j.at("broker").at("ip").get<std::string>());
        cfg.broker_port = j.at("broker").at("port").get<std::uint16_t>();
        cfg.benign_fraction_target =
            j.value("benign_fraction_target", cfg.benign_fraction_target);
        cfg.session_mean_s = j.value("session_mean_s", cfg.session_mean_s);
        cfg.session_gap_mean_s = j.value("session_gap_mean_s", cfg.session_gap_mean_s);
        cfg.keepalive_s = j.value("keepalive_s", cfg.keepalive_s);
        cfg.flaky_session_fraction =
            j.value("flaky_session_fraction", cfg.flaky_session_fraction);
        auto parse_client = [](const nlohmann::json& cj) {
            ClientSpec c;
            c.ip = Ipv4Addr::parse(cj.at("ip").get<std::string>());
            c.client_id = cj.at("client_id").get<std::string>();
            c.topic = cj.at("topic").get<std::string>();
            c.publish_interval_s = cj.value("publish_interval_s", 2.0);
            return c;
        };
        for (const auto& cj : j.at("publishers"))
            cfg.publishers.push_back(parse_client(cj));
        for (const auto& cj : j.at("subscribers"))
            cfg.subscribers.push_back(parse_client(cj));
        for (const auto& aj : j.value("attacks", nlohmann::json::array())) {
            AttackSpec a;
            a.attack_class =
                flow::attack_class_from_name(aj.at("class").get<std::string>());
            a.start_s = aj.at("start_s").get<double>();
            a.end_s = aj.at("end_s").get<double>();
            a.intensity = aj.at("intensity").get<double>();
            a.attacker_ip = Ipv4Addr::parse(aj.at("attacker_ip").get<std::string>());
            nlohmann::json params = aj.value("params", nlohmann::json::object());
            a.port_range_begin = params.value("port_range_begin", a.port_range_begin);
            a.port_range_end = params.value("port_range_end", a.port_range_end);
            a.credential_list_size =
                params.value("credential_list_size", a.credential_list_size);
            a.will_size = params.value("will_size", a.will_size);
            cfg.attacks.push_back(a);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario config field error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open scenario config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

void ScenarioConfig::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot write scenario config: " + path);
    out << to_json();
    if (!out)
        throw IoError("write failure on: " + path);
}

void write_labels_csv(const std::vector<flow::AttackClass>& labels,
                      const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open labels csv for writing: " + path);
    out << "packet_index,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i)
        out << i << ',' << flow::attack_class_name(labels[i]) << '\n';
    if (!out)
        throw IoError("write failure on: " + path);
}

std::vector<flow::AttackClass> read_labels_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open labels csv: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw FormatError("empty labels csv: " + path);
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != "packet_index,label")
        throw FormatError("unrecognized labels csv header in " + path);
    std::vector<flow::AttackClass> labels;
    std::size_t expected = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw FormatError("bad labels csv row: " + line);
        if (std::stoull(line.substr(0, comma)) != expected)
            throw ValidationError("labels csv packet_index out of sequence");
        labels.push_back(flow::attack_class_from_name(line.substr(comma + 1)));
        ++expected;
    }
    return labels;
}

}  // namespace mhnt::synth
