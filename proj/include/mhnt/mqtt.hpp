#ifndef MHNT_MQTT_HPP
#define MHNT_MQTT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mhnt/common.hpp"

namespace mhnt::mqtt {

// MQTT v3.1.1 control packet types. PUBREC/PUBREL/PUBCOMP decode for
// completeness but are never synthesized (QoS is capped at 1 here).
enum class PacketType : std::uint8_t {
    Connect = 1,
    Connack = 2,
    Publish = 3,
    Puback = 4,
    Pubrec = 5,
    Pubrel = 6,
    Pubcomp = 7,
    Subscribe = 8,
    Suback = 9,
    Unsubscribe = 10,
    Unsuback = 11,
    Pingreq = 12,
    Pingresp = 13,
    Disconnect = 14,
};

const char* packet_type_name(PacketType t);

enum class MalformationKind : std::uint8_t {
    ReservedType,
    BadFlags,
    BadRemainingLength,
    TruncatedBody,
    InvalidUtf8Topic,
};

const char* malformation_kind_name(MalformationKind k);

struct ConnectOpts {
    std::string client_id;
    std::optional<std::string> username;
    std::optional<std::string> password;
    bool will_flag = false;
    std::uint8_t will_qos = 0;
    bool will_retain = false;
    std::string will_topic;              // present iff will_flag
    std::vector<std::uint8_t> will_payload;  // present iff will_flag
    bool clean_session = true;
    std::uint16_t keepalive = 60;

    bool operator==(const ConnectOpts&) const = default;
};

struct TopicFilter {
    std::string topic;
    std::uint8_t qos = 0;  // requested QoS; unused for UNSUBSCRIBE

    bool operator==(const TopicFilter&) const = default;
};

// One decoded control packet. Field usage by type:
//   topic        PUBLISH
//   filters      SUBSCRIBE / UNSUBSCRIBE (at least one entry)
//   payload      PUBLISH application payload; SUBACK return codes;
//                CONNACK [session_present, return_code]
//   packet_id    PUBLISH (QoS > 0), (UN)SUBSCRIBE and the ack family
//   connect_opts CONNECT
struct MqttMessage {
    PacketType type = PacketType::Pingreq;
    std::uint8_t flags = 0;
    std::uint32_t remaining_length = 0;  // informational; encode recomputes
    std::optional<std::uint16_t> packet_id;
    std::string topic;
    std::vector<TopicFilter> filters;
    std::vector<std::uint8_t> payload;
    std::optional<ConnectOpts> connect_opts;

    std::uint8_t qos() const { return (flags >> 1) & 0x3; }

    // Topic length sum and count across PUBLISH topic and filter lists,
    // the inputs of the mean-topic-length flow feature.
    std::size_t topic_char_count() const;
    std::size_t topic_count() const;

    bool equals_ignoring_length(const MqttMessage& other) const;
    bool operator==(const MqttMessage&) const = default;
};

struct MalformationReport {
    MalformationKind kind = MalformationKind::ReservedType;
    std::size_t offset = 0;  // byte index of the violation, < raw.size()
    std::vector<std::uint8_t> raw;

    bool operator==(const MalformationReport&) const = default;
};

using DecodeResult = std::variant<MqttMessage, MalformationReport>;

inline bool is_well_formed(const DecodeResult& r) {
    return std::holds_alternative<MqttMessage>(r);
}

// Decodes exactly one control packet. Total: any byte string yields
// either a message or a malformation report, never an exception. Bytes
// left over after the declared remaining length are themselves a
// malformation.
DecodeResult decode(const std::vector<std::uint8_t>& bytes);

// Splits a TCP payload carrying back-to-back control packets. Stops at
// the first malformed packet (no resync) and reports it as the last
// element.
std::vector<DecodeResult> decode_stream(const std::vector<std::uint8_t>& bytes);

// Serializes a message; remaining_length is recomputed from the body.
// Throws ValidationError on unencodable field values (topic with NUL,
// topic over 65535 bytes, missing packet id, QoS 3, ...).
std::vector<std::uint8_t> encode(const MqttMessage& msg);

// Deterministically builds bytes that decode to a MalformationReport of
// the requested kind.
std::vector<std::uint8_t> forge_malformed(MalformationKind kind, std::uint64_t seed);

bool utf8_valid(const std::string& s);

// Constructors for the packet shapes the synthesizer emits.
MqttMessage make_connect(ConnectOpts opts);
MqttMessage make_connack(std::uint8_t return_code, bool session_present = false);
MqttMessage make_publish(std::string topic, std::vector<std::uint8_t> payload,
                         std::uint8_t qos = 0,
                         std::optional<std::uint16_t> packet_id = std::nullopt);
MqttMessage make_puback(std::uint16_t packet_id);
MqttMessage make_subscribe(std::uint16_t packet_id, std::string topic,
                           std::uint8_t qos = 0);
MqttMessage make_suback(std::uint16_t packet_id, std::uint8_t return_code);
MqttMessage make_unsubscribe(std::uint16_t packet_id, std::string topic);
MqttMessage make_unsuback(std::uint16_t packet_id);
MqttMessage make_pingreq();
MqttMessage make_pingresp();
MqttMessage make_disconnect();

}  // namespace mhnt::mqtt

#endif
