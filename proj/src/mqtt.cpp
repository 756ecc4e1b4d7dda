#include "mhnt/mqtt.hpp"

#include <algorithm>
#include <random>

namespace mhnt::mqtt {

namespace {

constexpr std::uint32_t kMaxRemainingLength = 268435455;  // 4 varint bytes

// Reads big-endian scalars and length-prefixed fields out of a packet body.
struct Reader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;

    bool u8(std::uint8_t& v) {
        if (pos >= size)
            return false;
        v = data[pos++];
        return true;
    }
    bool u16(std::uint16_t& v) {
        if (pos + 2 > size)
            return false;
        v = std::uint16_t(data[pos] << 8 | data[pos + 1]);
        pos += 2;
        return true;
    }
    bool str(std::string& out) {
        std::uint16_t len;
        if (!u16(len) || pos + len > size)
            return false;
        out.assign(reinterpret_cast<const char*>(data + pos), len);
        pos += len;
        return true;
    }
    bool bytes(std::vector<std::uint8_t>& out) {
        std::uint16_t len;
        if (!u16(len) || pos + len > size)
            return false;
        out.assign(data + pos, data + pos + len);
        pos += len;
        return true;
    }
};

MalformationReport report(MalformationKind kind, std::size_t offset,
                          const std::uint8_t* data, std::size_t size) {
    MalformationReport r;
    r.kind = kind;
    r.offset = size == 0 ? 0 : std::min(offset, size - 1);
    r.raw.assign(data, data + size);
    return r;
}

bool fixed_flags_valid(PacketType type, std::uint8_t flags) {
    switch (type) {
        case PacketType::Publish:
            return ((flags >> 1) & 0x3) != 3;  // QoS 3 is invalid
        case PacketType::Pubrel:
        case PacketType::Subscribe:
        case PacketType::Unsubscribe:
            return flags == 0x2;
        default:
            return flags == 0x0;
    }
}

// Returns the index of the first invalid UTF-8 byte, or npos.
std::size_t utf8_violation(const std::string& s) {
    const auto* b = reinterpret_cast<const std::uint8_t*>(s.data());
    std::size_t n = s.size();
    std::size_t i = 0;
    while (i < n) {
        std::uint8_t c = b[i];
        if (c == 0x00)
            return i;  // U+0000 is forbidden in MQTT strings
        if (c < 0x80) {
            ++i;
        } else if ((c & 0xE0) == 0xC0) {
            if (c < 0xC2 || i + 1 >= n || (b[i + 1] & 0xC0) != 0x80)
                return i;
            i += 2;
        } else if ((c & 0xF0) == 0xE0) {
            if (i + 2 >= n || (b[i + 1] & 0xC0) != 0x80 || (b[i + 2] & 0xC0) != 0x80)
                return i;
            if (c == 0xE0 && b[i + 1] < 0xA0)
                return i;  // overlong
            if (c == 0xED && b[i + 1] >= 0xA0)
                return i;  // surrogate
            i += 3;
        } else if ((c & 0xF8) == 0xF0) {
            if (c > 0xF4 || i + 3 >= n || (b[i + 1] & 0xC0) != 0x80 ||
                (b[i + 2] & 0xC0) != 0x80 || (b[i + 3] & 0xC0) != 0x80)
                return i;
            if (c == 0xF0 && b[i + 1] < 0x90)
                return i;  // overlong
            if (c == 0xF4 && b[i + 1] >= 0x90)
                return i;  // above U+10FFFF
            i += 4;
        } else {
            return i;
        }
    }
    return std::string::npos;
}

struct VarintResult {
    bool ok = false;
    bool overflow = false;  // 4th byte still has the continuation bit
    std::uint32_t value = 0;
    std::size_t end = 0;  // index one past the varint
};

VarintResult parse_varint(const std::uint8_t* data, std::size_t size, std::size_t pos) {
    VarintResult r;
    std::uint32_t multiplier = 1;
    for (int i = 0; i < 4; ++i) {
        if (pos + std::size_t(i) >= size)
            return r;  // ran out of bytes mid-varint
        std::uint8_t byte = data[pos + std::size_t(i)];
        r.value += std::uint32_t(byte & 0x7F) * multiplier;
        multiplier *= 128;
        if ((byte & 0x80) == 0) {
            r.ok = true;
            r.end = pos + std::size_t(i) + 1;
            return r;
        }
    }
    r.overflow = true;
    r.end = pos + 4;
    return r;
}

DecodeResult decode_frame(const std::uint8_t* data, std::size_t size) {
    std::uint8_t type_nibble = data[0] >> 4;
    std::uint8_t flags = data[0] & 0x0F;
    if (type_nibble == 0 || type_nibble == 15)
        return report(MalformationKind::ReservedType, 0, data, size);
    auto type = PacketType(type_nibble);
    if (!fixed_flags_valid(type, flags))
        return report(MalformationKind::BadFlags, 0, data, size);

    VarintResult len = parse_varint(data, size, 1);
    if (len.overflow)
        return report(MalformationKind::BadRemainingLength, 4, data, size);
    if (!len.ok)
        return report(MalformationKind::TruncatedBody, size - 1, data, size);
    std::size_t body_begin = len.end;
    std::size_t body_end = body_begin + len.value;
    if (body_end > size)
        return report(MalformationKind::TruncatedBody, size - 1, data, size);
    if (body_end < size)  // trailing bytes the length does not account for
        return report(MalformationKind::BadRemainingLength, body_end, data, size);

    MqttMessage msg;
    msg.type = type;
    msg.flags = flags;
    msg.remaining_length = len.value;

    Reader rd{data, body_end, body_begin};
    auto truncated = [&]() {
        return report(MalformationKind::TruncatedBody, size - 1, data, size);
    };
    auto check_topic = [&](const std::string& topic,
                           std::size_t field_end) -> std::optional<MalformationReport> {
        std::size_t bad = utf8_violation(topic);
        if (bad == std::string::npos)
            return std::nullopt;
        std::size_t topic_start = field_end - topic.size();
        return report(MalformationKind::InvalidUtf8Topic, topic_start + bad, data, size);
    };

    switch (type) {
        case PacketType::Connect: {
            std::string proto_name;
            std::size_t name_pos = rd.pos;
            if (!rd.str(proto_name))
                return truncated();
            std::uint8_t level, cflags;
            if (!rd.u8(level))
                return truncated();
            // Header violations (wrong protocol name/level, reserved bits)
            // are classified under BadFlags.
            if (proto_name != "MQTT" || level != 4)
                return report(MalformationKind::BadFlags, name_pos, data, size);
            if (!rd.u8(cflags))
                return truncated();
            if (cflags & 0x01)
                return report(MalformationKind::BadFlags, rd.pos - 1, data, size);
            ConnectOpts opts;
            opts.clean_session = cflags & 0x02;
            opts.will_flag = cflags & 0x04;
            opts.will_qos = (cflags >> 3) & 0x3;
            opts.will_retain = cflags & 0x20;
            bool has_password = cflags & 0x40;
            bool has_username = cflags & 0x80;
            if (opts.will_qos == 3 || (!opts.will_flag && (opts.will_qos || opts.will_retain)))
                return report(MalformationKind::BadFlags, rd.pos - 1, data, size);
            if (has_password && !has_username)
                return report(MalformationKind::BadFlags, rd.pos - 1, data, size);
            if (!rd.u16(opts.keepalive))
                return truncated();
            if (!rd.str(opts.client_id))
                return truncated();
            if (opts.will_flag) {
                if (!rd.str(opts.will_topic))
                    return truncated();
                if (auto bad = check_topic(opts.will_topic, rd.pos))
                    return *bad;
                if (!rd.bytes(opts.will_payload))
                    return truncated();
            }
            if (has_username) {
                std::string u;
                if (!rd.str(u))
                    return truncated();
                opts.username = std::move(u);
            }
            if (has_password) {
                std::string pw;
                if (!rd.str(pw))
                    return truncated();
                opts.password = std::move(pw);
            }
            if (rd.pos != body_end)
                return report(MalformationKind::BadRemainingLength, rd.pos, data, size);
            msg.connect_opts = std::move(opts);
            break;
        }
        case PacketType::Connack: {
            if (len.value != 2)
                return report(MalformationKind::BadRemainingLength,
                              len.value < 2 ? size - 1 : body_begin + 2, data, size);
            msg.payload.assign(data + body_begin, data + body_end);
            break;
        }
        case PacketType::Publish: {
            if (!rd.str(msg.topic))
                return truncated();
            if (auto bad = check_topic(msg.topic, rd.pos))
                return *bad;
            if (msg.qos() > 0) {
                std::uint16_t id;
                if (!rd.u16(id))
                    return truncated();
                msg.packet_id = id;
            }
            msg.payload.assign(data + rd.pos, data + body_end);
            break;
        }
        case PacketType::Puback:
        case PacketType::Pubrec:
        case PacketType::Pubrel:
        case PacketType::Pubcomp:
        case PacketType::Unsuback: {
            if (len.value != 2)
                return report(MalformationKind::BadRemainingLength,
                              len.value < 2 ? size - 1 : body_begin + 2, data, size);
            std::uint16_t id;
            rd.u16(id);
            msg.packet_id = id;
            break;
        }
        case PacketType::Subscribe:
        case PacketType::Unsubscribe: {
            std::uint16_t id;
            if (!rd.u16(id))
                return truncated();
            msg.packet_id = id;
            while (rd.pos < body_end) {
                TopicFilter f;
                if (!rd.str(f.topic))
                    return truncated();
                if (auto bad = check_topic(f.topic, rd.pos))
                    return *bad;
                if (type == PacketType::Subscribe) {
                    if (!rd.u8(f.qos))
                        return truncated();
                    if (f.qos > 2)
                        return report(MalformationKind::BadFlags, rd.pos - 1, data, size);
                }
                msg.filters.push_back(std::move(f));
            }
            if (msg.filters.empty())
                return truncated();  // at least one filter is required
            break;
        }
        case PacketType::Suback: {
            std::uint16_t id;
            if (!rd.u16(id))
                return truncated();
            msg.packet_id = id;
            if (rd.pos >= body_end)
                return truncated();  // at least one return code
            msg.payload.assign(data + rd.pos, data + body_end);
            break;
        }
        case PacketType::Pingreq:
        case PacketType::Pingresp:
        case PacketType::Disconnect: {
            if (len.value != 0)
                return report(MalformationKind::BadRemainingLength, body_begin, data, size);
            break;
        }
    }
    return msg;
}

// Length of the next frame if the fixed header is parseable, else 0.
std::size_t peek_frame_length(const std::uint8_t* data, std::size_t size) {
    if (size < 2)
        return 0;
    VarintResult len = parse_varint(data, size, 1);
    if (!len.ok)
        return 0;
    std::size_t total = len.end + len.value;
    return total <= size ? total : 0;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v & 0xFF));
}

void put_str(std::vector<std::uint8_t>& out, const std::string& s) {
    if (s.size() > 65535)
        throw ValidationError("MQTT string longer than 65535 bytes");
    put_u16(out, std::uint16_t(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

void put_topic(std::vector<std::uint8_t>& out, const std::string& topic) {
    if (topic.find('\0') != std::string::npos)
        throw ValidationError("topic contains embedded NUL");
    if (topic.size() > 65535)
        throw ValidationError("topic longer than 65535 bytes");
    put_str(out, topic);
}

void put_bytes(std::vector<std::uint8_t>& out, const std::vector<std::uint8_t>& b) {
    if (b.size() > 65535)
        throw ValidationError("MQTT binary field longer than 65535 bytes");
    put_u16(out, std::uint16_t(b.size()));
    out.insert(out.end(), b.begin(), b.end());
}

}  // namespace

const char* packet_type_name(PacketType t) {
    switch (t) {
        case PacketType::Connect: return "CONNECT";
        case PacketType::Connack: return "CONNACK";
        case PacketType::Publish: return "PUBLISH";
        case PacketType::Puback: return "PUBACK";
        case PacketType::Pubrec: return "PUBREC";
        case PacketType::Pubrel: return "PUBREL";
        case PacketType::Pubcomp: return "PUBCOMP";
        case PacketType::Subscribe: return "SUBSCRIBE";
        case PacketType::Suback: return "SUBACK";
        case PacketType::Unsubscribe: return "UNSUBSCRIBE";
        case PacketType::Unsuback: return "UNSUBACK";
        case PacketType::Pingreq: return "PINGREQ";
        case PacketType::Pingresp: return "PINGRESP";
        case PacketType::Disconnect: return "DISCONNECT";
    }
    return "?";
}

const char* malformation_kind_name(MalformationKind k) {
    switch (k) {
        case MalformationKind::ReservedType: return "RESERVED_TYPE";
        case MalformationKind::BadFlags: return "BAD_FLAGS";
        case MalformationKind::BadRemainingLength: return "BAD_REMAINING_LENGTH";
        case MalformationKind::TruncatedBody: return "TRUNCATED_BODY";
        case MalformationKind::InvalidUtf8Topic: return "INVALID_UTF8_TOPIC";
    }
    return "?";
}

std::size_t MqttMessage::topic_char_count() const {
    if (type == PacketType::Publish)
        return topic.size();
    std::size_t n = 0;
    for (const auto& f : filters)
        n += f.topic.size();
    return n;
}

std::size_t MqttMessage::topic_count() const {
    if (type == PacketType::Publish)
        return 1;
    return filters.size();
}

bool MqttMessage::equals_ignoring_length(const MqttMessage& other) const {
    MqttMessage a = *this;
    MqttMessage b = other;
    a.remaining_length = 0;
    b.remaining_length = 0;
    return a == b;
}

DecodeResult decode(const std::vector<std::uint8_t>& bytes) {
    if (bytes.empty())
        throw ValidationError("decode requires non-empty input");
    return decode_frame(bytes.data(), bytes.size());
}

std::vector<DecodeResult> decode_stream(const std::vector<std::uint8_t>& bytes) {
    std::vector<DecodeResult> out;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        std::size_t frame_len = peek_frame_length(bytes.data() + pos, bytes.size() - pos);
        std::size_t take = frame_len == 0 ? bytes.size() - pos : frame_len;
        std::vector<std::uint8_t> frame(bytes.begin() + std::ptrdiff_t(pos),
                                        bytes.begin() + std::ptrdiff_t(pos + take));
        DecodeResult r = decode(frame);
        bool bad = !is_well_formed(r);
        out.push_back(std::move(r));
        if (bad)
            break;  // no resync after a malformed packet
        pos += take;
    }
    return out;
}

std::vector<std::uint8_t> encode(const MqttMessage& msg) {
    std::vector<std::uint8_t> body;
    std::uint8_t flags = msg.flags;

    switch (msg.type) {
        case PacketType::Connect: {
            if (!msg.connect_opts)
                throw ValidationError("CONNECT requires connect_opts");
            const ConnectOpts& o = *msg.connect_opts;
            if (o.will_qos > 2)
                throw ValidationError("will QoS out of range");
            if (o.password && !o.username)
                throw ValidationError("password without username");
            put_str(body, "MQTT");
            body.push_back(4);
            std::uint8_t cflags = 0;
            if (o.clean_session) cflags |= 0x02;
            if (o.will_flag) {
                cflags |= 0x04;
                cflags |= std::uint8_t(o.will_qos << 3);
                if (o.will_retain) cflags |= 0x20;
            }
            if (o.password) cflags |= 0x40;
            if (o.username) cflags |= 0x80;
            body.push_back(cflags);
            put_u16(body, o.keepalive);
            put_str(body, o.client_id);
            if (o.will_flag) {
                put_topic(body, o.will_topic);
                put_bytes(body, o.will_payload);
            }
            if (o.username)
                put_str(body, *o.username);
            if (o.password)
                put_str(body, *o.password);
            flags = 0;
            break;
        }
        case PacketType::Connack: {
            if (msg.payload.size() != 2)
                throw ValidationError("CONNACK payload must be [session_present, return_code]");
            body = msg.payload;
            flags = 0;
            break;
        }
        case PacketType::Publish: {
            if (msg.qos() == 3)
                throw ValidationError("QoS 3 is invalid");
            put_topic(body, msg.topic);
            if (msg.qos() > 0) {
                if (!msg.packet_id)
                    throw ValidationError("PUBLISH with QoS > 0 requires a packet id");
                put_u16(body, *msg.packet_id);
            }
            body.insert(body.end(), msg.payload.begin(), msg.payload.end());
            break;
        }
        case PacketType::Puback:
        case PacketType::Pubrec:
        case PacketType::Pubrel:
        case PacketType::Pubcomp:
        case PacketType::Unsuback: {
            if (!msg.packet_id)
                throw ValidationError("ack packet requires a packet id");
            put_u16(body, *msg.packet_id);
            flags = msg.type == PacketType::Pubrel ? 0x2 : 0x0;
            break;
        }
        case PacketType::Subscribe:
        case PacketType::Unsubscribe: {
            if (!msg.packet_id)
                throw ValidationError("(UN)SUBSCRIBE requires a packet id");
            if (msg.filters.empty())
                throw ValidationError("(UN)SUBSCRIBE requires at least one topic filter");
            put_u16(body, *msg.packet_id);
            for (const TopicFilter& f : msg.filters) {
                put_topic(body, f.topic);
                if (msg.type == PacketType::Subscribe) {
                    if (f.qos > 2)
                        throw ValidationError("requested QoS out of range");
                    body.push_back(f.qos);
                }
            }
            flags = 0x2;
            break;
        }
        case PacketType::Suback: {
            if (!msg.packet_id)
                throw ValidationError("SUBACK requires a packet id");
            if (msg.payload.empty())
                throw ValidationError("SUBACK requires at least one return code");
            put_u16(body, *msg.packet_id);
            body.insert(body.end(), msg.payload.begin(), msg.payload.end());
            flags = 0;
            break;
        }
        case PacketType::Pingreq:
        case PacketType::Pingresp:
        case PacketType::Disconnect:
            flags = 0;
            break;
    }

    if (body.size() > kMaxRemainingLength)
        throw ValidationError("remaining length exceeds the 4-byte varint maximum");

    std::vector<std::uint8_t> out;
    out.push_back(std::uint8_t(std::uint8_t(msg.type) << 4 | (flags & 0x0F)));
    std::uint32_t rl = std::uint32_t(body.size());
    do {
        std::uint8_t byte = rl % 128;
        rl /= 128;
        if (rl > 0)
            byte |= 0x80;
        out.push_back(byte);
    } while (rl > 0);
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

std::vector<std::uint8_t> forge_malformed(MalformationKind kind, std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, std::uint64_t(kind) + 0x6D71F4));
    auto byte = [&](int lo, int hi) {
        return std::uint8_t(lo + std::int64_t(rng() % std::uint64_t(hi - lo + 1)));
    };

    std::vector<std::uint8_t> out;
    switch (kind) {
        case MalformationKind::ReservedType: {
            std::uint8_t nibble = (rng() & 1) ? 0x0 : 0xF;
            out.push_back(std::uint8_t(nibble << 4 | (rng() & 0x0F)));
            std::size_t extra = rng() % 8;
            for (std::size_t i = 0; i < extra; ++i)
                out.push_back(byte(0, 255));
            break;
        }
        case MalformationKind::BadFlags: {
            // Types with a fixed zero flag nibble, sent with a nonzero one.
            static constexpr PacketType types[] = {
                PacketType::Connect, PacketType::Connack, PacketType::Puback,
                PacketType::Suback, PacketType::Pingreq, PacketType::Disconnect};
            PacketType t = types[rng() % std::size(types)];
            out.push_back(std::uint8_t(std::uint8_t(t) << 4 | byte(1, 15)));
            out.push_back(0x00);
            break;
        }
        case MalformationKind::BadRemainingLength: {
            out.push_back(0xC0);  // PINGREQ, valid flags
            for (int i = 0; i < 5; ++i)
                out.push_back(std::uint8_t(0x80 | (rng() & 0x7F)));
            break;
        }
        case MalformationKind::TruncatedBody: {
            std::uint8_t declared = byte(10, 120);
            out.push_back(0x30);  // PUBLISH QoS 0
            out.push_back(declared);
            std::size_t provided = rng() % declared;
            for (std::size_t i = 0; i < provided; ++i)
                out.push_back(byte(0, 255));
            break;
        }
        case MalformationKind::InvalidUtf8Topic: {
            static const std::vector<std::vector<std::uint8_t>> bad_sequences = {
                {0xC0, 0xAF},        // overlong '/'
                {0xED, 0xA0, 0x80},  // UTF-16 surrogate
                {0xFF},              // invalid lead byte
                {0x80},              // stray continuation byte
                {0x00},              // forbidden U+0000
            };
            const auto& bad = bad_sequences[rng() % bad_sequences.size()];
            std::vector<std::uint8_t> topic = {'w', 'a', 'r', 'd', '/'};
            topic.insert(topic.end(), bad.begin(), bad.end());
            std::vector<std::uint8_t> body;
            body.push_back(std::uint8_t(topic.size() >> 8));
            body.push_back(std::uint8_t(topic.size() & 0xFF));
            body.insert(body.end(), topic.begin(), topic.end());
            body.push_back('x');  // one payload byte
            out.push_back(0x30);
            out.push_back(std::uint8_t(body.size()));
            out.insert(out.end(), body.begin(), body.end());
            break;
        }
    }
    return out;
}

bool utf8_valid(const std::string& s) {
    return utf8_violation(s) == std::string::npos;
}

MqttMessage make_connect(ConnectOpts opts) {
    MqttMessage m;
    m.type = PacketType::Connect;
    m.connect_opts = std::move(opts);
    return m;
}

MqttMessage make_connack(std::uint8_t return_code, bool session_present) {
    MqttMessage m;
    m.type = PacketType::Connack;
    m.payload = {std::uint8_t(session_present ? 1 : 0), return_code};
    return m;
}

MqttMessage make_publish(std::string topic, std::vector<std::uint8_t> payload,
                         std::uint8_t qos, std::optional<std::uint16_t> packet_id) {
    MqttMessage m;
    m.type = PacketType::Publish;
    m.flags = std::uint8_t(qos << 1);
    m.topic = std::move(topic);
    m.payload = std::move(payload);
    m.packet_id = packet_id;
    return m;
}

MqttMessage make_puback(std::uint16_t packet_id) {
    MqttMessage m;
    m.type = PacketType::Puback;
    m.packet_id = packet_id;
    return m;
}

MqttMessage make_subscribe(std::uint16_t packet_id, std::string topic, std::uint8_t qos) {
    MqttMessage m;
    m.type = PacketType::Subscribe;
    m.flags = 0x2;
    m.packet_id = packet_id;
    m.filters.push_back({std::move(topic), qos});
    return m;
}

MqttMessage make_suback(std::uint16_t packet_id, std::uint8_t return_code) {
    MqttMessage m;
    m.type = PacketType::Suback;
    m.packet_id = packet_id;
    m.payload = {return_code};
    return m;
}

MqttMessage make_unsubscribe(std::uint16_t packet_id, std::string topic) {
    MqttMessage m;
    m.type = PacketType::Unsubscribe;
    m.flags = 0x2;
    m.packet_id = packet_id;
    m.filters.push_back({std::move(topic), 0});
    return m;
}

MqttMessage make_unsuback(std::uint16_t packet_id) {
    MqttMessage m;
    m.type = PacketType::Unsuback;
    m.packet_id = packet_id;
    return m;
}

MqttMessage make_pingreq() {
    MqttMessage m;
    m.type = PacketType::Pingreq;
    return m;
}

MqttMessage make_pingresp() {
    MqttMessage m;
    m.type = PacketType::Pingresp;
    return m;
}

MqttMessage make_disconnect() {
    MqttMessage m;
    m.type = PacketType::Disconnect;
    return m;
}

}  // namespace mhnt::mqtt
