#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "hearthguard/error.hpp"
#include "hearthguard/meshbus/topic.hpp"

namespace hearthguard::meshbus {

inline constexpr std::size_t kMaxPayloadBytes = 1u << 20;
/// Envelope allowance on top of the payload for a whole encoded frame.
inline constexpr std::size_t kMaxFrameBytes = kMaxPayloadBytes + 64 * 1024;

enum class Op { connect, pub, sub, unsub, ping, pong, ack };

inline const char* to_string(Op op) {
    switch (op) {
        case Op::connect: return "connect";
        case Op::pub: return "pub";
        case Op::sub: return "sub";
        case Op::unsub: return "unsub";
        case Op::ping: return "ping";
        case Op::pong: return "pong";
        case Op::ack: return "ack";
    }
    return "?";
}

inline std::optional<Op> op_from_string(const std::string& s) {
    static const std::array<Op, 7> all{Op::connect, Op::pub, Op::sub, Op::unsub, Op::ping, Op::pong, Op::ack};
    for (Op op : all)
        if (s == to_string(op)) return op;
    return std::nullopt;
}

struct Frame {
    Op op = Op::pub;
    std::optional<std::string> topic;  // topic for pub, filter for sub/unsub
    nlohmann::json payload;
    bool retain = false;
    std::uint32_t id = 0;

    bool operator==(const Frame&) const = default;
};

inline Frame make_pub(std::string topic, nlohmann::json payload, bool retain = false, std::uint32_t id = 0) {
    return {Op::pub, std::move(topic), std::move(payload), retain, id};
}

inline Frame make_ack(std::uint32_t id, std::optional<std::string> error = std::nullopt) {
    Frame f{Op::ack, std::nullopt, nlohmann::json::object(), false, id};
    if (error)
        f.payload["error"] = *error;
    else
        f.payload["ok"] = true;
    return f;
}

inline void check_payload_size(const nlohmann::json& payload) {
    const auto n = payload.dump().size();
    if (n > kMaxPayloadBytes)
        throw FrameTooLarge("payload of " + std::to_string(n) + " bytes exceeds " + std::to_string(kMaxPayloadBytes));
}

/// Checks the per-op field requirements and the payload limit.
inline void validate_frame(const Frame& f) {
    switch (f.op) {
        case Op::pub:
            if (!f.topic) throw InvalidTopic("pub requires a topic");
            validate_topic(*f.topic);
            break;
        case Op::sub:
        case Op::unsub:
            if (!f.topic) throw InvalidFilter(std::string(to_string(f.op)) + " requires a filter");
            validate_filter(*f.topic);
            break;
        default: break;
    }
    check_payload_size(f.payload);
}

inline nlohmann::json to_json(const Frame& f) {
    nlohmann::json j{{"op", to_string(f.op)}};
    if (f.topic) j["topic"] = *f.topic;
    j["payload"] = f.payload;
    j["retain"] = f.retain;
    j["id"] = f.id;
    return j;
}

inline Frame frame_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw MalformedFrame("frame is not a JSON object");
    Frame f;
    const auto op = j.find("op");
    if (op == j.end() || !op->is_string()) throw MalformedFrame("frame has no string 'op'");
    const auto parsed = op_from_string(op->get<std::string>());
    if (!parsed) throw MalformedFrame("unknown op '" + op->get<std::string>() + "'");
    f.op = *parsed;
    if (auto t = j.find("topic"); t != j.end() && !t->is_null()) {
        if (!t->is_string()) throw MalformedFrame("'topic' must be a string");
        f.topic = t->get<std::string>();
    }
    if (auto p = j.find("payload"); p != j.end()) f.payload = *p;
    if (auto r = j.find("retain"); r != j.end()) {
        if (!r->is_boolean()) throw MalformedFrame("'retain' must be a boolean");
        f.retain = r->get<bool>();
    }
    if (auto i = j.find("id"); i != j.end()) {
        if (!i->is_number_unsigned() || i->get<std::uint64_t>() > 0xFFFFFFFFull)
            throw MalformedFrame("'id' must be a 32-bit unsigned integer");
        f.id = i->get<std::uint32_t>();
    }
    return f;
}

inline std::string encode_json(const Frame& f) { return to_json(f).dump(); }

inline Frame decode_json(std::string_view text) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw MalformedFrame("frame body is not valid JSON");
    return frame_from_json(j);
}

/// TCP wire form: 4-byte big-endian body length, then the JSON body.
inline std::string encode_tcp(const Frame& f) {
    const std::string body = encode_json(f);
    if (body.size() > kMaxFrameBytes) throw FrameTooLarge("encoded frame too large");
    const auto n = static_cast<std::uint32_t>(body.size());
    std::string out;
    out.reserve(4 + body.size());
    out.push_back(static_cast<char>((n >> 24) & 0xFF));
    out.push_back(static_cast<char>((n >> 16) & 0xFF));
    out.push_back(static_cast<char>((n >> 8) & 0xFF));
    out.push_back(static_cast<char>(n & 0xFF));
    out += body;
    return out;
}

inline std::uint32_t decode_length(const unsigned char* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

/// Splits complete frames off the front of a byte buffer.
class TcpFrameDecoder {
public:
    void feed(std::string_view bytes) { buf_.append(bytes); }

    /// Next complete frame, or nullopt if more bytes are needed.
    std::optional<Frame> next() {
        if (buf_.size() < 4) return std::nullopt;
        const auto n = decode_length(reinterpret_cast<const unsigned char*>(buf_.data()));
        if (n > kMaxFrameBytes) throw FrameTooLarge("declared frame length " + std::to_string(n) + " too large");
        if (buf_.size() < 4 + std::size_t{n}) return std::nullopt;
        const std::string body = buf_.substr(4, n);
        buf_.erase(0, 4 + std::size_t{n});
        return decode_json(body);
    }

    std::size_t buffered() const { return buf_.size(); }

private:
    std::string buf_;
};

}  // namespace hearthguard::meshbus
