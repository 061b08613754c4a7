#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace gw::net::mqtt {

using Bytes = std::vector<std::uint8_t>;

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class PacketType : std::uint8_t {
    Connect = 1,
    ConnAck = 2,
    Publish = 3,
    PubAck = 4,
    Subscribe = 8,
    SubAck = 9,
    PingReq = 12,
    PingResp = 13,
    Disconnect = 14,
};

struct Connect {
    std::string client_id;
    std::uint16_t keep_alive = 60;
    bool clean_session = true;
    friend bool operator==(const Connect&, const Connect&) = default;
};

struct ConnAck {
    bool session_present = false;
    /// 0 accepted; 1..5 refusal codes.
    std::uint8_t return_code = 0;
    friend bool operator==(const ConnAck&, const ConnAck&) = default;
};

struct Publish {
    std::string topic;
    Bytes payload;
    std::uint8_t qos = 0;
    std::uint16_t packet_id = 0;
    bool retain = false;
    bool dup = false;
    friend bool operator==(const Publish&, const Publish&) = default;
};

struct PubAck {
    std::uint16_t packet_id = 0;
    friend bool operator==(const PubAck&, const PubAck&) = default;
};

struct Subscribe {
    std::uint16_t packet_id = 0;
    std::vector<std::pair<std::string, std::uint8_t>> filters;
    friend bool operator==(const Subscribe&, const Subscribe&) = default;
};

struct SubAck {
    std::uint16_t packet_id = 0;
    std::vector<std::uint8_t> codes;
    friend bool operator==(const SubAck&, const SubAck&) = default;
};

struct PingReq {
    friend bool operator==(const PingReq&, const PingReq&) = default;
};
struct PingResp {
    friend bool operator==(const PingResp&, const PingResp&) = default;
};
struct Disconnect {
    friend bool operator==(const Disconnect&, const Disconnect&) = default;
};

using Packet =
    std::variant<Connect, ConnAck, Publish, PubAck, Subscribe, SubAck, PingReq, PingResp, Disconnect>;

/// Remaining-length varint, 1..4 bytes, max 268435455.
void encode_varint(std::uint32_t value, Bytes& out);
/// Decodes from data[pos...]; returns nothing when more bytes are needed.
std::optional<std::pair<std::uint32_t, std::size_t>> decode_varint(const std::uint8_t* data,
                                                                    std::size_t size);

Bytes encode(const Packet& packet);

/// Incremental decoder for a byte stream.
class Decoder {
public:
    void feed(const std::uint8_t* data, std::size_t size);
    /// Next complete packet, if any. Throws ProtocolError on malformed input.
    std::optional<Packet> next();
    std::size_t buffered() const { return buf_.size() - pos_; }

private:
    Bytes buf_;
    std::size_t pos_ = 0;
};

/// Decodes exactly one packet from a complete frame.
Packet decode(const Bytes& frame);

/// MQTT topic-filter match with '+' and '#'.
bool topic_matches(const std::string& filter, const std::string& topic);

const char* name(const Packet& p);

}  // namespace gw::net::mqtt
