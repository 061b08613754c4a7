#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gw/interop/value.hpp"

namespace gw::interop {

/// MQTT client dialects the gateway bridges.
///
///   Paho     keyed record: {'command', 'qos', 'pos', 'mid', 'info',
///            'packet', 'to_process'} where 'packet' is the raw publish
///            sequence ending in the payload.
///   Gmqtt    ordered sequence: (command, dup, qos, retain, remaining_len,
///            topic_len, topic, mid, (qos, properties, payload)).
///   Standard every envelope field under its own name.
enum class Dialect { Paho, Gmqtt, Standard };

std::string_view to_string(Dialect d);
Dialect dialect_from_string(std::string_view s);

struct PayloadPart {
    std::string label;
    /// None for label-only parts.
    Value value;

    friend bool operator==(const PayloadPart&, const PayloadPart&) = default;
};

/// Normalized publish content.
struct MessageEnvelope {
    std::string command = "PUBLISH";
    bool dup = false;
    int qos = 0;
    bool retain = false;
    std::int64_t remaining_len = 0;
    std::int64_t topic_len = 0;
    std::string topic;
    std::int64_t mid = 0;
    std::vector<std::string> properties;
    std::vector<PayloadPart> payload_parts;
    /// Dialect-specific fields (Paho: pos, to_process).
    Record extras;

    friend bool operator==(const MessageEnvelope&, const MessageEnvelope&) = default;
};

class MalformedEnvelope : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bytes on the wire for a fixed header plus `remaining_len` bytes.
std::int64_t mqtt_packet_length(std::int64_t remaining_len);

/// Checks qos range and topic_len coherence; throws MalformedEnvelope.
void validate(const MessageEnvelope& env);

Value render(const MessageEnvelope& env, Dialect dialect);
MessageEnvelope parse(const Value& message, Dialect dialect);

/// Payload rendering shared by the dialects: a tuple of labels when no part
/// carries a value, otherwise a record.
Value render_payload(const std::vector<PayloadPart>& parts);
std::vector<PayloadPart> parse_payload(const Value& payload);

}  // namespace gw::interop
