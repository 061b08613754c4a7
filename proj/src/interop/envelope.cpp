#include "gw/interop/envelope.hpp"

namespace gw::interop {
namespace {

const Value& member(const Value& record, const std::string& key) {
    const Value* v = record.find(key);
    if (v == nullptr) {
        throw MalformedEnvelope("missing field '" + key + "'");
    }
    return *v;
}

std::int64_t int_of(const Value& v, const char* what) {
    if (!v.is_int()) {
        throw MalformedEnvelope(std::string(what) + " must be an integer");
    }
    return v.as_int();
}

bool bool_of(const Value& v, const char* what) {
    if (!v.is_bool()) {
        throw MalformedEnvelope(std::string(what) + " must be a boolean");
    }
    return v.as_bool();
}

const std::string& str_of(const Value& v, const char* what) {
    if (!v.is_string()) {
        throw MalformedEnvelope(std::string(what) + " must be a string");
    }
    return v.as_string();
}

std::vector<std::string> strings_of(const Tuple& t, std::size_t from, const char* what) {
    std::vector<std::string> out;
    for (std::size_t i = from; i < t.size(); ++i) {
        out.push_back(str_of(t[i], what));
    }
    return out;
}

Tuple header(const MessageEnvelope& env) {
    return {env.command, env.dup, static_cast<std::int64_t>(env.qos), env.retain,
            env.remaining_len, env.topic_len, env.topic, env.mid};
}

void read_header(const Tuple& t, MessageEnvelope& env) {
    if (t.size() < 8) {
        throw MalformedEnvelope("packet sequence shorter than 8 header fields");
    }
    env.command = str_of(t[0], "command");
    env.dup = bool_of(t[1], "dup");
    env.qos = static_cast<int>(int_of(t[2], "qos"));
    env.retain = bool_of(t[3], "retain");
    env.remaining_len = int_of(t[4], "remaining_len");
    env.topic_len = int_of(t[5], "topic_len");
    env.topic = str_of(t[6], "topic");
    env.mid = int_of(t[7], "mid");
}

Tuple string_tuple(const std::vector<std::string>& xs) {
    Tuple t;
    for (const auto& x : xs) t.emplace_back(x);
    return t;
}

}  // namespace

std::string_view to_string(Dialect d) {
    switch (d) {
        case Dialect::Paho: return "paho";
        case Dialect::Gmqtt: return "gmqtt";
        case Dialect::Standard: return "standard";
    }
    return "?";
}

Dialect dialect_from_string(std::string_view s) {
    if (s == "paho" || s == "P") return Dialect::Paho;
    if (s == "gmqtt" || s == "G") return Dialect::Gmqtt;
    if (s == "standard") return Dialect::Standard;
    throw std::invalid_argument("unknown dialect '" + std::string(s) + "'");
}

std::int64_t mqtt_packet_length(std::int64_t remaining_len) {
    std::int64_t len_bytes = 1;
    for (std::int64_t r = remaining_len; r > 127; r /= 128) {
        ++len_bytes;
    }
    return 1 + len_bytes + remaining_len;
}

void validate(const MessageEnvelope& env) {
    if (env.qos < 0 || env.qos > 2) {
        throw MalformedEnvelope("qos must be 0, 1 or 2");
    }
    if (!env.topic.empty() && env.topic_len != static_cast<std::int64_t>(env.topic.size())) {
        throw MalformedEnvelope("topic_len does not match the topic's byte length");
    }
}

Value render_payload(const std::vector<PayloadPart>& parts) {
    bool labels_only = true;
    for (const auto& p : parts) {
        if (!p.value.is_none()) labels_only = false;
    }
    if (labels_only) {
        Tuple t;
        for (const auto& p : parts) t.emplace_back(p.label);
        return t;
    }
    Record r;
    for (const auto& p : parts) r.emplace_back(p.label, p.value);
    return r;
}

std::vector<PayloadPart> parse_payload(const Value& payload) {
    std::vector<PayloadPart> parts;
    if (payload.is_tuple()) {
        for (const auto& e : payload.as_tuple()) parts.push_back({str_of(e, "payload label"), {}});
    } else if (payload.is_record()) {
        for (const auto& [k, v] : payload.as_record()) parts.push_back({k, v});
    } else {
        throw MalformedEnvelope("payload must be a tuple of labels or a record");
    }
    return parts;
}

Value render(const MessageEnvelope& env, Dialect dialect) {
    validate(env);
    switch (dialect) {
        case Dialect::Paho: {
            Tuple info{static_cast<std::int64_t>(env.properties.size())};
            for (const auto& p : env.properties) info.emplace_back(p);
            Tuple packet = header(env);
            packet.push_back(render_payload(env.payload_parts));
            const Value extras(env.extras);
            const Value* pos = extras.find("pos");
            const Value* todo = extras.find("to_process");
            return Record{
                {"command", env.command},
                {"qos", static_cast<std::int64_t>(env.qos)},
                {"pos", pos ? *pos : Value(0)},
                {"mid", env.mid},
                {"info", info},
                {"packet", packet},
                {"to_process", todo ? *todo : Value(mqtt_packet_length(env.remaining_len))},
            };
        }
        case Dialect::Gmqtt: {
            Tuple seq = header(env);
            seq.push_back(Tuple{static_cast<std::int64_t>(env.qos), string_tuple(env.properties),
                                render_payload(env.payload_parts)});
            return seq;
        }
        case Dialect::Standard: {
            Record r{
                {"command", env.command},
                {"dup", env.dup},
                {"qos", static_cast<std::int64_t>(env.qos)},
                {"retain", env.retain},
                {"remaining_len", env.remaining_len},
                {"topic_len", env.topic_len},
                {"topic", env.topic},
                {"mid", env.mid},
                {"properties", string_tuple(env.properties)},
                {"payload", render_payload(env.payload_parts)},
            };
            for (const auto& kv : env.extras) r.push_back(kv);
            return r;
        }
    }
    throw MalformedEnvelope("unknown dialect");
}

MessageEnvelope parse(const Value& message, Dialect dialect) {
    MessageEnvelope env;
    switch (dialect) {
        case Dialect::Paho: {
            if (!message.is_record()) throw MalformedEnvelope("paho messages are records");
            const Value& packet = member(message, "packet");
            if (!packet.is_tuple() || packet.as_tuple().size() != 9) {
                throw MalformedEnvelope("'packet' must be a 9-element sequence");
            }
            read_header(packet.as_tuple(), env);
            env.payload_parts = parse_payload(packet.as_tuple()[8]);
            const Value& info = member(message, "info");
            if (!info.is_tuple() || info.as_tuple().empty()) {
                throw MalformedEnvelope("'info' must be (count, properties...)");
            }
            env.properties = strings_of(info.as_tuple(), 1, "property");
            if (int_of(info.as_tuple()[0], "info count") !=
                static_cast<std::int64_t>(env.properties.size())) {
                throw MalformedEnvelope("'info' count disagrees with its properties");
            }
            env.extras = {{"pos", member(message, "pos")},
                          {"to_process", member(message, "to_process")}};
            break;
        }
        case Dialect::Gmqtt: {
            if (!message.is_tuple() || message.as_tuple().size() != 9) {
                throw MalformedEnvelope("gmqtt messages are 9-element sequences");
            }
            const Tuple& t = message.as_tuple();
            read_header(t, env);
            const Value& body = t[8];
            if (!body.is_tuple() || body.as_tuple().size() != 3 || !body.as_tuple()[1].is_tuple()) {
                throw MalformedEnvelope("gmqtt body must be (qos, properties, payload)");
            }
            env.properties = strings_of(body.as_tuple()[1].as_tuple(), 0, "property");
            env.payload_parts = parse_payload(body.as_tuple()[2]);
            break;
        }
        case Dialect::Standard: {
            if (!message.is_record()) throw MalformedEnvelope("standard messages are records");
            env.command = str_of(member(message, "command"), "command");
            env.dup = bool_of(member(message, "dup"), "dup");
            env.qos = static_cast<int>(int_of(member(message, "qos"), "qos"));
            env.retain = bool_of(member(message, "retain"), "retain");
            env.remaining_len = int_of(member(message, "remaining_len"), "remaining_len");
            env.topic_len = int_of(member(message, "topic_len"), "topic_len");
            env.topic = str_of(member(message, "topic"), "topic");
            env.mid = int_of(member(message, "mid"), "mid");
            const Value& props = member(message, "properties");
            if (!props.is_tuple()) throw MalformedEnvelope("'properties' must be a sequence");
            env.properties = strings_of(props.as_tuple(), 0, "property");
            env.payload_parts = parse_payload(member(message, "payload"));
            static const char* known[] = {"command", "dup", "qos", "retain", "remaining_len",
                                          "topic_len", "topic", "mid", "properties", "payload"};
            for (const auto& [k, v] : message.as_record()) {
                bool is_known = false;
                for (const char* name : known) is_known = is_known || k == name;
                if (!is_known) env.extras.emplace_back(k, v);
            }
            break;
        }
    }
    validate(env);
    return env;
}

}  // namespace gw::interop
