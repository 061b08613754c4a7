#pragma once

#include <vector>

#include "gw/interop/envelope.hpp"
#include "gw/interop/translator.hpp"

namespace fixtures {

using namespace gw::interop;

inline MessageEnvelope envelope(std::string topic, std::int64_t mid, int qos,
                                std::int64_t remaining_len, std::vector<std::string> props,
                                std::vector<PayloadPart> payload) {
    MessageEnvelope env;
    env.qos = qos;
    env.remaining_len = remaining_len;
    env.topic_len = static_cast<std::int64_t>(topic.size());
    env.topic = std::move(topic);
    env.mid = mid;
    env.properties = std::move(props);
    env.payload_parts = std::move(payload);
    return env;
}

/// Paho publish on 'test/paho/1' used for the search-and-run scenario.
inline MessageEnvelope paho_publish() {
    return envelope("test/paho/1", 9012, 1, 4,
                    {"property1", "property2", "property3", "property4"},
                    {{"Payload part 1", {}}, {"Payload part 2", {}}});
}

/// gmqtt publish on 'test/gmqtt/1' used for the search-and-run scenario.
inline MessageEnvelope gmqtt_publish() {
    return envelope("test/gmqtt/1", 3456, 1, 7, {"property1", "property2"},
                    {{"payload part 1", 123}, {"payload part 2", 456}});
}

inline const char* kPahoToGmqttRepr =
    "('PUBLISH', False, 1, False, 4, 11, 'test/paho/1', 9012, (1, ('property1', 'property2', "
    "'property3', 'property4'), ('Payload part 1', 'Payload part 2')))";

inline const char* kGmqttToPahoRepr =
    "{'command': 'PUBLISH', 'qos': 1, 'pos': 0, 'mid': 3456, 'info': (2, 'property1', "
    "'property2'), 'packet': ('PUBLISH', False, 1, False, 7, 12, 'test/gmqtt/1', 3456, "
    "{'payload part 1': 123, 'payload part 2': 456}), 'to_process': 9}";

/// Expected translation outputs, built field by field.
inline Value paho_to_gmqtt_expected() {
    return Value::tuple({"PUBLISH", false, 1, false, 4, 11, "test/paho/1", 9012,
                         Value::tuple({1,
                                       Value::tuple({"property1", "property2", "property3",
                                                     "property4"}),
                                       Value::tuple({"Payload part 1", "Payload part 2"})})});
}

inline Value gmqtt_to_paho_expected() {
    return Value::record({
        {"command", "PUBLISH"},
        {"qos", 1},
        {"pos", 0},
        {"mid", 3456},
        {"info", Value::tuple({2, "property1", "property2"})},
        {"packet", Value::tuple({"PUBLISH", false, 1, false, 7, 12, "test/gmqtt/1", 3456,
                                 Value::record({{"payload part 1", 123},
                                                {"payload part 2", 456}})})},
        {"to_process", 9},
    });
}

/// Learning examples: messages distinct from the search-and-run fixtures.
inline std::vector<gw::dsl::IoExample<Value>> paho_to_gmqtt_examples() {
    std::vector<gw::dsl::IoExample<Value>> out;
    for (const auto& env :
         {envelope("learn/paho/a", 11, 1, 18, {"p1", "p2", "p3"}, {{"part a", {}}}),
          envelope("learn/paho/b", 12, 0, 21, {"p1"}, {{"x", {}}, {"y", {}}})}) {
        out.push_back({{render(env, Dialect::Paho)}, render(env, Dialect::Gmqtt)});
    }
    return out;
}

inline std::vector<gw::dsl::IoExample<Value>> gmqtt_to_paho_examples() {
    std::vector<gw::dsl::IoExample<Value>> out;
    for (const auto& env :
         {envelope("learn/gmqtt/a", 21, 1, 30, {"q1"}, {{"t", 20}, {"h", 40}}),
          envelope("learn/gmqtt/b", 22, 2, 31, {"q1", "q2"}, {{"t", 7}})}) {
        out.push_back({{render(env, Dialect::Gmqtt)}, render(env, Dialect::Paho)});
    }
    return out;
}

}  // namespace fixtures
