#include <random>
#include <thread>

#include "doctest.h"
#include "interop_fixtures.hpp"

using namespace gw::interop;
using gw::dsl::DslProgram;

namespace {

MessageEnvelope random_envelope(std::mt19937& rng) {
    std::uniform_int_distribution<int> qos(0, 2), n(0, 4), val(-1000, 1000), mid(1, 65535);
    std::bernoulli_distribution coin;
    std::string topic = "t/" + std::to_string(val(rng)) + "/x";
    std::vector<std::string> props;
    for (int i = n(rng); i > 0; --i) props.push_back("prop" + std::to_string(i));
    std::vector<PayloadPart> parts;
    bool keyed = coin(rng);
    for (int i = n(rng); i >= 0; --i) {
        parts.push_back({"part " + std::to_string(i), keyed ? Value(val(rng)) : Value()});
    }
    auto env = fixtures::envelope(topic, mid(rng), qos(rng), 2 + topic.size() + 10, props, parts);
    env.dup = coin(rng);
    env.retain = coin(rng);
    return env;
}

MessageEnvelope strip_extras(MessageEnvelope env) {
    env.extras.clear();
    return env;
}

}  // namespace

TEST_CASE("value repr follows Python literal syntax") {
    CHECK(repr(Value::tuple({})) == "()");
    CHECK(repr(Value::tuple({1})) == "(1,)");
    CHECK(repr(Value::tuple({nullptr, true, "it's"})) == "(None, True, \"it's\")");
    CHECK(repr(Value::record({{"a", Value::tuple({1, 2})}})) == "{'a': (1, 2)}");
}

TEST_CASE("value JSON codec keeps key order") {
    Value v = fixtures::gmqtt_to_paho_expected();
    CHECK(from_json(to_json(v)) == v);
    CHECK(to_json(v).dump().rfind("{\"command\":\"PUBLISH\",\"qos\":1,\"pos\":0", 0) == 0);
}

TEST_CASE("registry I") {
    const auto& reg = interop_registry();
    CHECK(reg.functions().size() == 4);
    CHECK(reg.at(kExtractPacket).name == "extract_packet");
    CHECK(reg.at(kPackProperties).name == "pack_properties");
    CHECK(reg.at(kLabelPacket).name == "label_packet");

    SUBCASE("unpack_payload splits keyed payloads") {
        Value paho = render(fixtures::gmqtt_publish(), Dialect::Paho);
        Value out = gw::dsl::evaluate(reg, DslProgram{"I", {kUnpackPayload}}, paho);
        const Tuple& packet = out.find("packet")->as_tuple();
        CHECK(repr(packet.back()) == "(('payload part 1', 123), ('payload part 2', 456))");
    }
    SUBCASE("structural mismatch aborts at the failing stage") {
        Value paho = render(fixtures::paho_publish(), Dialect::Paho);
        try {
            gw::dsl::evaluate(reg, DslProgram{"I", {kExtractPacket, kLabelPacket}}, paho);
            FAIL("expected KindMismatch");
        } catch (const gw::dsl::KindMismatch& e) {
            CHECK(e.stage() == 1);
        }
    }
}

TEST_CASE("learn_translation reproduces the learned programs") {
    Translator tr;
    auto p2g = fixtures::paho_to_gmqtt_examples();
    auto g2p = fixtures::gmqtt_to_paho_examples();
    CHECK(tr.learn_translation(p2g, Dialect::Paho, Dialect::Gmqtt).program ==
          DslProgram{"I", {kExtractPacket, kPackProperties}});
    CHECK(tr.learn_translation(g2p, Dialect::Gmqtt, Dialect::Paho).program ==
          DslProgram{"I", {kLabelPacket}});

    std::vector<gw::dsl::IoExample<Value>> same;
    for (const auto& ex : p2g) same.push_back({ex.input, ex.input.front()});
    CHECK(tr.learn_translation(same, Dialect::Paho, Dialect::Paho).program.stages.empty());

    std::vector<gw::dsl::IoExample<Value>> impossible{{{Value(1)}, Value(2)}};
    CHECK_THROWS_AS(tr.learn_translation(impossible, Dialect::Paho, Dialect::Standard),
                    TranslationNotFound);
}

TEST_CASE("translate reproduces the search-and-run outputs") {
    Translator tr;
    tr.learn_translation(fixtures::paho_to_gmqtt_examples(), Dialect::Paho, Dialect::Gmqtt);
    tr.learn_translation(fixtures::gmqtt_to_paho_examples(), Dialect::Gmqtt, Dialect::Paho);
    auto runs = tr.synthesis_runs();

    Value out1 = tr.translate(render(fixtures::paho_publish(), Dialect::Paho), Dialect::Paho,
                              Dialect::Gmqtt);
    CHECK(out1 == fixtures::paho_to_gmqtt_expected());
    CHECK(repr(out1) == fixtures::kPahoToGmqttRepr);

    Value out2 = tr.translate(render(fixtures::gmqtt_publish(), Dialect::Gmqtt), Dialect::Gmqtt,
                              Dialect::Paho);
    CHECK(out2 == fixtures::gmqtt_to_paho_expected());
    CHECK(repr(out2) == fixtures::kGmqttToPahoRepr);

    // Cached programs only; no synthesis on the translate path.
    CHECK(tr.synthesis_runs() == runs);

    Value m = render(fixtures::paho_publish(), Dialect::Paho);
    CHECK(tr.translate(m, Dialect::Paho, Dialect::Paho) == m);
    CHECK_THROWS_AS(tr.translate(m, Dialect::Paho, Dialect::Standard), NoProgram);
}

TEST_CASE("translation preserves semantics on random messages") {
    Translator tr;
    tr.learn_translation(fixtures::paho_to_gmqtt_examples(), Dialect::Paho, Dialect::Gmqtt);
    tr.learn_translation(fixtures::gmqtt_to_paho_examples(), Dialect::Gmqtt, Dialect::Paho);

    std::mt19937 rng(5);
    for (int i = 0; i < 300; ++i) {
        auto env = random_envelope(rng);
        Value paho = render(env, Dialect::Paho);
        Value gm = tr.translate(paho, Dialect::Paho, Dialect::Gmqtt);
        auto back = parse(gm, Dialect::Gmqtt);
        CHECK(back.topic == env.topic);
        CHECK(back.qos == env.qos);
        CHECK(back.mid == env.mid);
        CHECK(back.payload_parts == env.payload_parts);
        CHECK(strip_extras(back) == strip_extras(env));

        // Composition: P -> G -> P is the identity on Paho messages.
        CHECK(tr.translate(gm, Dialect::Gmqtt, Dialect::Paho) == paho);
        CHECK(strip_extras(parse(tr.translate(gm, Dialect::Gmqtt, Dialect::Paho),
                                 Dialect::Paho)) == strip_extras(env));
    }
}

TEST_CASE("concurrent translate readers") {
    Translator tr;
    tr.learn_translation(fixtures::gmqtt_to_paho_examples(), Dialect::Gmqtt, Dialect::Paho);
    Value in = render(fixtures::gmqtt_publish(), Dialect::Gmqtt);
    std::vector<std::thread> threads;
    std::atomic<int> ok{0};
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 200; ++i) {
                if (tr.translate(in, Dialect::Gmqtt, Dialect::Paho) ==
                    fixtures::gmqtt_to_paho_expected()) {
                    ++ok;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    CHECK(ok == 800);
}

TEST_CASE("envelope dialects") {
    auto env = fixtures::gmqtt_publish();
    for (Dialect d : {Dialect::Paho, Dialect::Gmqtt, Dialect::Standard}) {
        CHECK(strip_extras(parse(render(env, d), d)) == env);
    }
    auto bad = env;
    bad.qos = 3;
    CHECK_THROWS_AS(render(bad, Dialect::Gmqtt), MalformedEnvelope);
    bad = env;
    bad.topic_len = 3;
    CHECK_THROWS_AS(validate(bad), MalformedEnvelope);
    CHECK_THROWS_AS(parse(Value(1), Dialect::Paho), MalformedEnvelope);
    CHECK(mqtt_packet_length(7) == 9);
    CHECK(mqtt_packet_length(200) == 203);
}
