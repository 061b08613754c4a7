#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "gw/logic/rule.hpp"

using namespace gw::logic;

namespace {

const SensorKey kPos{"phone", "pos"};
const SensorKey kTemp{"living_room", "temp"};

Rule heater_rule() {
    return learn_rule({1000, 0, 17, 21}, default_actuators(), Direction::Less, kPos, kTemp);
}

Rule cooler_rule() {
    return learn_rule({1000, 0, 25, 21}, default_actuators(), Direction::Greater, kPos, kTemp);
}

std::map<SensorKey, double> readings(double p, double t) { return {{kPos, p}, {kTemp, t}}; }

// Hand oracle for the firing predicate.
bool oracle_fires(double goal, char dir, double k, double p, double t) {
    double deficit = dir == '<' ? goal - t : t - goal;
    return deficit > 0 && p <= deficit / k;
}

}  // namespace

TEST_CASE("learned rules match the scenario programs") {
    Rule h = heater_rule();
    CHECK(h.actuators == std::vector<int>{1});
    CHECK(std::fabs(h.slope - 0.004) < 1e-12);
    CHECK(h.reference == 1000);
    CHECK(h.trend == Direction::Greater);
    CHECK(h.goal == 21);
    CHECK(h.direction == Direction::Less);
    CHECK(repr(h) == "((1), 0.004, (1000, '>'), (21, '<'))");

    Rule c = cooler_rule();
    CHECK(c.actuators == std::vector<int>{3});
    CHECK(std::fabs(c.slope - 0.004) < 1e-12);
    CHECK(repr(c) == "((3), 0.004, (1000, '>'), (21, '>'))");
}

TEST_CASE("learn_rule errors") {
    CHECK_THROWS_AS(learn_rule({5, 5, 17, 21}, default_actuators(), Direction::Less, kPos, kTemp),
                    DegenerateTrace);
    std::vector<Actuator> heaters_only{{1, "heater", Effect::Raises}};
    CHECK_THROWS_AS(learn_rule({1000, 0, 25, 21}, heaters_only, Direction::Greater, kPos, kTemp),
                    NoMatchingActuator);
    CHECK_THROWS_AS(learn_rule({1000, 0, 17, 21}, default_actuators(), Direction::Greater, kPos, kTemp),
                    NoMatchingActuator);
    Rule rising = learn_rule({0, 200, 17, 21}, default_actuators(), Direction::Less, kPos, kTemp);
    CHECK(rising.trend == Direction::Less);
    CHECK(rising.slope == doctest::Approx(0.02));
}

TEST_CASE("evaluation on the witness readings") {
    std::vector<Rule> rules{heater_rule(), cooler_rule()};
    CHECK(repr(evaluate_rules(rules, readings(1500, 19))) == "{'heater': False, 'cooler': False}");
    CHECK(repr(evaluate_rules(rules, readings(400, 19))) == "{'heater': True, 'cooler': False}");
    CHECK(repr(evaluate_rules(rules, readings(0, 23))) == "{'heater': False, 'cooler': True}");

    CHECK_THROWS_AS(evaluate_rules(rules, {{kPos, 1.0}}), MissingReading);
    CHECK_THROWS_AS(evaluate_rules(rules, {{kTemp, 1.0}}), MissingReading);

    auto none = evaluate_rules({}, {});
    CHECK(none.at("heater") == false);
    CHECK(none.at("cooler") == false);
}

TEST_CASE("closed firing threshold") {
    std::vector<Rule> rules{heater_rule()};
    double t = 19;
    double limit = (21 - t) / rules[0].slope;
    CHECK(evaluate_rules(rules, readings(limit, t)).at("heater"));
    CHECK_FALSE(evaluate_rules(rules, readings(limit + 1e-9, t)).at("heater"));
    // No deficit, no firing, even at p = 0.
    CHECK_FALSE(evaluate_rules(rules, readings(0, 21)).at("heater"));
}

TEST_CASE("evaluation agrees with the hand oracle; monotone; mutually exclusive") {
    std::vector<Rule> rules{heater_rule(), cooler_rule()};
    for (double t = 10; t <= 32; t += 0.25) {
        bool heater_on = false, cooler_on = false;
        for (double p = 2000; p >= 0; p -= 12.5) {
            auto s = evaluate_rules(rules, readings(p, t));
            CHECK(s.at("heater") == oracle_fires(21, '<', 0.004, p, t));
            CHECK(s.at("cooler") == oracle_fires(21, '>', 0.004, p, t));
            CHECK_FALSE((s.at("heater") && s.at("cooler")));
            // p decreases along the sweep: once on, stays on.
            if (heater_on) CHECK(s.at("heater"));
            if (cooler_on) CHECK(s.at("cooler"));
            heater_on = s.at("heater");
            cooler_on = s.at("cooler");
        }
    }

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pd(0, 3000), td(0, 40);
    for (int i = 0; i < 2000; ++i) {
        double p = pd(rng), t = td(rng);
        auto s = evaluate_rules(rules, readings(p, t));
        if (s.at("heater")) CHECK(evaluate_rules(rules, readings(p * 0.5, t)).at("heater"));
        if (s.at("cooler")) CHECK(evaluate_rules(rules, readings(p * 0.5, t)).at("cooler"));
    }
}

TEST_CASE("two rules on one actuator are OR-ed") {
    Rule near = heater_rule();
    Rule far = near;
    far.slope = 0.001;
    auto s = evaluate_rules({near, far}, readings(1500, 19));
    CHECK(s.at("heater"));  // 2 / 0.001 = 2000 >= 1500
}

TEST_CASE("rule store") {
    RuleStore store;
    store.store(heater_rule());
    store.store(cooler_rule());
    store.store(heater_rule());
    CHECK(store.size() == 2);

    auto found = store.find({kPos, kTemp});
    REQUIRE(found.size() == 2);
    CHECK(found[0] == heater_rule());
    CHECK(found[1] == cooler_rule());
    CHECK(store.find({{"phone", "x"}, kTemp}).empty());
    CHECK(store.find({kTemp, kPos}).empty());

    auto path = std::filesystem::temp_directory_path() / "gw_rules_test.json";
    store.save(path.string());
    RuleStore loaded = RuleStore::load(path.string());
    std::filesystem::remove(path);
    CHECK(loaded.find({kPos, kTemp}) == found);

    auto bad = nlohmann::json::parse(R"([{"independent":{"device":"a","sensor":"b"},
        "dependent":{"device":"c","sensor":"d"},
        "rules":[{"actuators":[1],"slope":0,"reference":{"value":1,"trend":">"},
                  "goal":{"value":1,"direction":"<"}}]}])");
    CHECK_THROWS_AS(RuleStore::from_json(bad), std::invalid_argument);
    bad[0]["rules"][0]["slope"] = 1;
    bad[0]["rules"][0]["goal"]["direction"] = "=";
    CHECK_THROWS_AS(RuleStore::from_json(bad), std::invalid_argument);
}
