#include "gw/logic/rule.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

namespace gw::logic {
namespace {

std::string number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

Direction direction_from(const std::string& s) {
    if (s == ">") return Direction::Greater;
    if (s == "<") return Direction::Less;
    throw std::invalid_argument("direction must be '>' or '<', got '" + s + "'");
}

nlohmann::json key_json(const SensorKey& k) { return {{"device", k.device}, {"sensor", k.sensor}}; }

SensorKey key_from(const nlohmann::json& j) {
    return {j.at("device").get<std::string>(), j.at("sensor").get<std::string>()};
}

std::string key_name(const SensorKey& k) { return k.device + "." + k.sensor; }

}  // namespace

std::string repr(const Rule& rule) {
    std::string acts = "(";
    for (std::size_t i = 0; i < rule.actuators.size(); ++i) {
        if (i > 0) acts += ", ";
        acts += std::to_string(rule.actuators[i]);
    }
    acts += ")";
    return "(" + acts + ", " + number(rule.slope) + ", (" + number(rule.reference) + ", '" +
           static_cast<char>(rule.trend) + "'), (" + number(rule.goal) + ", '" +
           static_cast<char>(rule.direction) + "'))";
}

const std::vector<Actuator>& default_actuators() {
    static const std::vector<Actuator> actuators{
        {1, "heater", Effect::Raises},
        {3, "cooler", Effect::Lowers},
    };
    return actuators;
}

Rule learn_rule(const TraceEndpoints& trace, const std::vector<Actuator>& candidates,
                Direction goal_direction, SensorKey independent, SensorKey dependent) {
    double span = std::fabs(trace.indep_start - trace.indep_end);
    if (span == 0.0) {
        throw DegenerateTrace("independent sensor does not move between trace endpoints");
    }
    double rise = std::fabs(trace.dep_goal - trace.dep_start);
    if (rise == 0.0) {
        throw DegenerateTrace("dependent sensor already sits at the goal");
    }
    // '<' means the dependent reading lies below the goal, so it must rise.
    Effect needed = goal_direction == Direction::Less ? Effect::Raises : Effect::Lowers;
    bool trace_rises = trace.dep_goal > trace.dep_start;
    if (trace_rises != (needed == Effect::Raises)) {
        throw NoMatchingActuator("goal direction contradicts the trace");
    }
    auto it = std::find_if(candidates.begin(), candidates.end(),
                           [&](const Actuator& a) { return a.effect == needed; });
    if (it == candidates.end()) {
        throw NoMatchingActuator("no candidate actuator moves the dependent sensor toward the goal");
    }

    Rule rule;
    rule.actuators = {it->id};
    rule.slope = rise / span;
    rule.reference = trace.indep_start;
    rule.trend = trace.indep_start > trace.indep_end ? Direction::Greater : Direction::Less;
    rule.goal = trace.dep_goal;
    rule.direction = goal_direction;
    rule.independent = std::move(independent);
    rule.dependent = std::move(dependent);
    return rule;
}

ActuatorStateMap::ActuatorStateMap(const std::vector<Actuator>& actuators) {
    for (const auto& a : actuators) entries_.emplace_back(a.name, false);
}

bool ActuatorStateMap::at(const std::string& name) const {
    for (const auto& [n, on] : entries_) {
        if (n == name) return on;
    }
    throw std::out_of_range("unknown actuator " + name);
}

void ActuatorStateMap::set(const std::string& name, bool on) {
    for (auto& [n, state] : entries_) {
        if (n == name) {
            state = on;
            return;
        }
    }
    throw std::out_of_range("unknown actuator " + name);
}

std::string repr(const ActuatorStateMap& state) {
    std::string s = "{";
    bool first = true;
    for (const auto& [name, on] : state.entries()) {
        if (!first) s += ", ";
        first = false;
        s += "'" + name + "': " + (on ? "True" : "False");
    }
    return s + "}";
}

double firing_threshold(const Rule& rule, double dep) {
    double deficit = rule.direction == Direction::Less ? rule.goal - dep : dep - rule.goal;
    if (deficit <= 0.0) {
        return -1.0;
    }
    return deficit / rule.slope;
}

ActuatorStateMap evaluate_rules(const std::vector<Rule>& rules,
                                const std::map<SensorKey, double>& readings,
                                const std::vector<Actuator>& actuators) {
    ActuatorStateMap state(actuators);
    for (const auto& rule : rules) {
        auto p = readings.find(rule.independent);
        auto t = readings.find(rule.dependent);
        if (p == readings.end()) throw MissingReading("no reading for " + key_name(rule.independent));
        if (t == readings.end()) throw MissingReading("no reading for " + key_name(rule.dependent));

        double threshold = firing_threshold(rule, t->second);
        bool fires = threshold >= 0.0 && p->second <= threshold;
        if (!fires) continue;
        for (int id : rule.actuators) {
            for (const auto& a : actuators) {
                if (a.id == id) state.set(a.name, true);
            }
        }
    }
    return state;
}

void RuleStore::store(const Rule& rule) {
    if (!(rule.slope > 0.0)) {
        throw std::invalid_argument("rule slope must be positive");
    }
    std::lock_guard lock(mutex_);
    auto& bucket = rules_[{rule.independent, rule.dependent}];
    if (std::find(bucket.begin(), bucket.end(), rule) == bucket.end()) {
        bucket.push_back(rule);
    }
}

std::vector<Rule> RuleStore::find(const RuleKey& key) const {
    std::lock_guard lock(mutex_);
    auto it = rules_.find(key);
    return it == rules_.end() ? std::vector<Rule>{} : it->second;
}

std::size_t RuleStore::size() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& [k, v] : rules_) n += v.size();
    return n;
}

nlohmann::json RuleStore::to_json() const {
    std::lock_guard lock(mutex_);
    auto out = nlohmann::json::array();
    for (const auto& [key, rules] : rules_) {
        auto arr = nlohmann::json::array();
        for (const auto& r : rules) {
            arr.push_back({
                {"actuators", r.actuators},
                {"slope", r.slope},
                {"reference", {{"value", r.reference}, {"trend", std::string(1, static_cast<char>(r.trend))}}},
                {"goal", {{"value", r.goal}, {"direction", std::string(1, static_cast<char>(r.direction))}}},
            });
        }
        out.push_back({{"independent", key_json(key.independent)},
                       {"dependent", key_json(key.dependent)},
                       {"rules", arr}});
    }
    return out;
}

RuleStore RuleStore::from_json(const nlohmann::json& j) {
    if (!j.is_array()) {
        throw std::invalid_argument("rule file must hold a JSON array");
    }
    RuleStore store;
    for (const auto& entry : j) {
        SensorKey indep = key_from(entry.at("independent"));
        SensorKey dep = key_from(entry.at("dependent"));
        for (const auto& r : entry.at("rules")) {
            Rule rule;
            rule.actuators = r.at("actuators").get<std::vector<int>>();
            rule.slope = r.at("slope").get<double>();
            rule.reference = r.at("reference").at("value").get<double>();
            rule.trend = direction_from(r.at("reference").at("trend").get<std::string>());
            rule.goal = r.at("goal").at("value").get<double>();
            rule.direction = direction_from(r.at("goal").at("direction").get<std::string>());
            rule.independent = indep;
            rule.dependent = dep;
            store.store(rule);
        }
    }
    return store;
}

void RuleStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write rule file " + path);
    out << to_json().dump(2) << "\n";
}

RuleStore RuleStore::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open rule file " + path);
    return from_json(nlohmann::json::parse(in));
}

}  // namespace gw::logic
