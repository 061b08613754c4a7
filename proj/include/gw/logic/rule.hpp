#pragma once

#include <compare>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace gw::logic {

enum class Direction : char { Greater = '>', Less = '<' };

struct SensorKey {
    std::string device;
    std::string sensor;

    friend auto operator<=>(const SensorKey&, const SensorKey&) = default;
};

/// Dual-modal actuator rule ((actuators), slope, (reference, trend),
/// (goal, direction)) bound to an independent and a dependent sensor.
struct Rule {
    std::vector<int> actuators;
    /// Dependent units per independent unit; always > 0.
    double slope = 0.0;
    double reference = 0.0;
    Direction trend = Direction::Greater;
    double goal = 0.0;
    Direction direction = Direction::Less;
    SensorKey independent;
    SensorKey dependent;

    friend bool operator==(const Rule&, const Rule&) = default;
};

/// "((1), 0.004, (1000, '>'), (21, '<'))"
std::string repr(const Rule& rule);

enum class Effect { Raises, Lowers };

struct Actuator {
    int id;
    std::string name;
    Effect effect;
};

/// Fixture numbering: 1 heater, 2 reserved, 3 cooler.
const std::vector<Actuator>& default_actuators();

struct TraceEndpoints {
    double indep_start;
    double indep_end;
    double dep_start;
    double dep_goal;
};

class DegenerateTrace : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NoMatchingActuator : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class MissingReading : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Learns the slope |dep_goal - dep_start| / |indep_start - indep_end| and
/// picks the first candidate whose effect moves the dependent sensor toward
/// the goal.
Rule learn_rule(const TraceEndpoints& trace, const std::vector<Actuator>& candidates,
                Direction goal_direction, SensorKey independent, SensorKey dependent);

/// Ordered actuator name -> on/off map.
class ActuatorStateMap {
public:
    explicit ActuatorStateMap(const std::vector<Actuator>& actuators);

    bool at(const std::string& name) const;
    void set(const std::string& name, bool on);
    const std::vector<std::pair<std::string, bool>>& entries() const { return entries_; }

    friend bool operator==(const ActuatorStateMap&, const ActuatorStateMap&) = default;

private:
    std::vector<std::pair<std::string, bool>> entries_;
};

/// "{'heater': False, 'cooler': False}"
std::string repr(const ActuatorStateMap& state);

/// An actuator fires when its goal deficit is positive and the independent
/// reading is within deficit / slope. Reserved ids are skipped; several
/// rules on one actuator are OR-ed.
ActuatorStateMap evaluate_rules(const std::vector<Rule>& rules,
                                const std::map<SensorKey, double>& readings,
                                const std::vector<Actuator>& actuators = default_actuators());

/// Threshold on the independent reading below which `rule` fires for a
/// dependent reading `dep`; negative when the deficit is not positive.
double firing_threshold(const Rule& rule, double dep);

struct RuleKey {
    SensorKey independent;
    SensorKey dependent;

    friend auto operator<=>(const RuleKey&, const RuleKey&) = default;
};

/// Exact-key rule storage; structurally equal rules are stored once.
class RuleStore {
public:
    RuleStore() = default;
    RuleStore(RuleStore&& other) noexcept : rules_(std::move(other.rules_)) {}
    RuleStore& operator=(RuleStore&& other) noexcept {
        std::scoped_lock lock(mutex_, other.mutex_);
        rules_ = std::move(other.rules_);
        return *this;
    }

    void store(const Rule& rule);
    std::vector<Rule> find(const RuleKey& key) const;
    std::size_t size() const;

    nlohmann::json to_json() const;
    static RuleStore from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static RuleStore load(const std::string& path);

private:
    mutable std::mutex mutex_;
    std::map<RuleKey, std::vector<Rule>> rules_;
};

}  // namespace gw::logic
