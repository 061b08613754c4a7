#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace gw::context {

/// Seconds since the Unix epoch (UTC).
struct Timestamp {
    double seconds = 0.0;

    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

/// "2018-05-20T10:00:00"; fractional seconds are truncated.
std::string to_iso(Timestamp t);
/// Accepts "YYYY-MM-DDTHH:MM:SS" (or a space separator); throws
/// std::invalid_argument otherwise.
Timestamp parse_iso(const std::string& text);
std::optional<Timestamp> try_parse_iso(const std::string& text);

using AttrValue = std::variant<double, std::string, Timestamp>;

enum class AttrType { Number, String, Time };

AttrType type_of(const AttrValue& v);
std::string_view to_string(AttrType t);

struct AttributeAggregate {
    std::size_t count = 0;
    /// Population std for numbers (units) and times (seconds); for strings
    /// the share of members that differ from the modal value.
    double std = 0.0;
    /// Mean, mean instant, or modal string.
    AttrValue representative;
};

/// Brute-force aggregate over one attribute's member values, which must all
/// share a type. Throws std::invalid_argument on an empty or mixed list.
AttributeAggregate aggregate(const std::vector<AttrValue>& values);

struct SensorObservation {
    std::string name;
    std::vector<std::pair<std::string, AttrValue>> values;

    const AttrValue* find(const std::string& key) const;
    friend bool operator==(const SensorObservation&, const SensorObservation&) = default;
};

class ContextError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A statistical sensor grouping. Raw member values are kept so that the
/// aggregates are always recomputed exactly.
class Context {
public:
    struct Attribute {
        std::string key;
        AttrType type;
        std::vector<AttrValue> values;

        friend bool operator==(const Attribute&, const Attribute&) = default;
    };

    Context(std::string id, std::string identifying_key, std::vector<std::string> members,
            std::vector<Attribute> attributes);

    /// Builds a context from its member observations; attributes follow the
    /// first member's key order.
    static Context from_members(std::string id, std::string identifying_key,
                                const std::vector<SensorObservation>& members);

    const std::string& id() const { return id_; }
    const std::string& identifying_key() const { return identifying_key_; }
    const std::vector<std::string>& members() const { return members_; }
    const std::vector<Attribute>& attributes() const { return attributes_; }
    const Attribute* attribute(const std::string& key) const;

    std::optional<AttributeAggregate> aggregate_of(const std::string& key) const;
    std::vector<std::pair<std::string, AttributeAggregate>> aggregates() const;

    bool has_member(const std::string& name) const;
    /// Appends the sensor and every value whose key and type match a context
    /// attribute. Already-present members are left alone.
    void add(const SensorObservation& sensor);

    friend bool operator==(const Context&, const Context&) = default;

private:
    void check() const;

    std::string id_;
    std::string identifying_key_;
    std::vector<std::string> members_;
    std::vector<Attribute> attributes_;
};

using ContextSet = std::vector<Context>;

/// Python-style rendering:
/// {'c1': ('loc', {'loc': (2, 0.0, 'Kista'), ...}, ('sensor1', 'sensor101'))}
std::string repr(const ContextSet& contexts);
std::string repr(const AttrValue& v);

nlohmann::ordered_json to_json(const Context& c);
Context context_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const ContextSet& contexts);
ContextSet contexts_from_json(const nlohmann::ordered_json& j);

/// Sensor values: numbers stay numbers, ISO date-time strings become times,
/// other strings stay strings.
nlohmann::ordered_json to_json(const SensorObservation& s);
SensorObservation sensor_from_json(const nlohmann::ordered_json& j);

ContextSet load_contexts(const std::string& path);
void save_contexts(const ContextSet& contexts, const std::string& path);

}  // namespace gw::context
