#include "gw/context/context.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>

namespace gw::context {
namespace {

std::string py_float(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, end);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string py_str(const std::string& s) {
    char q = s.find('\'') != std::string::npos && s.find('"') == std::string::npos ? '"' : '\'';
    std::string out(1, q);
    for (char c : s) {
        if (c == '\\' || c == q) out += '\\';
        out += c;
    }
    return out + q;
}

double as_seconds(const AttrValue& v) {
    return type_of(v) == AttrType::Time ? std::get<Timestamp>(v).seconds : std::get<double>(v);
}

AttrType type_from(const std::string& s) {
    if (s == "number") return AttrType::Number;
    if (s == "string") return AttrType::String;
    if (s == "time") return AttrType::Time;
    throw ContextError("unknown attribute type '" + s + "'");
}

nlohmann::ordered_json value_json(const AttrValue& v) {
    switch (type_of(v)) {
        case AttrType::Number: return std::get<double>(v);
        case AttrType::String: return std::get<std::string>(v);
        case AttrType::Time: return to_iso(std::get<Timestamp>(v));
    }
    return nullptr;
}

AttrValue value_from(const nlohmann::ordered_json& j, AttrType t) {
    switch (t) {
        case AttrType::Number:
            if (!j.is_number()) throw ContextError("expected a number, got " + j.dump());
            return j.get<double>();
        case AttrType::String:
            if (!j.is_string()) throw ContextError("expected a string, got " + j.dump());
            return j.get<std::string>();
        case AttrType::Time:
            if (!j.is_string()) throw ContextError("expected a date-time, got " + j.dump());
            return parse_iso(j.get<std::string>());
    }
    return 0.0;
}

}  // namespace

std::string to_iso(Timestamp t) {
    auto secs = static_cast<std::time_t>(std::floor(t.seconds));
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    return buf;
}

std::optional<Timestamp> try_parse_iso(const std::string& text) {
    int y, mo, d, h, mi, s;
    char sep;
    int consumed = 0;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &s,
                    &consumed) != 7 ||
        static_cast<std::size_t>(consumed) != text.size() || (sep != 'T' && sep != ' ')) {
        return std::nullopt;
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60 || h < 0 || mi < 0 ||
        s < 0) {
        return std::nullopt;
    }
    std::tm tm{};
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = s;
    return Timestamp{static_cast<double>(timegm(&tm))};
}

Timestamp parse_iso(const std::string& text) {
    if (auto t = try_parse_iso(text)) return *t;
    throw std::invalid_argument("not an ISO date-time: '" + text + "'");
}

AttrType type_of(const AttrValue& v) {
    switch (v.index()) {
        case 0: return AttrType::Number;
        case 1: return AttrType::String;
        default: return AttrType::Time;
    }
}

std::string_view to_string(AttrType t) {
    switch (t) {
        case AttrType::Number: return "number";
        case AttrType::String: return "string";
        case AttrType::Time: return "time";
    }
    return "?";
}

AttributeAggregate aggregate(const std::vector<AttrValue>& values) {
    if (values.empty()) throw std::invalid_argument("aggregate of no values");
    AttrType t = type_of(values.front());
    for (const auto& v : values) {
        if (type_of(v) != t) throw std::invalid_argument("aggregate over mixed attribute types");
    }
    AttributeAggregate agg;
    agg.count = values.size();
    auto n = static_cast<double>(values.size());

    if (t == AttrType::String) {
        // Modal value; ties go to the earliest member.
        std::map<std::string, std::size_t> freq;
        const std::string* best = nullptr;
        std::size_t best_n = 0;
        for (const auto& v : values) {
            const auto& s = std::get<std::string>(v);
            std::size_t c = ++freq[s];
            if (c > best_n) {
                best_n = c;
                best = &s;
            }
        }
        agg.representative = *best;
        agg.std = static_cast<double>(values.size() - best_n) / n;
        return agg;
    }

    double sum = 0.0;
    for (const auto& v : values) sum += as_seconds(v);
    double mean = sum / n;
    double ss = 0.0;
    for (const auto& v : values) {
        double d = as_seconds(v) - mean;
        ss += d * d;
    }
    agg.std = std::sqrt(ss / n);
    if (t == AttrType::Time) {
        agg.representative = Timestamp{mean};
    } else {
        agg.representative = mean;
    }
    return agg;
}

const AttrValue* SensorObservation::find(const std::string& key) const {
    for (const auto& [k, v] : values) {
        if (k == key) return &v;
    }
    return nullptr;
}

Context::Context(std::string id, std::string identifying_key, std::vector<std::string> members,
                 std::vector<Attribute> attributes)
    : id_(std::move(id)),
      identifying_key_(std::move(identifying_key)),
      members_(std::move(members)),
      attributes_(std::move(attributes)) {
    check();
}

void Context::check() const {
    if (id_.empty()) throw ContextError("context id is empty");
    if (members_.empty()) throw ContextError("context " + id_ + " has no members");
    for (const auto& a : attributes_) {
        if (a.values.size() > members_.size()) {
            throw ContextError("context " + id_ + ": attribute " + a.key +
                               " has more values than members");
        }
        for (const auto& v : a.values) {
            if (type_of(v) != a.type) {
                throw ContextError("context " + id_ + ": attribute " + a.key + " mixes types");
            }
        }
    }
}

Context Context::from_members(std::string id, std::string identifying_key,
                              const std::vector<SensorObservation>& members) {
    if (members.empty()) throw ContextError("context " + id + " has no members");
    std::vector<Attribute> attrs;
    for (const auto& [k, v] : members.front().values) attrs.push_back({k, type_of(v), {}});
    std::vector<std::string> names;
    for (const auto& m : members) {
        names.push_back(m.name);
        for (auto& a : attrs) {
            const AttrValue* v = m.find(a.key);
            if (v != nullptr && type_of(*v) == a.type) a.values.push_back(*v);
        }
    }
    return Context(std::move(id), std::move(identifying_key), std::move(names), std::move(attrs));
}

const Context::Attribute* Context::attribute(const std::string& key) const {
    for (const auto& a : attributes_) {
        if (a.key == key) return &a;
    }
    return nullptr;
}

std::optional<AttributeAggregate> Context::aggregate_of(const std::string& key) const {
    const Attribute* a = attribute(key);
    if (a == nullptr || a->values.empty()) return std::nullopt;
    return aggregate(a->values);
}

std::vector<std::pair<std::string, AttributeAggregate>> Context::aggregates() const {
    std::vector<std::pair<std::string, AttributeAggregate>> out;
    for (const auto& a : attributes_) {
        if (!a.values.empty()) out.emplace_back(a.key, aggregate(a.values));
    }
    return out;
}

bool Context::has_member(const std::string& name) const {
    return std::find(members_.begin(), members_.end(), name) != members_.end();
}

void Context::add(const SensorObservation& sensor) {
    if (has_member(sensor.name)) return;
    members_.push_back(sensor.name);
    for (auto& a : attributes_) {
        const AttrValue* v = sensor.find(a.key);
        if (v != nullptr && type_of(*v) == a.type) a.values.push_back(*v);
    }
}

std::string repr(const AttrValue& v) {
    switch (type_of(v)) {
        case AttrType::Number: return py_float(std::get<double>(v));
        case AttrType::String: return py_str(std::get<std::string>(v));
        case AttrType::Time: {
            auto secs = static_cast<std::time_t>(std::floor(std::get<Timestamp>(v).seconds));
            std::tm tm{};
            gmtime_r(&secs, &tm);
            std::string s = "datetime.datetime(" + std::to_string(tm.tm_year + 1900) + ", " +
                            std::to_string(tm.tm_mon + 1) + ", " + std::to_string(tm.tm_mday) +
                            ", " + std::to_string(tm.tm_hour) + ", " + std::to_string(tm.tm_min);
            if (tm.tm_sec != 0) s += ", " + std::to_string(tm.tm_sec);
            return s + ")";
        }
    }
    return "";
}

std::string repr(const ContextSet& contexts) {
    std::string s = "{";
    for (std::size_t i = 0; i < contexts.size(); ++i) {
        const auto& c = contexts[i];
        if (i > 0) s += ", ";
        s += py_str(c.id()) + ": (" + py_str(c.identifying_key()) + ", {";
        auto aggs = c.aggregates();
        for (std::size_t j = 0; j < aggs.size(); ++j) {
            const auto& [key, agg] = aggs[j];
            if (j > 0) s += ", ";
            s += py_str(key) + ": (" + std::to_string(agg.count) + ", " + py_float(agg.std) +
                 ", " + repr(agg.representative) + ")";
        }
        s += "}, (";
        for (std::size_t j = 0; j < c.members().size(); ++j) {
            if (j > 0) s += ", ";
            s += py_str(c.members()[j]);
        }
        if (c.members().size() == 1) s += ",";
        s += "))";
    }
    return s + "}";
}

nlohmann::ordered_json to_json(const Context& c) {
    nlohmann::ordered_json j;
    j["id"] = c.id();
    j["identifying_key"] = c.identifying_key();
    j["members"] = c.members();
    auto attrs = nlohmann::ordered_json::object();
    for (const auto& a : c.attributes()) {
        nlohmann::ordered_json entry;
        entry["type"] = std::string(to_string(a.type));
        auto vals = nlohmann::ordered_json::array();
        for (const auto& v : a.values) vals.push_back(value_json(v));
        entry["values"] = vals;
        if (!a.values.empty()) {
            auto agg = aggregate(a.values);
            entry["count"] = agg.count;
            entry["std"] = agg.std;
            entry["representative"] = value_json(agg.representative);
        }
        attrs[a.key] = entry;
    }
    j["attributes"] = attrs;
    return j;
}

Context context_from_json(const nlohmann::ordered_json& j) {
    try {
        std::vector<Context::Attribute> attrs;
        for (const auto& [key, entry] : j.at("attributes").items()) {
            Context::Attribute a{key, type_from(entry.at("type").get<std::string>()), {}};
            for (const auto& v : entry.at("values")) a.values.push_back(value_from(v, a.type));
            attrs.push_back(std::move(a));
        }
        return Context(j.at("id").get<std::string>(), j.at("identifying_key").get<std::string>(),
                       j.at("members").get<std::vector<std::string>>(), std::move(attrs));
    } catch (const nlohmann::json::exception& e) {
        throw ContextError(std::string("malformed context snapshot: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ContextError(std::string("malformed context snapshot: ") + e.what());
    }
}

nlohmann::ordered_json to_json(const ContextSet& contexts) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : contexts) arr.push_back(to_json(c));
    return arr;
}

ContextSet contexts_from_json(const nlohmann::ordered_json& j) {
    if (!j.is_array()) throw ContextError("context snapshot must be a JSON array");
    ContextSet out;
    for (const auto& c : j) out.push_back(context_from_json(c));
    return out;
}

nlohmann::ordered_json to_json(const SensorObservation& s) {
    nlohmann::ordered_json values = nlohmann::ordered_json::object();
    for (const auto& [k, v] : s.values) values[k] = value_json(v);
    return {{"name", s.name}, {"values", values}};
}

SensorObservation sensor_from_json(const nlohmann::ordered_json& j) {
    SensorObservation s;
    try {
        s.name = j.at("name").get<std::string>();
        for (const auto& [k, v] : j.at("values").items()) {
            if (v.is_number()) {
                s.values.emplace_back(k, v.get<double>());
            } else if (v.is_string()) {
                auto text = v.get<std::string>();
                if (auto t = try_parse_iso(text)) {
                    s.values.emplace_back(k, *t);
                } else {
                    s.values.emplace_back(k, text);
                }
            } else {
                throw ContextError("sensor value " + k + " must be a number or string");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ContextError(std::string("malformed sensor: ") + e.what());
    }
    if (s.values.empty()) throw ContextError("sensor " + s.name + " has no attributes");
    return s;
}

ContextSet load_contexts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ContextError("cannot open context snapshot " + path);
    try {
        return contexts_from_json(nlohmann::ordered_json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ContextError(std::string("malformed context snapshot: ") + e.what());
    }
}

void save_contexts(const ContextSet& contexts, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ContextError("cannot write context snapshot " + path);
    out << to_json(contexts).dump(2) << "\n";
}

}  // namespace gw::context
