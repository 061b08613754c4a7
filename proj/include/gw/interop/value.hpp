#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace gw::interop {

class Value;

using Tuple = std::vector<Value>;
using Record = std::vector<std::pair<std::string, Value>>;

/// Dynamically shaped message content: None, bool, int, string, ordered
/// sequence (tuple) or keyed record with insertion-ordered keys.
class Value {
public:
    using Storage = std::variant<std::monostate, bool, std::int64_t, std::string, Tuple, Record>;

    Value() = default;
    Value(std::nullptr_t) {}
    Value(bool b) : data_(b) {}
    Value(int i) : data_(static_cast<std::int64_t>(i)) {}
    Value(std::int64_t i) : data_(i) {}
    Value(const char* s) : data_(std::string(s)) {}
    Value(std::string s) : data_(std::move(s)) {}
    Value(Tuple t) : data_(std::move(t)) {}
    Value(Record r) : data_(std::move(r)) {}

    static Value tuple(std::initializer_list<Value> items) { return Value(Tuple(items)); }
    static Value record(std::initializer_list<std::pair<std::string, Value>> items) {
        return Value(Record(items));
    }

    bool is_none() const { return std::holds_alternative<std::monostate>(data_); }
    bool is_bool() const { return std::holds_alternative<bool>(data_); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(data_); }
    bool is_string() const { return std::holds_alternative<std::string>(data_); }
    bool is_tuple() const { return std::holds_alternative<Tuple>(data_); }
    bool is_record() const { return std::holds_alternative<Record>(data_); }

    bool as_bool() const { return std::get<bool>(data_); }
    std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
    const std::string& as_string() const { return std::get<std::string>(data_); }
    const Tuple& as_tuple() const { return std::get<Tuple>(data_); }
    const Record& as_record() const { return std::get<Record>(data_); }

    /// Record member lookup; nullptr when absent or not a record.
    const Value* find(const std::string& key) const;

    const Storage& storage() const { return data_; }

    friend bool operator==(const Value&, const Value&) = default;

private:
    Storage data_;
};

/// Python-literal rendering: ('PUBLISH', False, 1), {'qos': 1}, (x,).
std::string repr(const Value& v);

/// Tuples map to arrays and records to objects (key order preserved).
nlohmann::ordered_json to_json(const Value& v);
Value from_json(const nlohmann::ordered_json& j);

}  // namespace gw::interop
