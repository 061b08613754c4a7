#include "gw/interop/value.hpp"

#include <stdexcept>

namespace gw::interop {
namespace {

std::string quote(const std::string& s) {
    // Python picks double quotes when the text has a single quote and no
    // double quote.
    bool has_single = s.find('\'') != std::string::npos;
    bool has_double = s.find('"') != std::string::npos;
    char q = (has_single && !has_double) ? '"' : '\'';
    std::string out(1, q);
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c == q) {
                    out += '\\';
                }
                out += c;
        }
    }
    out += q;
    return out;
}

}  // namespace

const Value* Value::find(const std::string& key) const {
    if (!is_record()) {
        return nullptr;
    }
    for (const auto& [k, v] : as_record()) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

std::string repr(const Value& v) {
    struct Visitor {
        std::string operator()(std::monostate) const { return "None"; }
        std::string operator()(bool b) const { return b ? "True" : "False"; }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(const std::string& s) const { return quote(s); }
        std::string operator()(const Tuple& t) const {
            std::string s = "(";
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (i > 0) s += ", ";
                s += repr(t[i]);
            }
            if (t.size() == 1) s += ",";
            return s + ")";
        }
        std::string operator()(const Record& r) const {
            std::string s = "{";
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i > 0) s += ", ";
                s += quote(r[i].first) + ": " + repr(r[i].second);
            }
            return s + "}";
        }
    };
    return std::visit(Visitor{}, v.storage());
}

nlohmann::ordered_json to_json(const Value& v) {
    struct Visitor {
        nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
        nlohmann::ordered_json operator()(bool b) const { return b; }
        nlohmann::ordered_json operator()(std::int64_t i) const { return i; }
        nlohmann::ordered_json operator()(const std::string& s) const { return s; }
        nlohmann::ordered_json operator()(const Tuple& t) const {
            auto arr = nlohmann::ordered_json::array();
            for (const auto& e : t) arr.push_back(to_json(e));
            return arr;
        }
        nlohmann::ordered_json operator()(const Record& r) const {
            auto obj = nlohmann::ordered_json::object();
            for (const auto& [k, e] : r) obj[k] = to_json(e);
            return obj;
        }
    };
    return std::visit(Visitor{}, v.storage());
}

Value from_json(const nlohmann::ordered_json& j) {
    switch (j.type()) {
        case nlohmann::ordered_json::value_t::null:
            return {};
        case nlohmann::ordered_json::value_t::boolean:
            return j.get<bool>();
        case nlohmann::ordered_json::value_t::number_integer:
        case nlohmann::ordered_json::value_t::number_unsigned:
            return j.get<std::int64_t>();
        case nlohmann::ordered_json::value_t::string:
            return j.get<std::string>();
        case nlohmann::ordered_json::value_t::array: {
            Tuple t;
            for (const auto& e : j) t.push_back(from_json(e));
            return t;
        }
        case nlohmann::ordered_json::value_t::object: {
            Record r;
            for (const auto& [k, e] : j.items()) r.emplace_back(k, from_json(e));
            return r;
        }
        default:
            throw std::invalid_argument("unsupported JSON value in message: " + j.dump());
    }
}

}  // namespace gw::interop
