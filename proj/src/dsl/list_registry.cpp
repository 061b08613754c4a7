#include "gw/dsl/list_registry.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace gw::dsl {
namespace {

using List = std::vector<std::int64_t>;

const List& as_list(const ListValue& v) { return std::get<List>(v); }

DslFunction<ListValue> scalar_fn(int index, std::string name,
                                 std::function<std::int64_t(const List&)> body) {
    return {index, std::move(name), ValueKind::List, ValueKind::Scalar,
            [body = std::move(body)](const ListValue& v) -> ListValue { return body(as_list(v)); }};
}

DslFunction<ListValue> list_fn(int index, std::string name, std::function<List(const List&)> body) {
    return {index, std::move(name), ValueKind::List, ValueKind::List,
            [body = std::move(body)](const ListValue& v) -> ListValue { return body(as_list(v)); }};
}

Registry<ListValue> make_list_registry() {
    std::vector<DslFunction<ListValue>> fns;
    fns.push_back(scalar_fn(kHead, "HEAD", [](const List& xs) {
        if (xs.empty()) throw EmptyListError("HEAD");
        return xs.front();
    }));
    fns.push_back(list_fn(kRest, "REST", [](const List& xs) {
        if (xs.empty()) throw EmptyListError("REST");
        return List(xs.begin() + 1, xs.end());
    }));
    fns.push_back(scalar_fn(kLast, "LAST", [](const List& xs) {
        if (xs.empty()) throw EmptyListError("LAST");
        return xs.back();
    }));
    fns.push_back(list_fn(kReverse, "REVERSE", [](const List& xs) {
        return List(xs.rbegin(), xs.rend());
    }));
    fns.push_back(list_fn(kSort, "SORT", [](const List& xs) {
        List out = xs;
        std::sort(out.begin(), out.end());
        return out;
    }));
    fns.push_back(scalar_fn(kSum, "SUM", [](const List& xs) {
        std::int64_t total = 0;
        for (auto x : xs) {
            if (__builtin_add_overflow(total, x, &total)) {
                throw EvaluationError("SUM overflowed a 64-bit integer");
            }
        }
        return total;
    }));
    fns.push_back(scalar_fn(kCount, "COUNT", [](const List& xs) {
        return static_cast<std::int64_t>(xs.size());
    }));
    fns.push_back(scalar_fn(kMaximum, "MAXIMUM", [](const List& xs) {
        if (xs.empty()) throw EmptyListError("MAXIMUM");
        return *std::max_element(xs.begin(), xs.end());
    }));
    fns.push_back(scalar_fn(kMinimum, "MINIMUM", [](const List& xs) {
        if (xs.empty()) throw EmptyListError("MINIMUM");
        return *std::min_element(xs.begin(), xs.end());
    }));
    return Registry<ListValue>(kListRegistryId, std::move(fns), [](const ListValue& v) {
        return std::holds_alternative<std::int64_t>(v) ? ValueKind::Scalar : ValueKind::List;
    });
}

ListValue from_json(const nlohmann::json& j) {
    if (j.is_number_integer()) {
        return j.get<std::int64_t>();
    }
    if (j.is_array()) {
        List xs;
        for (const auto& e : j) {
            if (!e.is_number_integer()) {
                throw InvalidExample("list elements must be integers");
            }
            xs.push_back(e.get<std::int64_t>());
        }
        return xs;
    }
    throw InvalidExample("expected an integer or a list of integers, got " + j.dump());
}

}  // namespace

const Registry<ListValue>& list_registry() {
    static const Registry<ListValue> registry = make_list_registry();
    return registry;
}

std::string to_string(const ListValue& v) {
    if (const auto* n = std::get_if<std::int64_t>(&v)) {
        return std::to_string(*n);
    }
    std::string s = "[";
    const auto& xs = as_list(v);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0) s += ", ";
        s += std::to_string(xs[i]);
    }
    return s + "]";
}

std::vector<IoExample<ListValue>> parse_list_examples(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidExample(std::string("examples are not valid JSON: ") + e.what());
    }
    if (!doc.is_array()) {
        throw InvalidExample("examples must be a JSON array");
    }
    std::vector<IoExample<ListValue>> out;
    for (const auto& item : doc) {
        if (!item.is_object() || !item.contains("input") || !item.contains("output")) {
            throw InvalidExample("each example needs \"input\" and \"output\"");
        }
        const auto& input = item.at("input");
        if (!input.is_array() || input.empty()) {
            throw InvalidExample("\"input\" must be a non-empty array");
        }
        IoExample<ListValue> ex{{}, from_json(item.at("output"))};
        for (const auto& arg : input) {
            ex.input.push_back(from_json(arg));
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<IoExample<ListValue>> load_list_examples(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidExample("cannot open examples file " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_list_examples(buf.str());
}

}  // namespace gw::dsl
