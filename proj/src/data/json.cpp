#include <algorithm>
#include <iterator>
#include <string_view>
#include <variant>

#include "gw/data/doc_tree.hpp"
#include "json.hpp"

namespace gw::data {
namespace {

using Json = nlohmann::ordered_json;

std::string quote(const std::string& s) { return Json(s).dump(); }

bool valid_name(std::string_view s) {
    if (s.empty()) return false;
    auto start = [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_' || c == ':' ||
               static_cast<unsigned char>(c) >= 0x80;
    };
    if (!start(s[0])) return false;
    for (char c : s) {
        if (!start(c) && !(c >= '0' && c <= '9') && c != '-' && c != '.') return false;
    }
    return true;
}

bool is_text_key(const std::string& k) { return k == "#text" || k == "-#text"; }

bool is_attr_key(const std::string& k) {
    return !is_text_key(k) && !k.empty() && (k[0] == '@' || k[0] == '-');
}

std::string scalar_text(const Json& v, const std::string& where) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number() || v.is_boolean()) return v.dump();
    throw ParseError(where + " must be a string or scalar");
}

}  // namespace

DocTree parse_json(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("top-level JSON value must be an object");
    if (j.size() != 1) {
        throw MultipleRoots("an XML document needs exactly one root, got " + std::to_string(j.size()));
    }
    const auto& [root_name, root_value] = *j.items().begin();
    if (root_value.is_array()) throw MultipleRoots("root element '" + root_name + "' is an array");
    if (!valid_name(root_name)) throw ParseError("invalid element name '" + root_name + "'");

    DocTree tree;
    tree.nodes.push_back({root_name, {}, {}});

    struct Pending {
        const Json* value;
        std::size_t node;
        std::size_t depth;
    };
    std::vector<Pending> stack{{&root_value, 0, 1}};

    while (!stack.empty()) {
        Pending p = stack.back();
        stack.pop_back();
        const Json& v = *p.value;
        // Children are allocated here, in member order, and filled later.
        std::vector<Pending> children;

        auto add_child = [&](const std::string& name, const Json* value) {
            if (p.depth + 1 > kMaxDepth) throw DepthExceeded(kMaxDepth);
            std::size_t idx = tree.nodes.size();
            tree.nodes.push_back({name, {}, {}});
            tree.nodes[p.node].content.push_back({false, {}, idx});
            children.push_back({value, idx, p.depth + 1});
        };
        auto add_text = [&](std::string t) {
            if (!t.empty()) tree.nodes[p.node].content.push_back({true, std::move(t), 0});
        };

        if (v.is_null()) {
        } else if (v.is_array()) {
            throw ParseError("arrays may only hold repeated elements, not nested arrays");
        } else if (!v.is_object()) {
            add_text(scalar_text(v, "element value"));
        } else {
            for (const auto& [key, member] : v.items()) {
                if (is_text_key(key)) {
                    if (member.is_array()) {
                        for (const auto& t : member) add_text(scalar_text(t, "'#text' entry"));
                    } else if (!member.is_null()) {
                        add_text(scalar_text(member, "'#text'"));
                    }
                } else if (is_attr_key(key)) {
                    std::string name = key.substr(1);
                    if (!valid_name(name)) throw ParseError("invalid attribute name '" + name + "'");
                    auto& attrs = tree.nodes[p.node].attributes;
                    for (const auto& [k, existing] : attrs) {
                        if (k == name) throw ParseError("duplicate attribute '" + name + "'");
                    }
                    attrs.emplace_back(std::move(name), scalar_text(member, "attribute '" + key + "'"));
                } else {
                    if (!valid_name(key)) throw ParseError("invalid element name '" + key + "'");
                    if (member.is_array()) {
                        for (const auto& item : member) {
                            if (item.is_array()) throw ParseError("nested array under '" + key + "'");
                            add_child(key, &item);
                        }
                    } else {
                        add_child(key, &member);
                    }
                }
            }
        }
        stack.insert(stack.end(), children.rbegin(), children.rend());
    }
    return tree;
}

std::string print_json(const DocTree& tree) {
    if (tree.nodes.empty()) return "{}";

    // Work items: literal text, or the value of a node still to expand.
    using Task = std::variant<std::string, std::size_t>;
    std::vector<Task> tasks;
    std::string out = "{" + quote(tree.root().name) + ": ";
    tasks.emplace_back(std::string("}"));
    tasks.emplace_back(std::size_t{0});

    while (!tasks.empty()) {
        Task t = std::move(tasks.back());
        tasks.pop_back();
        if (auto* lit = std::get_if<std::string>(&t)) {
            out += *lit;
            continue;
        }
        const auto& node = tree.nodes[std::get<std::size_t>(t)];
        if (node.attributes.empty() && node.content.empty()) {
            out += "null";
            continue;
        }
        if (node.attributes.empty() && node.content.size() == 1 && node.content[0].is_text) {
            out += quote(node.content[0].text);
            continue;
        }

        // Group content by key at the position of its first occurrence.
        std::vector<std::pair<std::string, std::vector<const DocTree::Item*>>> groups;
        for (const auto& item : node.content) {
            const std::string& key = item.is_text ? std::string("#text") : tree.nodes[item.node].name;
            auto it = std::find_if(groups.begin(), groups.end(),
                                   [&](const auto& g) { return g.first == key; });
            if (it == groups.end()) {
                groups.push_back({key, {&item}});
            } else {
                it->second.push_back(&item);
            }
        }

        std::vector<Task> seq;
        std::string head = "{";
        bool first = true;
        for (const auto& [k, v] : node.attributes) {
            if (!first) head += ", ";
            first = false;
            head += quote("@" + k) + ": " + quote(v);
        }
        std::string pending = head;
        for (const auto& [key, items] : groups) {
            if (!first) pending += ", ";
            first = false;
            pending += quote(key) + ": ";
            if (items.size() > 1) pending += "[";
            for (std::size_t i = 0; i < items.size(); ++i) {
                if (i > 0) pending += ", ";
                if (items[i]->is_text) {
                    pending += quote(items[i]->text);
                } else {
                    seq.emplace_back(std::move(pending));
                    pending.clear();
                    seq.emplace_back(items[i]->node);
                }
            }
            if (items.size() > 1) pending += "]";
        }
        pending += "}";
        seq.emplace_back(std::move(pending));
        tasks.insert(tasks.end(), std::make_move_iterator(seq.rbegin()),
                     std::make_move_iterator(seq.rend()));
    }
    return out;
}

std::string xml_to_json(const std::string& xml) { return print_json(parse_xml(xml)); }

std::string json_to_xml(const std::string& json, XmlOptions options) {
    return print_xml(parse_json(json), options);
}

}  // namespace gw::data
