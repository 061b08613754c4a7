#include <algorithm>
#include <string_view>

#include "gw/data/doc_tree.hpp"

namespace gw::data {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

bool name_start(char c) {
    auto u = static_cast<unsigned char>(c);
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_' || c == ':' || u >= 0x80;
}

bool name_char(char c) {
    return name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

class XmlReader {
public:
    explicit XmlReader(const std::string& text) : s_(text) {}

    DocTree read() {
        if (s_.compare(0, 3, "\xEF\xBB\xBF") == 0) pos_ = 3;
        skip_misc();
        if (at_end() || s_[pos_] != '<') fail("expected a root element");

        std::vector<std::size_t> stack;
        bool closed_root = false;
        if (start_tag(stack)) closed_root = true;

        std::string text;
        auto flush = [&] {
            std::string t = trim(text);
            text.clear();
            if (!t.empty()) tree_.nodes[stack.back()].content.push_back({true, std::move(t), 0});
        };

        while (!closed_root) {
            if (at_end()) fail("unexpected end of document inside <" +
                               tree_.nodes[stack.back()].name + ">");
            char c = s_[pos_];
            if (c == '&') entity();
            if (c != '<') {
                text += c;
                ++pos_;
                continue;
            }
            if (starts("<![CDATA[")) {
                auto end = s_.find("]]>", pos_ + 9);
                if (end == std::string::npos) fail("unterminated CDATA section");
                text.append(s_, pos_ + 9, end - pos_ - 9);
                pos_ = end + 3;
                continue;
            }
            flush();
            if (starts("</")) {
                pos_ += 2;
                std::string name = read_name();
                skip_space();
                expect('>');
                const std::string& open = tree_.nodes[stack.back()].name;
                if (name != open) fail("closing tag </" + name + "> does not match <" + open + ">");
                stack.pop_back();
                closed_root = stack.empty();
            } else if (starts("<!--")) {
                skip_comment();
            } else if (starts("<?")) {
                skip_pi();
            } else if (starts("<!")) {
                fail("DTDs and declarations are not supported");
            } else {
                start_tag(stack);
            }
        }

        skip_misc();
        if (!at_end()) {
            if (s_[pos_] == '<') fail("more than one root element");
            fail("text after the root element");
        }
        return std::move(tree_);
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) {
            if (s_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(what, line, col);
    }

    [[noreturn]] void entity() const {
        throw EntityUnsupported("XML entities and character references are not supported");
    }

    bool at_end() const { return pos_ >= s_.size(); }
    bool starts(std::string_view p) const { return s_.compare(pos_, p.size(), p) == 0; }

    void skip_space() {
        while (!at_end() && is_space(s_[pos_])) ++pos_;
    }

    void expect(char c) {
        if (at_end() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void skip_comment() {
        auto end = s_.find("-->", pos_ + 4);
        if (end == std::string::npos) fail("unterminated comment");
        pos_ = end + 3;
    }

    void skip_pi() {
        auto end = s_.find("?>", pos_ + 2);
        if (end == std::string::npos) fail("unterminated processing instruction");
        pos_ = end + 2;
    }

    void skip_misc() {
        for (;;) {
            skip_space();
            if (starts("<?")) {
                skip_pi();
            } else if (starts("<!--")) {
                skip_comment();
            } else if (starts("<!")) {
                fail("DTDs and declarations are not supported");
            } else {
                return;
            }
        }
    }

    std::string read_name() {
        if (at_end() || !name_start(s_[pos_])) fail("expected a name");
        std::size_t b = pos_;
        while (!at_end() && name_char(s_[pos_])) ++pos_;
        return s_.substr(b, pos_ - b);
    }

    /// Reads `<name attr="v"...>` or `/>`. Returns true when self-closing.
    bool start_tag(std::vector<std::size_t>& stack) {
        if (stack.size() + 1 > kMaxDepth) throw DepthExceeded(kMaxDepth);
        ++pos_;
        DocTree::Node node;
        node.name = read_name();
        for (;;) {
            bool had_space = !at_end() && is_space(s_[pos_]);
            skip_space();
            if (at_end()) fail("unterminated start tag <" + node.name + ">");
            if (s_[pos_] == '/' || s_[pos_] == '>') break;
            if (!had_space) fail("attributes must be separated by whitespace");
            std::string key = read_name();
            skip_space();
            expect('=');
            skip_space();
            if (at_end() || (s_[pos_] != '"' && s_[pos_] != '\'')) fail("expected a quoted value");
            char q = s_[pos_++];
            std::size_t b = pos_;
            while (!at_end() && s_[pos_] != q) {
                if (s_[pos_] == '<') fail("'<' inside an attribute value");
                if (s_[pos_] == '&') entity();
                ++pos_;
            }
            if (at_end()) fail("unterminated attribute value");
            std::string value = s_.substr(b, pos_ - b);
            ++pos_;
            for (const auto& [k, v] : node.attributes) {
                if (k == key) fail("duplicate attribute '" + key + "'");
            }
            node.attributes.emplace_back(std::move(key), std::move(value));
        }

        bool self_closing = s_[pos_] == '/';
        if (self_closing) ++pos_;
        expect('>');

        std::size_t idx = tree_.nodes.size();
        tree_.nodes.push_back(std::move(node));
        if (!stack.empty()) tree_.nodes[stack.back()].content.push_back({false, {}, idx});
        if (!self_closing) stack.push_back(idx);
        return self_closing;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    DocTree tree_;
};

void escape_into(std::string& out, const std::string& s, bool attribute) {
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"':
                if (attribute) {
                    out += "&quot;";
                    break;
                }
                [[fallthrough]];
            default: out += c;
        }
    }
}

}  // namespace

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : ConversionError(line == 0 ? what
                                : what + " at line " + std::to_string(line) + ", column " +
                                      std::to_string(column)),
      line_(line),
      column_(column) {}

DepthExceeded::DepthExceeded(std::size_t limit)
    : ConversionError("document nesting exceeds " + std::to_string(limit) + " levels") {}

std::size_t DocTree::depth() const {
    if (nodes.empty()) return 0;
    std::size_t best = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 1}};
    while (!stack.empty()) {
        auto [n, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        for (const auto& item : nodes[n].content) {
            if (!item.is_text) stack.emplace_back(item.node, d + 1);
        }
    }
    return best;
}

bool same_structure(const DocTree& a, const DocTree& b) {
    if (a.nodes.empty() || b.nodes.empty()) return a.nodes.empty() && b.nodes.empty();
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [i, j] = stack.back();
        stack.pop_back();
        const auto& x = a.nodes[i];
        const auto& y = b.nodes[j];
        if (x.name != y.name || x.attributes != y.attributes || x.content.size() != y.content.size()) {
            return false;
        }
        for (std::size_t k = 0; k < x.content.size(); ++k) {
            const auto& p = x.content[k];
            const auto& q = y.content[k];
            if (p.is_text != q.is_text) return false;
            if (p.is_text) {
                if (p.text != q.text) return false;
            } else {
                stack.emplace_back(p.node, q.node);
            }
        }
    }
    return true;
}

DocTree parse_xml(const std::string& text) { return XmlReader(text).read(); }

std::string print_xml(const DocTree& tree, XmlOptions options) {
    std::string out;
    if (options.declaration) out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    if (tree.nodes.empty()) return out;

    // (node, next content index)
    std::vector<std::pair<std::size_t, std::size_t>> stack;
    auto open = [&](std::size_t n) {
        const auto& node = tree.nodes[n];
        out += '<';
        out += node.name;
        for (const auto& [k, v] : node.attributes) {
            out += ' ';
            out += k;
            out += "=\"";
            escape_into(out, v, true);
            out += '"';
        }
        if (node.content.empty()) {
            out += "/>";
        } else {
            out += '>';
            stack.emplace_back(n, 0);
        }
    };

    open(0);
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        const auto& node = tree.nodes[n];
        if (next == node.content.size()) {
            out += "</" + node.name + ">";
            stack.pop_back();
            continue;
        }
        const auto& item = node.content[next++];
        if (item.is_text) {
            escape_into(out, item.text, false);
        } else {
            open(item.node);
        }
    }
    return out;
}

}  // namespace gw::data
