#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gw::data {

inline constexpr std::size_t kMaxDepth = 1000;

class ConversionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public ConversionError {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0);
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class DepthExceeded : public ConversionError {
public:
    explicit DepthExceeded(std::size_t limit);
};

class EntityUnsupported : public ConversionError {
public:
    using ConversionError::ConversionError;
};

class MultipleRoots : public ConversionError {
public:
    using ConversionError::ConversionError;
};

/// Format-neutral element tree. Nodes live in one arena so that deep
/// documents are built and torn down without recursion; node 0 is the root.
struct DocTree {
    struct Item {
        bool is_text = false;
        std::string text;      // when is_text
        std::size_t node = 0;  // otherwise

        friend bool operator==(const Item&, const Item&) = default;
    };

    struct Node {
        std::string name;
        std::vector<std::pair<std::string, std::string>> attributes;
        std::vector<Item> content;
    };

    std::vector<Node> nodes;

    const Node& root() const { return nodes.at(0); }
    std::size_t depth() const;
};

/// Structural equality: names, attribute order and values, content order.
/// Node numbering is ignored.
bool same_structure(const DocTree& a, const DocTree& b);

/// Parses one XML document. Whitespace-only text is dropped and other text
/// is trimmed. Comments, processing instructions and the declaration are
/// skipped; CDATA sections are read as text.
DocTree parse_xml(const std::string& text);

struct XmlOptions {
    bool declaration = true;
};

/// Compact XML, no indentation.
std::string print_xml(const DocTree& tree, XmlOptions options = {});

/// Accepts `@name`/`#text` and `-name`/`-#text` prefixes.
DocTree parse_json(const std::string& text);

/// Single-line JSON with ", " and ": " separators.
std::string print_json(const DocTree& tree);

std::string xml_to_json(const std::string& xml);
std::string json_to_xml(const std::string& json, XmlOptions options = {});

}  // namespace gw::data
