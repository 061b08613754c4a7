#include "gw/dsl/program.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "gw/dsl/registry.hpp"

namespace gw::dsl {

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : DslError("parse error at " + std::to_string(line) + ":" + std::to_string(column) + ": " +
               what),
      line_(line),
      column_(column) {}

UnknownIndex::UnknownIndex(std::string registry_id, int index)
    : DslError("registry " + registry_id + " has no function index " + std::to_string(index)),
      index_(index) {}

EmptyListError::EmptyListError(std::string_view function)
    : EvaluationError(std::string(function) + " applied to an empty list") {}

std::string_view to_string(ValueKind kind) {
    switch (kind) {
        case ValueKind::Scalar:
            return "scalar";
        case ValueKind::List:
            return "list";
        case ValueKind::ContextSet:
            return "context-set";
        case ValueKind::Message:
            return "message";
    }
    return "?";
}

DslProgram parse_program(std::string_view text) {
    // Program files hold exactly one line; a single trailing LF is allowed.
    if (!text.empty() && text.back() == '\n') {
        text.remove_suffix(1);
    }
    if (auto nl = text.find('\n'); nl != std::string_view::npos) {
        throw ParseError("program must be a single line", 2, 1);
    }

    std::size_t pos = 0;
    auto col = [&] { return pos + 1; };

    if (pos >= text.size() || !std::isalpha(static_cast<unsigned char>(text[pos]))) {
        throw ParseError("expected registry identifier", 1, col());
    }
    DslProgram program;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
        program.registry_id += text[pos++];
    }
    if (pos >= text.size() || text[pos] != ':') {
        throw ParseError("expected ':' after registry identifier", 1, col());
    }
    ++pos;

    while (pos < text.size()) {
        if (text[pos] != ' ') {
            throw ParseError("expected ' ' before index", 1, col());
        }
        ++pos;
        std::size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
        if (start == pos) {
            throw ParseError("expected function index", 1, start + 1);
        }
        int idx = 0;
        auto [ptr, ec] = std::from_chars(text.data() + start, text.data() + pos, idx);
        if (ec != std::errc{} || idx <= 0) {
            throw ParseError("function index out of range", 1, start + 1);
        }
        program.stages.push_back(idx);
    }
    return program;
}

std::string serialize_program(const DslProgram& program) {
    std::string s = program.registry_id + ":";
    for (int idx : program.stages) {
        s += ' ';
        s += std::to_string(idx);
    }
    s += '\n';
    return s;
}

DslProgram load_program_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DslError("cannot open program file " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_program(buf.str());
}

void save_program_file(const std::string& path, const DslProgram& program) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DslError("cannot write program file " + path);
    }
    out << serialize_program(program);
}

std::string describe(const DslProgram& program) {
    std::string s = serialize_program(program);
    s.pop_back();
    return s;
}

}  // namespace gw::dsl
