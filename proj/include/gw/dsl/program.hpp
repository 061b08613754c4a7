#pragma once

#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gw::dsl {

/// A linear pipeline of registry function indices, applied left to right.
/// The empty pipeline is the identity program.
struct DslProgram {
    std::string registry_id;
    std::vector<int> stages;

    bool empty() const noexcept { return stages.empty(); }
    std::size_t size() const noexcept { return stages.size(); }

    friend auto operator<=>(const DslProgram&, const DslProgram&) = default;
};

class DslError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public DslError {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column);

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class UnknownIndex : public DslError {
public:
    UnknownIndex(std::string registry_id, int index);

    int index() const noexcept { return index_; }

private:
    int index_;
};

/// Raised while threading a value through a pipeline. Carries the failing
/// stage position (0-based) once the evaluator has attached it.
class EvaluationError : public DslError {
public:
    explicit EvaluationError(const std::string& what) : DslError(what) {}

    std::size_t stage() const noexcept { return stage_; }
    void set_stage(std::size_t stage) noexcept { stage_ = stage; }

private:
    std::size_t stage_ = 0;
};

class EmptyListError : public EvaluationError {
public:
    explicit EmptyListError(std::string_view function);
};

class KindMismatch : public EvaluationError {
public:
    using EvaluationError::EvaluationError;
};

class ExampleConflict : public DslError {
public:
    using DslError::DslError;
};

class InvalidExample : public DslError {
public:
    using DslError::DslError;
};

/// Parses one program line: `<registry_id>: <idx> <idx> ...`, optionally
/// newline-terminated. Only syntax is checked here; index membership is
/// checked by Registry::validate.
DslProgram parse_program(std::string_view text);

/// Canonical form, newline-terminated: "L: 2 1\n". Empty program: "L:\n".
std::string serialize_program(const DslProgram& program);

DslProgram load_program_file(const std::string& path);
void save_program_file(const std::string& path, const DslProgram& program);

std::string describe(const DslProgram& program);

}  // namespace gw::dsl
