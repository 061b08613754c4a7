#pragma once

#include <algorithm>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gw/dsl/program.hpp"

namespace gw::dsl {

/// Semantic kind of a DSL value; used for static pipeline checks.
enum class ValueKind { Scalar, List, ContextSet, Message };

std::string_view to_string(ValueKind kind);

template <class Value>
struct DslFunction {
    int index = 0;
    std::string name;
    ValueKind input_kind = ValueKind::List;
    ValueKind output_kind = ValueKind::List;
    /// Returns a new value; never mutates its argument. Throws
    /// EvaluationError subclasses on failure.
    std::function<Value(const Value&)> apply;
};

/// A fixed, indexed set of DSL functions over one value type.
template <class Value>
class Registry {
public:
    using KindOf = std::function<ValueKind(const Value&)>;

    Registry(std::string id, std::vector<DslFunction<Value>> functions, KindOf kind_of)
        : id_(std::move(id)), functions_(std::move(functions)), kind_of_(std::move(kind_of)) {
        std::sort(functions_.begin(), functions_.end(),
                  [](const auto& a, const auto& b) { return a.index < b.index; });
        for (std::size_t i = 0; i < functions_.size(); ++i) {
            if (functions_[i].index <= 0) {
                throw DslError("registry " + id_ + ": indices must be positive");
            }
            if (i > 0 && functions_[i].index == functions_[i - 1].index) {
                throw DslError("registry " + id_ + ": duplicate index " +
                               std::to_string(functions_[i].index));
            }
        }
    }

    const std::string& id() const noexcept { return id_; }
    std::span<const DslFunction<Value>> functions() const noexcept { return functions_; }
    ValueKind kind_of(const Value& v) const { return kind_of_(v); }

    const DslFunction<Value>* find(int index) const noexcept {
        auto it = std::lower_bound(functions_.begin(), functions_.end(), index,
                                   [](const auto& f, int i) { return f.index < i; });
        if (it == functions_.end() || it->index != index) {
            return nullptr;
        }
        return &*it;
    }

    const DslFunction<Value>& at(int index) const {
        if (const auto* f = find(index)) {
            return *f;
        }
        throw UnknownIndex(id_, index);
    }

    int index_of(std::string_view name) const {
        for (const auto& f : functions_) {
            if (f.name == name) {
                return f.index;
            }
        }
        throw DslError("registry " + id_ + " has no function named " + std::string(name));
    }

    void validate(const DslProgram& program) const {
        if (program.registry_id != id_) {
            throw DslError("program targets registry '" + program.registry_id +
                           "', expected '" + id_ + "'");
        }
        for (int idx : program.stages) {
            (void)at(idx);
        }
    }

    /// Static kind of a pipeline applied to an input of `input`, or nothing
    /// when some stage's input kind is violated.
    bool kinds_chain(std::span<const int> stages, ValueKind input, ValueKind* out) const {
        ValueKind cur = input;
        for (int idx : stages) {
            const auto& f = at(idx);
            if (f.input_kind != cur) {
                return false;
            }
            cur = f.output_kind;
        }
        if (out != nullptr) {
            *out = cur;
        }
        return true;
    }

    /// Human-readable rendering, e.g. "(2 (REST), 1 (HEAD))".
    std::string pretty(const DslProgram& program) const {
        std::string s = "(";
        for (std::size_t i = 0; i < program.stages.size(); ++i) {
            if (i > 0) {
                s += ", ";
            }
            s += std::to_string(program.stages[i]) + " (" + at(program.stages[i]).name + ")";
        }
        return s + ")";
    }

private:
    std::string id_;
    std::vector<DslFunction<Value>> functions_;
    KindOf kind_of_;
};

/// Threads `input` through every stage. Empty program returns the input.
template <class Value>
Value evaluate(const Registry<Value>& registry, const DslProgram& program, const Value& input) {
    registry.validate(program);
    Value cur = input;
    for (std::size_t i = 0; i < program.stages.size(); ++i) {
        const auto& f = registry.at(program.stages[i]);
        if (registry.kind_of(cur) != f.input_kind) {
            KindMismatch err(f.name + " expects " + std::string(to_string(f.input_kind)) +
                             ", got " + std::string(to_string(registry.kind_of(cur))));
            err.set_stage(i);
            throw err;
        }
        try {
            cur = f.apply(cur);
        } catch (EvaluationError& e) {
            e.set_stage(i);
            throw;
        }
    }
    return cur;
}

}  // namespace gw::dsl
