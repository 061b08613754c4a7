#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gw/dsl/program.hpp"
#include "gw/dsl/qtable.hpp"
#include "gw/dsl/registry.hpp"

namespace gw::dsl {

template <class Value>
struct IoExample {
    std::vector<Value> input;
    Value output;
};

struct SynthesisOptions {
    std::size_t max_len = 4;
};

struct SynthesisResult {
    std::optional<DslProgram> program;
    /// Kind-valid pipelines evaluated against the examples before returning.
    std::size_t candidates_visited = 0;

    bool found() const noexcept { return program.has_value(); }
};

namespace detail {

template <class Value>
void check_examples(std::span<const IoExample<Value>> examples, const Registry<Value>& registry,
                    ValueKind* in_kind, ValueKind* out_kind) {
    if (examples.empty()) {
        throw InvalidExample("no examples supplied");
    }
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        if (ex.input.size() != 1) {
            throw InvalidExample("pipelines are unary: example " + std::to_string(i) +
                                 " has " + std::to_string(ex.input.size()) + " inputs");
        }
        ValueKind ik = registry.kind_of(ex.input.front());
        ValueKind ok = registry.kind_of(ex.output);
        if (i == 0) {
            *in_kind = ik;
            *out_kind = ok;
        } else if (ik != *in_kind || ok != *out_kind) {
            throw InvalidExample("example " + std::to_string(i) + " is not kind-consistent");
        }
    }
    for (std::size_t i = 0; i < examples.size(); ++i) {
        for (std::size_t j = i + 1; j < examples.size(); ++j) {
            if (examples[i].input == examples[j].input &&
                !(examples[i].output == examples[j].output)) {
                throw ExampleConflict("examples " + std::to_string(i) + " and " +
                                      std::to_string(j) + " share an input but disagree");
            }
        }
    }
}

template <class Value>
void collect(const Registry<Value>& registry, std::size_t max_len, ValueKind cur,
             ValueKind target, std::vector<int>& prefix, std::vector<std::vector<int>>& out) {
    if (cur == target) {
        out.push_back(prefix);
    }
    if (prefix.size() == max_len) {
        return;
    }
    for (const auto& f : registry.functions()) {
        if (f.input_kind != cur) {
            continue;
        }
        prefix.push_back(f.index);
        collect(registry, max_len, f.output_kind, target, prefix, out);
        prefix.pop_back();
    }
}

}  // namespace detail

/// Every kind-valid pipeline from `in` to `out` of length <= max_len, in
/// search order: mean Q-value descending, then length ascending, then
/// lexicographic index order.
template <class Value>
std::vector<std::vector<int>> enumeration_order(const Registry<Value>& registry, const QTable& q,
                                                ValueKind in, ValueKind out,
                                                std::size_t max_len) {
    std::vector<std::vector<int>> all;
    std::vector<int> prefix;
    detail::collect(registry, max_len, in, out, prefix, all);

    struct Keyed {
        double score;
        std::vector<int> stages;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(all.size());
    for (auto& stages : all) {
        double s = q.score(registry.id(), stages);
        keyed.push_back({s, std::move(stages)});
    }
    std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        if (a.stages.size() != b.stages.size()) {
            return a.stages.size() < b.stages.size();
        }
        return a.stages < b.stages;
    });

    std::vector<std::vector<int>> ordered;
    ordered.reserve(keyed.size());
    for (auto& k : keyed) {
        ordered.push_back(std::move(k.stages));
    }
    return ordered;
}

template <class Value>
bool satisfies(const Registry<Value>& registry, const DslProgram& program,
               std::span<const IoExample<Value>> examples) {
    for (const auto& ex : examples) {
        try {
            if (!(evaluate(registry, program, ex.input.front()) == ex.output)) {
                return false;
            }
        } catch (const EvaluationError&) {
            return false;
        }
    }
    return true;
}

/// First pipeline in enumeration order that reproduces every example
/// exactly. Pure: the Q-table is only read.
template <class Value>
SynthesisResult synthesize(std::span<const IoExample<Value>> examples,
                           const Registry<Value>& registry, const QTable& q,
                           SynthesisOptions options = {}) {
    if (options.max_len == 0) {
        throw InvalidExample("max_len must be at least 1");
    }
    ValueKind in_kind{};
    ValueKind out_kind{};
    detail::check_examples(examples, registry, &in_kind, &out_kind);

    SynthesisResult result;
    for (auto& stages : enumeration_order(registry, q, in_kind, out_kind, options.max_len)) {
        ++result.candidates_visited;
        DslProgram candidate{registry.id(), std::move(stages)};
        if (satisfies(registry, candidate, examples)) {
            result.program = std::move(candidate);
            return result;
        }
    }
    return result;
}

/// Runs synthesize and, on success, rewards every function of the winner.
template <class Value>
SynthesisResult synthesize_and_learn(std::span<const IoExample<Value>> examples,
                                     const Registry<Value>& registry, QTable& q,
                                     SynthesisOptions options = {}, double reward = 1.0) {
    auto result = synthesize(examples, registry, q, options);
    if (result.program) {
        q.update(*result.program, reward);
    }
    return result;
}

/// All accepted pipelines, in enumeration order. synthesize returns the
/// first element of this list.
template <class Value>
std::vector<DslProgram> consistent_programs(std::span<const IoExample<Value>> examples,
                                            const Registry<Value>& registry, const QTable& q,
                                            SynthesisOptions options = {}) {
    ValueKind in_kind{};
    ValueKind out_kind{};
    detail::check_examples(examples, registry, &in_kind, &out_kind);
    std::vector<DslProgram> accepted;
    for (auto& stages : enumeration_order(registry, q, in_kind, out_kind, options.max_len)) {
        DslProgram candidate{registry.id(), std::move(stages)};
        if (satisfies(registry, candidate, examples)) {
            accepted.push_back(std::move(candidate));
        }
    }
    return accepted;
}

}  // namespace gw::dsl
