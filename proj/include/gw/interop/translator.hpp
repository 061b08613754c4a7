#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gw/dsl/qtable.hpp"
#include "gw/dsl/registry.hpp"
#include "gw/dsl/synthesizer.hpp"
#include "gw/interop/envelope.hpp"
#include "gw/interop/value.hpp"

namespace gw::interop {

inline constexpr const char* kInteropRegistryId = "I";

enum InteropFn : int {
    kUnpackPayload = 1,
    kExtractPacket = 2,
    kPackProperties = 3,
    kLabelPacket = 4,
};

/// Registry I over message values.
///   1 unpack_payload   payload record inside 'packet' -> tuple of (label, value)
///   2 extract_packet   record -> its 'packet' sequence, remaining fields
///                      appended as one trailing record
///   3 pack_properties  (header..., payload, {qos, info, ...}) ->
///                      (header..., (qos, properties, payload))
///   4 label_packet     (header..., (qos, properties, payload)) -> keyed record
const dsl::Registry<Value>& interop_registry();

struct TranslationProgram {
    dsl::DslProgram program;
    Dialect source;
    Dialect target;
};

class NoProgram : public std::runtime_error {
public:
    NoProgram(Dialect src, Dialect dst);
};

class TranslationNotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Learned dialect translations, keyed by (source, target). Reads run
/// concurrently; learning is serialized.
class Translator {
public:
    explicit Translator(dsl::SynthesisOptions options = {});

    /// Synthesizes over registry I and caches the program. Throws
    /// TranslationNotFound when the search space is exhausted.
    TranslationProgram learn_translation(std::span<const dsl::IoExample<Value>> examples,
                                         Dialect src, Dialect dst);

    /// Cache lookup, then evaluation. Identity when src == dst.
    Value translate(const Value& msg, Dialect src, Dialect dst) const;

    std::optional<TranslationProgram> find(Dialect src, Dialect dst) const;
    void store(TranslationProgram program);

    std::size_t synthesis_runs() const;
    /// Q-values are kept per (source, target) pair.
    dsl::QTable q_table(Dialect src, Dialect dst) const;

private:
    mutable std::shared_mutex mutex_;
    std::map<std::pair<Dialect, Dialect>, TranslationProgram> cache_;
    std::map<std::pair<Dialect, Dialect>, dsl::QTable> q_;
    dsl::SynthesisOptions options_;
    std::size_t synthesis_runs_ = 0;
};

}  // namespace gw::interop
