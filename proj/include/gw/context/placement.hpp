#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gw/context/context.hpp"
#include "gw/dsl/qtable.hpp"
#include "gw/dsl/registry.hpp"
#include "gw/dsl/synthesizer.hpp"

namespace gw::context {

/// DSL value of registry C: the candidate contexts plus the sensor being
/// placed. Every function maps ContextSet -> ContextSet.
struct PlacementState {
    ContextSet contexts;
    SensorObservation sensor;

    friend bool operator==(const PlacementState&, const PlacementState&) = default;
};

inline constexpr const char* kContextRegistryId = "C";

enum ContextFn : int {
    kExcludeStrings = 1,
    kExcludeNumbers = 2,
    kExcludeEmpty = 3,
    kExcludeDates = 4,
    kExcludeOutsideStd = 5,
    kExcludeMismatchedKey = 6,
    kAddSensor = 7,
};

/// Registry C.
///   1 exclude_strings         drop contexts keyed by a string attribute
///   2 exclude_numbers         drop contexts keyed by a numeric attribute
///   3 exclude_empty           drop contexts without members or key values
///   4 exclude_dates           drop contexts keyed by a time attribute
///   5 exclude_outside_std     keep contexts whose key aggregate admits the
///                             sensor's value (|v - mean| <= std, exact match
///                             when std = 0, modal equality for strings)
///   6 exclude_mismatched_key  drop contexts whose key the sensor lacks
///   7 add_sensor              add the sensor to every remaining context
const dsl::Registry<PlacementState>& context_registry();

class PlacementNotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Synthesizes a registry C pipeline that turns `contexts` into `expected`
/// for `sensor`. Pure with respect to the Q-table.
dsl::DslProgram learn_placement(const SensorObservation& sensor, const ContextSet& contexts,
                                const ContextSet& expected, const dsl::QTable& q = dsl::QTable(),
                                dsl::SynthesisOptions options = {});

struct PlacementResult {
    /// Input order; surviving contexts replaced by their updated form.
    ContextSet contexts;
    /// Pipeline output, i.e. the contexts the sensor was placed into.
    ContextSet placed;
};

PlacementResult place(const SensorObservation& sensor, const ContextSet& contexts,
                      const dsl::DslProgram& program);

}  // namespace gw::context
