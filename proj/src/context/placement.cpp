#include "gw/context/placement.hpp"

#include <algorithm>
#include <cmath>

namespace gw::context {
namespace {

using Pred = bool (*)(const Context&, const SensorObservation&);

PlacementState keep_if(const PlacementState& s, Pred keep) {
    PlacementState out{{}, s.sensor};
    for (const auto& c : s.contexts) {
        if (keep(c, s.sensor)) out.contexts.push_back(c);
    }
    return out;
}

std::optional<AttrType> key_type(const Context& c) {
    const auto* a = c.attribute(c.identifying_key());
    if (a == nullptr) return std::nullopt;
    return a->type;
}

bool not_string_keyed(const Context& c, const SensorObservation&) {
    return key_type(c) != AttrType::String;
}

bool not_number_keyed(const Context& c, const SensorObservation&) {
    return key_type(c) != AttrType::Number;
}

bool not_time_keyed(const Context& c, const SensorObservation&) {
    return key_type(c) != AttrType::Time;
}

bool not_empty(const Context& c, const SensorObservation&) {
    return !c.members().empty() && c.aggregate_of(c.identifying_key()).has_value();
}

bool within_std(const Context& c, const SensorObservation& s) {
    auto agg = c.aggregate_of(c.identifying_key());
    const AttrValue* v = s.find(c.identifying_key());
    if (!agg || v == nullptr || type_of(*v) != type_of(agg->representative)) return false;
    switch (type_of(*v)) {
        case AttrType::String:
            return *v == agg->representative;
        case AttrType::Number:
            return std::fabs(std::get<double>(*v) - std::get<double>(agg->representative)) <= agg->std;
        case AttrType::Time:
            return std::fabs(std::get<Timestamp>(*v).seconds -
                             std::get<Timestamp>(agg->representative).seconds) <= agg->std;
    }
    return false;
}

bool key_present(const Context& c, const SensorObservation& s) {
    return s.find(c.identifying_key()) != nullptr;
}

PlacementState add_sensor(const PlacementState& s) {
    PlacementState out = s;
    for (auto& c : out.contexts) c.add(s.sensor);
    return out;
}

dsl::DslFunction<PlacementState> filter_fn(int index, const char* name, Pred keep) {
    return {index, name, dsl::ValueKind::ContextSet, dsl::ValueKind::ContextSet,
            [keep](const PlacementState& s) { return keep_if(s, keep); }};
}

}  // namespace

const dsl::Registry<PlacementState>& context_registry() {
    static const dsl::Registry<PlacementState> registry(
        kContextRegistryId,
        {
            filter_fn(kExcludeStrings, "exclude_strings", not_string_keyed),
            filter_fn(kExcludeNumbers, "exclude_numbers", not_number_keyed),
            filter_fn(kExcludeEmpty, "exclude_empty", not_empty),
            filter_fn(kExcludeDates, "exclude_dates", not_time_keyed),
            filter_fn(kExcludeOutsideStd, "exclude_outside_std", within_std),
            filter_fn(kExcludeMismatchedKey, "exclude_mismatched_key", key_present),
            {kAddSensor, "add_sensor", dsl::ValueKind::ContextSet, dsl::ValueKind::ContextSet,
             add_sensor},
        },
        [](const PlacementState&) { return dsl::ValueKind::ContextSet; });
    return registry;
}

dsl::DslProgram learn_placement(const SensorObservation& sensor, const ContextSet& contexts,
                                const ContextSet& expected, const dsl::QTable& q,
                                dsl::SynthesisOptions options) {
    std::vector<dsl::IoExample<PlacementState>> examples{
        {{PlacementState{contexts, sensor}}, PlacementState{expected, sensor}}};
    auto result = dsl::synthesize<PlacementState>(examples, context_registry(), q, options);
    if (!result.program) {
        throw PlacementNotFound("no registry C pipeline places " + sensor.name +
                                " into the expected contexts");
    }
    return *result.program;
}

PlacementResult place(const SensorObservation& sensor, const ContextSet& contexts,
                      const dsl::DslProgram& program) {
    context_registry().validate(program);
    PlacementState out = dsl::evaluate(context_registry(), program, PlacementState{contexts, sensor});

    PlacementResult result{contexts, out.contexts};
    for (auto& c : result.contexts) {
        auto it = std::find_if(out.contexts.begin(), out.contexts.end(),
                               [&](const Context& u) { return u.id() == c.id(); });
        if (it != out.contexts.end()) c = *it;
    }
    return result;
}

}  // namespace gw::context
