#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gw/dsl/registry.hpp"
#include "gw/dsl/synthesizer.hpp"

namespace gw::dsl {

/// Value domain of registry L: an integer or a list of integers.
using ListValue = std::variant<std::int64_t, std::vector<std::int64_t>>;

inline constexpr const char* kListRegistryId = "L";

/// Stable indices of registry L.
enum ListFn : int {
    kHead = 1,
    kRest = 2,
    kLast = 3,
    kReverse = 4,
    kSort = 5,
    kSum = 6,
    kCount = 7,
    kMaximum = 8,
    kMinimum = 9,
};

const Registry<ListValue>& list_registry();

std::string to_string(const ListValue& v);

/// Reads the `[{"input": [[...]], "output": n}, ...]` example format.
std::vector<IoExample<ListValue>> parse_list_examples(const std::string& json_text);
std::vector<IoExample<ListValue>> load_list_examples(const std::string& path);

}  // namespace gw::dsl
