#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>

#include "gw/dsl/program.hpp"

namespace gw::dsl {

/// Stateless per-function values that order the synthesis enumeration.
/// Absent entries read as initial_q.
class QTable {
public:
    static constexpr double kDefaultAlpha = 0.3;

    explicit QTable(double alpha = kDefaultAlpha, double initial_q = 0.0);

    double alpha() const noexcept { return alpha_; }
    double initial_q() const noexcept { return initial_q_; }

    double q(const std::string& registry_id, int index) const;
    void set(const std::string& registry_id, int index, double value);

    /// q(f) <- q(f) + alpha * (reward - q(f)) once per distinct f in program.
    void update(const DslProgram& program, double reward);

    /// Mean q over the stages (empty pipeline scores initial_q). The mean
    /// is summed in sorted order so permutations of a pipeline tie exactly.
    double score(const std::string& registry_id, std::span<const int> stages) const;

    const std::map<std::pair<std::string, int>, double>& entries() const noexcept {
        return entries_;
    }

private:
    double alpha_;
    double initial_q_;
    std::map<std::pair<std::string, int>, double> entries_;
};

}  // namespace gw::dsl
