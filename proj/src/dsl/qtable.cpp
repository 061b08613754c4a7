#include "gw/dsl/qtable.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

namespace gw::dsl {

QTable::QTable(double alpha, double initial_q) : alpha_(alpha), initial_q_(initial_q) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw DslError("alpha must lie in (0, 1]");
    }
    if (!std::isfinite(initial_q)) {
        throw DslError("initial_q must be finite");
    }
}

double QTable::q(const std::string& registry_id, int index) const {
    auto it = entries_.find({registry_id, index});
    return it == entries_.end() ? initial_q_ : it->second;
}

void QTable::set(const std::string& registry_id, int index, double value) {
    if (!std::isfinite(value)) {
        throw DslError("q values must be finite");
    }
    entries_[{registry_id, index}] = value;
}

void QTable::update(const DslProgram& program, double reward) {
    std::set<int> distinct(program.stages.begin(), program.stages.end());
    for (int f : distinct) {
        double cur = q(program.registry_id, f);
        set(program.registry_id, f, cur + alpha_ * (reward - cur));
    }
}

double QTable::score(const std::string& registry_id, std::span<const int> stages) const {
    if (stages.empty()) {
        return initial_q_;
    }
    std::vector<double> values;
    values.reserve(stages.size());
    for (int f : stages) {
        values.push_back(q(registry_id, f));
    }
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

}  // namespace gw::dsl
