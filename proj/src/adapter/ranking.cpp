#include "gw/adapter/ranking.hpp"

#include <algorithm>

namespace gw::adapter {

AttemptResult attempt_connect(Connector& connector, const Endpoint& endpoint, const RetryPolicy& policy) {
    policy.validate();
    auto timeout = Micros(static_cast<std::int64_t>(policy.timeout_s * 1e6));
    AttemptResult result;
    for (int i = 0; i < policy.attempts; ++i) {
        Attempt a = connector.attempt(endpoint, timeout);
        result.elapsed_us += a.elapsed_us;
        bool ok = a.session != nullptr;
        if (ok) result.session = a.session;
        result.attempts.push_back(std::move(a));
        if (ok) break;
    }
    return result;
}

void ProtocolRanking::add(AdapterDescriptor d) {
    d.retry.validate();
    if (!d.connector) throw std::invalid_argument("adapter '" + d.protocol + "' has no connector");
    std::lock_guard lock(mutex_);
    for (const auto& e : list_) {
        if (e.protocol == d.protocol) throw DuplicateAdapter("adapter already registered: " + d.protocol);
    }
    if (d.fixed_order < 0) {
        int top = -1;
        for (const auto& e : list_) top = std::max(top, e.fixed_order);
        d.fixed_order = top + 1;
    }
    list_.push_back(std::move(d));
    sort_locked();
}

void ProtocolRanking::sort_locked() {
    std::stable_sort(list_.begin(), list_.end(), [](const AdapterDescriptor& a, const AdapterDescriptor& b) {
        if (a.usage_count != b.usage_count) return a.usage_count > b.usage_count;
        return a.fixed_order < b.fixed_order;
    });
}

AdapterDescriptor& ProtocolRanking::find_locked(const std::string& protocol) {
    for (auto& e : list_) {
        if (e.protocol == protocol) return e;
    }
    throw std::invalid_argument("unknown protocol: " + protocol);
}

std::vector<AdapterDescriptor> ProtocolRanking::ranked() const {
    std::lock_guard lock(mutex_);
    return list_;
}

std::vector<std::string> ProtocolRanking::order() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& e : list_) out.push_back(e.protocol);
    return out;
}

void ProtocolRanking::record_use(const std::string& protocol) {
    std::lock_guard lock(mutex_);
    ++find_locked(protocol).usage_count;
    sort_locked();
}

std::uint64_t ProtocolRanking::usage(const std::string& protocol) const {
    std::lock_guard lock(mutex_);
    return const_cast<ProtocolRanking*>(this)->find_locked(protocol).usage_count;
}

void ProtocolRanking::set_policy(const std::string& protocol, RetryPolicy policy) {
    policy.validate();
    std::lock_guard lock(mutex_);
    find_locked(protocol).retry = policy;
}

bool ProtocolRanking::contains(const std::string& protocol) const {
    std::lock_guard lock(mutex_);
    return std::any_of(list_.begin(), list_.end(), [&](const auto& e) { return e.protocol == protocol; });
}

std::size_t ProtocolRanking::size() const {
    std::lock_guard lock(mutex_);
    return list_.size();
}

namespace {

std::string describe(const std::vector<AttemptLog>& log) {
    std::string s = "no adapter could connect (";
    for (std::size_t i = 0; i < log.size(); ++i) {
        if (i) s += ", ";
        s += log[i].protocol + ": " + std::to_string(log[i].attempts) + " attempts";
        if (!log[i].errors.empty()) s += ", " + log[i].errors.back();
    }
    return s + ")";
}

}  // namespace

ConnectFailure::ConnectFailure(std::vector<AttemptLog> log)
    : std::runtime_error(describe(log)), log_(std::move(log)) {}

ConnectResult connect_ranked(ProtocolRanking& ranking, const Endpoint& endpoint, const std::string& only) {
    auto order = ranking.ranked();
    if (order.empty()) throw std::logic_error("no adapters registered");
    if (!only.empty()) {
        std::erase_if(order, [&](const AdapterDescriptor& d) { return d.protocol != only; });
        if (order.empty()) throw std::invalid_argument("no adapter for protocol " + only);
    }
    Endpoint resolved{net::resolve_ipv4(endpoint.host), endpoint.port};

    ConnectResult result;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& d = order[i];
        AttemptResult r = attempt_connect(*d.connector, resolved, d.retry);
        AttemptLog entry{d.protocol, static_cast<int>(r.attempts.size()), r.elapsed_us, r.success(), {}};
        for (const auto& a : r.attempts) {
            if (!a.error.empty()) entry.errors.push_back(a.error);
        }
        result.log.push_back(std::move(entry));
        result.elapsed_us += r.elapsed_us;
        if (r.success()) {
            ranking.record_use(d.protocol);
            result.protocol = d.protocol;
            result.session = std::move(r.session);
            result.rank = i + 1;
            return result;
        }
    }
    throw ConnectFailure(std::move(result.log));
}

double mean_failure_s(const std::vector<AttemptLog>& log) {
    std::int64_t total = 0;
    std::size_t n = 0;
    for (const auto& e : log) {
        if (!e.success) {
            total += e.elapsed_us;
            ++n;
        }
    }
    return n == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(n) / 1e6;
}

std::int64_t rank_cost_us(std::size_t rank, std::int64_t mean_failure_us, std::int64_t success_us) {
    if (rank == 0) throw std::invalid_argument("rank is 1-based");
    return static_cast<std::int64_t>(rank - 1) * mean_failure_us + success_us;
}

}  // namespace gw::adapter
