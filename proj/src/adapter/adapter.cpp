#include "gw/adapter/adapter.hpp"

#include <cmath>
#include <mutex>

namespace gw::adapter {
namespace {

std::atomic<std::uint64_t> g_next_instance{1};

}  // namespace

void RetryPolicy::validate() const {
    if (!(timeout_s > 0) || !std::isfinite(timeout_s)) {
        throw std::invalid_argument("retry timeout must be a positive number of seconds");
    }
    if (attempts < 1) throw std::invalid_argument("retry attempts must be at least 1");
}

RetryPolicy default_policy(const std::string& protocol, bool aggressive) {
    if (protocol == "mqtt") return aggressive ? RetryPolicy{0.5, 2} : RetryPolicy{0.8, 1};
    if (protocol == "coap") return aggressive ? RetryPolicy{0.1, 2} : RetryPolicy{0.5, 1};
    return RetryPolicy{};
}

void DispatchTable::register_sa(const std::string& resource_id, std::int64_t sa_id) {
    std::unique_lock lock(mutex_);
    map_[resource_id] = sa_id;
}

std::optional<std::int64_t> DispatchTable::lookup(const std::string& resource_id) const {
    std::shared_lock lock(mutex_);
    auto it = map_.find(resource_id);
    if (it == map_.end()) return std::nullopt;
    return it->second;
}

std::size_t DispatchTable::size() const {
    std::shared_lock lock(mutex_);
    return map_.size();
}

std::map<std::string, std::int64_t> DispatchTable::snapshot() const {
    std::shared_lock lock(mutex_);
    return map_;
}

AdapterInstance::AdapterInstance(std::string protocol, Endpoint endpoint)
    : id_(g_next_instance++), protocol_(std::move(protocol)), endpoint_(std::move(endpoint)) {}

void AdapterInstance::register_sa(const std::string& resource_id, std::int64_t sa_id) {
    table_.register_sa(resource_id, sa_id);
}

DispatchOutcome AdapterInstance::dispatch(const InboundMessage& msg) {
    ++received_;
    if (!msg.resource_id) {
        ++malformed_;
        return Malformed{};
    }
    if (auto sa = table_.lookup(*msg.resource_id)) {
        ++delivered_;
        if (handlers_.delivered) handlers_.delivered(*sa, msg);
        return Delivered{*sa};
    }
    ClassificationRequest req{*msg.resource_id, msg.payload, id_, weak_from_this(), Clock::now()};
    ++unmatched_;
    if (handlers_.unmatched) handlers_.unmatched(req);
    return req;
}

DispatchCounters AdapterInstance::counters() const {
    return {received_.load(), delivered_.load(), unmatched_.load(), malformed_.load()};
}

void AdapterInstance::notify_lost() {
    if (handlers_.lost) handlers_.lost();
}

}  // namespace gw::adapter
