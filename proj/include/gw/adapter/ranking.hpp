#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "gw/adapter/adapter.hpp"

namespace gw::adapter {

using Micros = std::chrono::microseconds;

/// One handshake attempt. `elapsed_us` is wall time for real transports
/// and modelled time for simulated ones.
struct Attempt {
    std::shared_ptr<AdapterInstance> session;
    std::int64_t elapsed_us = 0;
    std::string error;
};

class Connector {
public:
    virtual ~Connector() = default;
    virtual Attempt attempt(const Endpoint& endpoint, Micros timeout) = 0;
};

struct AttemptResult {
    std::shared_ptr<AdapterInstance> session;
    std::int64_t elapsed_us = 0;
    /// Per-attempt outcomes, in order.
    std::vector<Attempt> attempts;
    bool success() const { return session != nullptr; }
};

/// Up to policy.attempts tries, each bounded by policy.timeout_s.
AttemptResult attempt_connect(Connector& connector, const Endpoint& endpoint, const RetryPolicy& policy);

struct AdapterDescriptor {
    std::string protocol;
    /// Tie-break position; lower goes first.
    int fixed_order = 0;
    std::uint64_t usage_count = 0;
    RetryPolicy retry;
    std::shared_ptr<Connector> connector;
};

class DuplicateAdapter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Descriptors ordered by usage_count descending, ties by fixed_order.
class ProtocolRanking {
public:
    /// fixed_order < 0 appends after the existing descriptors.
    void add(AdapterDescriptor d);
    std::vector<AdapterDescriptor> ranked() const;
    std::vector<std::string> order() const;
    void record_use(const std::string& protocol);
    std::uint64_t usage(const std::string& protocol) const;
    void set_policy(const std::string& protocol, RetryPolicy policy);
    bool contains(const std::string& protocol) const;
    std::size_t size() const;

private:
    void sort_locked();
    AdapterDescriptor& find_locked(const std::string& protocol);

    mutable std::mutex mutex_;
    std::vector<AdapterDescriptor> list_;
};

struct AttemptLog {
    std::string protocol;
    int attempts = 0;
    std::int64_t elapsed_us = 0;
    bool success = false;
    std::vector<std::string> errors;
};

class ConnectFailure : public std::runtime_error {
public:
    explicit ConnectFailure(std::vector<AttemptLog> log);
    const std::vector<AttemptLog>& log() const { return log_; }

private:
    std::vector<AttemptLog> log_;
};

struct ConnectResult {
    std::string protocol;
    std::shared_ptr<AdapterInstance> session;
    /// Sum over every attempted rank.
    std::int64_t elapsed_us = 0;
    std::size_t rank = 0;
    std::vector<AttemptLog> log;
};

/// Tries adapters in rank order; the first success bumps its usage count.
/// `only` restricts the search to one protocol. Host names are resolved
/// before any adapter sees the endpoint.
ConnectResult connect_ranked(ProtocolRanking& ranking, const Endpoint& endpoint,
                             const std::string& only = "");

/// Mean elapsed time of the failed entries, in seconds; 0 when none failed.
double mean_failure_s(const std::vector<AttemptLog>& log);
/// Search time to reach `rank` (1-based): (rank - 1) * mean_failure + success.
std::int64_t rank_cost_us(std::size_t rank, std::int64_t mean_failure_us, std::int64_t success_us);

}  // namespace gw::adapter
