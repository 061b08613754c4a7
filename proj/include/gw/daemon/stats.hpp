#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gw/adapter/adapter.hpp"
#include "gw/net/socket.hpp"

namespace gw::daemon {

struct ProtocolCounters {
    std::uint64_t trials = 0;
    std::uint64_t attempts = 0;
    std::uint64_t successes = 0;
    std::uint64_t first_attempt_failures = 0;
    std::uint64_t complete_failures = 0;
    friend bool operator==(const ProtocolCounters&, const ProtocolCounters&) = default;
};

struct RankCounters {
    std::uint64_t connects = 0;
    std::int64_t elapsed_us = 0;
    friend bool operator==(const RankCounters&, const RankCounters&) = default;
};

struct RunStats {
    std::map<std::string, ProtocolCounters> protocols;
    /// 1-based rank at which connect_ranked succeeded.
    std::map<std::size_t, RankCounters> ranks;
    std::uint64_t received = 0;
    std::uint64_t delivered = 0;
    std::uint64_t classification_requests = 0;
    std::uint64_t malformed = 0;
    std::uint64_t dropped = 0;
    std::uint64_t sa_created = 0;
    std::uint64_t sa_duplicates = 0;
    std::uint64_t rejected = 0;
    std::uint64_t synthesis_runs = 0;
    std::uint64_t synthesis_successes = 0;
    std::uint64_t candidates_visited = 0;

    /// Pretty JSON with a fixed key order.
    std::string to_json() const;
    friend bool operator==(const RunStats&, const RunStats&) = default;
};

struct SimulationParams {
    std::string protocol = "mqtt";
    std::uint64_t trials = 1000;
    adapter::RetryPolicy policy;
    /// Per-attempt failure probability of the first attempt.
    double failure_rate = 0.0;
    /// Failure probability of each retry; defaults to failure_rate.
    std::optional<double> retry_failure_rate;
    std::uint64_t seed = 1;
};

/// Bernoulli attempt failures under a retry policy. Deterministic for a
/// given seed.
RunStats simulate_connections(const SimulationParams& params);

/// Uniform [0, 1) from the top 53 bits of a 64-bit draw.
double unit_uniform(std::uint64_t draw);

class DegenerateInput : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// 1-based ranks, ties get the mean of the positions they span.
std::vector<double> average_ranks(std::span<const double> xs);
/// Pearson correlation of the average-rank vectors.
double spearman(std::span<const double> xs, std::span<const double> ys);

class Unreachable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ProbeResult {
    std::size_t sent = 0;
    std::size_t received = 0;
    double mean_s = 0.0;
    /// Population standard deviation.
    double std_s = 0.0;
};

/// UDP round trips to an echo service. Throws std::invalid_argument for
/// count 0 and Unreachable when no probe comes back.
ProbeResult latency_probe(const net::Endpoint& target, std::size_t count,
                          net::Millis timeout = net::Millis(500));

class UdpEchoServer {
public:
    explicit UdpEchoServer(std::string ip = "127.0.0.1", std::uint16_t port = 0);
    ~UdpEchoServer();
    UdpEchoServer(const UdpEchoServer&) = delete;
    UdpEchoServer& operator=(const UdpEchoServer&) = delete;
    net::Endpoint endpoint() const { return {ip_, port_}; }
    void stop();

private:
    std::string ip_;
    std::uint16_t port_ = 0;
    net::Socket socket_;
    std::atomic<bool> running_{true};
    std::thread thread_;
};

/// Reconnect delay after `failures` consecutive failures: 1 s doubling,
/// capped at 30 s.
std::chrono::milliseconds backoff_delay(unsigned failures);

}  // namespace gw::daemon
