#pragma once

#include <atomic>
#include <condition_variable>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gw/adapter/ranking.hpp"
#include "gw/context/context.hpp"
#include "gw/daemon/config.hpp"
#include "gw/daemon/stats.hpp"
#include "gw/device/device_manager.hpp"
#include "gw/discovery/discovery.hpp"
#include "gw/dsl/program.hpp"
#include "gw/net/coap_server.hpp"
#include "gw/net/mqtt_broker.hpp"

namespace gw::daemon {

/// Supervisor: owns the device manager, discovery, the protocol ranking
/// and one link thread per broker. Message flow is
/// adapter dispatch -> discovery -> device manager -> context placement.
class Gateway {
public:
    explicit Gateway(GatewayConfig config);
    ~Gateway();
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Loads the clustering program (or synthesizes it from the example
    /// file), starts the harness if enabled and links every broker.
    /// Throws ConfigError when no clustering program can be obtained.
    void start();
    /// Stops links, drains the classification queue, archives every
    /// cluster and writes stats and contexts. Idempotent.
    void stop();

    /// One admin command line; returns the text to print.
    std::string execute(const std::string& line);

    RunStats stats() const;
    /// Writes stats to config.stats_path when set.
    void write_stats() const;

    device::DeviceManager& device_manager() { return dm_; }
    discovery::Discovery& discovery() { return discovery_; }
    adapter::ProtocolRanking& ranking() { return ranking_; }
    std::vector<std::shared_ptr<adapter::AdapterInstance>> sessions() const;
    bool wait_for_sessions(std::size_t n, net::Millis timeout);
    /// Waits for the classification queue to empty.
    bool settle(net::Millis timeout);
    context::ContextSet contexts() const;

    net::SimMqttBroker* harness_broker() { return harness_mqtt_.get(); }
    net::SimCoapServer* harness_coap() { return harness_coap_.get(); }

private:
    struct Link {
        discovery::BrokerEntry entry;
        std::thread thread;
    };

    void link_loop(const discovery::BrokerEntry& entry);
    void add_link(const discovery::BrokerEntry& entry);
    void record_connect(const std::vector<adapter::AttemptLog>& log, std::size_t rank, std::int64_t elapsed_us);
    void retire(const std::shared_ptr<adapter::AdapterInstance>& s);
    void on_classified(const discovery::ClassificationRequest& req, const discovery::Outcome& outcome);
    void place_sensor(std::int64_t sa_id, const discovery::ClassificationRequest& req);
    void regenerate(const std::string& examples_path);

    GatewayConfig config_;
    device::DeviceManager dm_;
    discovery::Discovery discovery_;
    adapter::ProtocolRanking ranking_;
    std::unique_ptr<net::SimMqttBroker> harness_mqtt_;
    std::unique_ptr<net::SimCoapServer> harness_coap_;

    std::atomic<bool> started_{false};
    std::atomic<bool> stopping_{false};
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::list<Link> links_;
    std::vector<std::shared_ptr<adapter::AdapterInstance>> sessions_;
    RunStats totals_;

    mutable std::mutex context_mutex_;
    context::ContextSet contexts_;
    std::optional<dsl::DslProgram> placement_;
};

/// Daemon loop: admin commands from `in_fd` (one per line), periodic
/// eviction and stats dumps, until `stop` is raised or "quit" is read.
/// Returns the process exit code.
int run_daemon(Gateway& gateway, int in_fd, std::ostream& out, const std::atomic<bool>& stop);

}  // namespace gw::daemon
