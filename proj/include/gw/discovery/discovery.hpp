#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "gw/adapter/adapter.hpp"
#include "gw/device/device_manager.hpp"
#include "gw/net/socket.hpp"

namespace gw::discovery {

using adapter::ClassificationRequest;

struct SaCreated {
    std::int64_t sa_id = 0;
    std::int64_t cluster_id = 0;
    /// False when the resource already had an SA.
    bool created = true;
    friend bool operator==(const SaCreated&, const SaCreated&) = default;
};

class AuthenticationFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class AddedBy { Config, Runtime };

struct BrokerEntry {
    net::Endpoint address;
    std::optional<std::string> protocol_hint;
    AddedBy added_by = AddedBy::Config;
};

/// Parses "ip:port" and an optional "mqtt" / "coap" hint. Throws
/// net::InvalidAddress.
BrokerEntry make_broker_entry(const std::string& address, const std::string& protocol = "",
                              AddedBy by = AddedBy::Runtime);

/// Path part of a resource id: MQTT topics as-is, CoAP URIs without scheme
/// and authority.
std::string resource_path(const std::string& resource_id);
/// Longest proper path prefix: "kista/temp/7" -> "kista/temp".
std::string location_of(const std::string& resource_id);
/// 1 temp, 2 humidity, 3 light, 4 motion, 5 pressure, 9 anything else.
std::int64_t type_code(const std::string& segment);
/// A JSON integer array payload is taken verbatim. Otherwise
/// [type code of the second-to-last segment, numeric last segment or 0,
///  reading rounded to an integer or 0].
std::vector<std::int64_t> sa_attributes(const std::string& resource_id, const adapter::Bytes& payload);

struct DiscoveryOptions {
    /// Resource path prefixes admitted; empty admits everything.
    std::vector<std::string> allowlist;
};

struct DiscoveryStats {
    std::uint64_t requests = 0;
    std::uint64_t created = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t rejected = 0;
    /// Requests that failed for other reasons (e.g. no clustering program).
    std::uint64_t errors = 0;
};

using Outcome = std::variant<SaCreated, AuthenticationFailed>;

/// Classification layer: turns unmatched resources into Sensor Agents and
/// owns the broker list. SA creation is serialized.
class Discovery {
public:
    using ResultHandler = std::function<void(const ClassificationRequest&, const Outcome&)>;
    using BrokerHandler = std::function<void(const BrokerEntry&)>;

    explicit Discovery(device::DeviceManager& dm, DiscoveryOptions options = {});
    ~Discovery();
    Discovery(const Discovery&) = delete;
    Discovery& operator=(const Discovery&) = delete;

    /// Creates (or finds) the SA, registers it with the request's adapter,
    /// then hands it to the device manager. Throws AuthenticationFailed.
    SaCreated handle_unsubscribed(const ClassificationRequest& req);

    /// Queue consumer; results go to the handler in submission order.
    void on_result(ResultHandler h);
    void start();
    void submit(ClassificationRequest req);
    /// Waits until the queue is empty and the consumer idle.
    bool drain(net::Millis timeout);
    void stop();

    /// True for a new address. Duplicates are no-ops.
    bool add_broker(const BrokerEntry& entry);
    void on_broker_added(BrokerHandler h);
    std::vector<BrokerEntry> brokers() const;

    std::optional<std::int64_t> sa_for(const std::string& resource_id) const;
    std::map<std::string, std::int64_t> resources() const;
    DiscoveryStats stats() const;
    std::vector<std::string> audit_log() const;

private:
    bool allowed(const std::string& resource_id) const;
    void consume();

    device::DeviceManager& dm_;
    DiscoveryOptions options_;

    mutable std::mutex mutex_;
    std::map<std::string, std::int64_t> by_resource_;
    std::int64_t next_id_ = 1;
    DiscoveryStats stats_;
    std::vector<std::string> audit_;
    std::vector<BrokerEntry> brokers_;
    BrokerHandler broker_handler_;

    std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::deque<ClassificationRequest> queue_;
    bool busy_ = false;
    bool running_ = false;
    std::thread worker_;
    ResultHandler result_handler_;
};

}  // namespace gw::discovery
