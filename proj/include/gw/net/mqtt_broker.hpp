#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gw/net/mqtt_codec.hpp"
#include "gw/net/socket.hpp"

namespace gw::net {

struct BrokerFaults {
    /// Probability that a CONNECT is answered by closing the connection.
    double connect_failure_rate = 0.0;
    /// Delay before every CONNACK.
    Millis connack_delay{0};
    /// Probability of an extra slow-start delay before a CONNACK.
    double slow_start_rate = 0.0;
    Millis slow_start_delay{0};
    std::uint64_t seed = 1;
};

struct BrokerStats {
    std::uint64_t connections = 0;
    std::uint64_t refused = 0;
    std::uint64_t published = 0;
    std::uint64_t delivered = 0;
};

/// In-process MQTT 3.1.1 broker on loopback: QoS 0/1 routing, wildcard
/// subscriptions, retained messages and seeded fault injection.
class SimMqttBroker {
public:
    explicit SimMqttBroker(BrokerFaults faults = {}, std::string ip = "127.0.0.1",
                           std::uint16_t port = 0);
    ~SimMqttBroker();
    SimMqttBroker(const SimMqttBroker&) = delete;
    SimMqttBroker& operator=(const SimMqttBroker&) = delete;

    Endpoint endpoint() const { return {ip_, port_}; }

    /// Routes a message as if a device had published it.
    void publish(const std::string& topic, const mqtt::Bytes& payload, std::uint8_t qos = 0,
                 bool retain = false);
    void publish(const std::string& topic, const std::string& payload, std::uint8_t qos = 0) {
        publish(topic, mqtt::Bytes(payload.begin(), payload.end()), qos);
    }

    /// Blocks until at least `n` subscriptions are active.
    bool wait_for_subscriptions(std::size_t n, Millis timeout);
    void set_faults(BrokerFaults faults);
    /// Drops every client connection (the listener stays up).
    void kick_all();
    BrokerStats stats() const;
    void stop();

private:
    struct Session {
        Socket socket;
        std::mutex write_mutex;
        std::vector<std::pair<std::string, std::uint8_t>> subscriptions;
        std::uint16_t next_id = 1;
        std::thread thread;
        std::atomic<bool> done{false};
    };

    void accept_loop();
    void serve(Session* s);
    void route(const mqtt::Publish& p);
    bool send(Session* s, const mqtt::Packet& p);
    void reap();

    std::string ip_;
    std::uint16_t port_ = 0;
    Socket listener_;
    std::thread acceptor_;
    std::atomic<bool> running_{true};

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::list<std::shared_ptr<Session>> sessions_;
    std::map<std::string, mqtt::Publish> retained_;
    BrokerFaults faults_;
    std::mt19937_64 rng_;
    BrokerStats stats_;
};

}  // namespace gw::net
