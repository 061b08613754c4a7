#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gw/net/coap_codec.hpp"
#include "gw/net/mqtt_broker.hpp"
#include "gw/net/socket.hpp"

#include <netinet/in.h>

namespace gw::net {

struct CoapServerStats {
    std::uint64_t pings = 0;
    std::uint64_t dropped_pings = 0;
    std::uint64_t requests = 0;
    std::uint64_t notifications = 0;
};

/// In-process CoAP server on loopback UDP. Serves GET, observe and
/// /.well-known/core; empty CON pings are answered with RST. Fault rates
/// apply to pings (the adapter's handshake).
class SimCoapServer {
public:
    explicit SimCoapServer(BrokerFaults faults = {}, std::string ip = "127.0.0.1", std::uint16_t port = 0);
    ~SimCoapServer();
    SimCoapServer(const SimCoapServer&) = delete;
    SimCoapServer& operator=(const SimCoapServer&) = delete;

    Endpoint endpoint() const { return {ip_, port_}; }
    std::string uri(const std::string& path) const;

    /// Creates or updates a resource and notifies its observers.
    void set_resource(const std::string& path, const std::string& payload,
                      std::uint32_t content_format = coap::format::TextPlain);
    std::size_t observer_count() const;
    bool wait_for_observers(std::size_t n, Millis timeout);
    void set_faults(BrokerFaults faults);
    CoapServerStats stats() const;
    void stop();

private:
    struct Resource {
        std::string payload;
        std::uint32_t content_format = 0;
        std::uint32_t sequence = 0;
    };
    struct Observer {
        sockaddr_in addr{};
        coap::Bytes token;
    };

    void loop();
    void handle(const coap::Message& req, const sockaddr_in& from);
    void send_to(const coap::Message& m, const sockaddr_in& to);

    std::string ip_;
    std::uint16_t port_ = 0;
    Socket socket_;
    std::thread thread_;
    std::atomic<bool> running_{true};

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::map<std::string, Resource> resources_;
    std::map<std::string, std::vector<Observer>> observers_;
    std::uint16_t next_mid_ = 1;
    BrokerFaults faults_;
    std::mt19937_64 rng_;
    CoapServerStats stats_;
};

}  // namespace gw::net
