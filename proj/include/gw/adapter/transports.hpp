#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <set>
#include <string>

#include "gw/adapter/ranking.hpp"
#include "gw/net/coap_client.hpp"
#include "gw/net/mqtt_client.hpp"

namespace gw::adapter {

/// MQTT session: subscribes to `filter` on start and dispatches every publish
/// by topic.
class MqttAdapter : public AdapterInstance {
public:
    MqttAdapter(Endpoint endpoint, std::string client_id, std::string filter);
    ~MqttAdapter() override;

    void connect(net::Millis timeout);
    void start() override;
    void close() override;
    bool alive() const override { return client_.connected(); }
    net::MqttClient& client() { return client_; }

private:
    net::MqttClient client_;
    std::string filter_;
};

/// CoAP session: discovers resources and observes each; resource ids are
/// full coap:// URIs.
class CoapAdapter : public AdapterInstance {
public:
    explicit CoapAdapter(Endpoint endpoint);
    ~CoapAdapter() override;

    bool handshake(net::Millis timeout);
    void start() override;
    /// Observes resources that appeared since the last call. Returns how many.
    std::size_t refresh(net::Millis timeout = net::Millis(1000));
    void close() override;
    bool alive() const override;
    /// Marks the session dead when a liveness ping goes unanswered.
    bool check(net::Millis timeout);

private:
    net::CoapClient client_;
    std::mutex mutex_;
    std::set<std::string> observed_;
    std::atomic<bool> alive_{true};
};

class MqttConnector : public Connector {
public:
    explicit MqttConnector(std::string client_prefix = "gateway", std::string filter = "#");
    Attempt attempt(const Endpoint& endpoint, Micros timeout) override;

private:
    std::string prefix_;
    std::string filter_;
    std::atomic<std::uint64_t> n_{0};
};

class CoapConnector : public Connector {
public:
    Attempt attempt(const Endpoint& endpoint, Micros timeout) override;
};

/// No I/O: every attempt takes `cost` of modelled time and succeeds or
/// fails as configured.
class SimulatedConnector : public Connector {
public:
    SimulatedConnector(std::string protocol, bool succeeds, Micros cost);
    Attempt attempt(const Endpoint& endpoint, Micros timeout) override;
    std::uint64_t calls() const { return calls_; }

private:
    std::string protocol_;
    bool succeeds_;
    Micros cost_;
    std::atomic<std::uint64_t> calls_{0};
};

}  // namespace gw::adapter
