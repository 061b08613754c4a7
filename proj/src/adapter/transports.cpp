#include "gw/adapter/transports.hpp"

#include <chrono>

namespace gw::adapter {
namespace {

using Steady = std::chrono::steady_clock;

std::int64_t since_us(Steady::time_point t0) {
    return std::chrono::duration_cast<Micros>(Steady::now() - t0).count();
}

net::Millis to_millis(Micros t) {
    auto ms = std::chrono::duration_cast<net::Millis>(t);
    return ms.count() > 0 ? ms : net::Millis(1);
}

bool valid_publish_topic(const std::string& topic) {
    return topic.find_first_of("+#") == std::string::npos;
}

}  // namespace

MqttAdapter::MqttAdapter(Endpoint endpoint, std::string client_id, std::string filter)
    : AdapterInstance("mqtt", std::move(endpoint)), client_(std::move(client_id)), filter_(std::move(filter)) {
    client_.on_message([this](const net::mqtt::Publish& p) {
        InboundMessage msg;
        if (valid_publish_topic(p.topic)) msg.resource_id = p.topic;
        msg.payload = p.payload;
        dispatch(msg);
    });
    client_.on_disconnect([this] { notify_lost(); });
}

MqttAdapter::~MqttAdapter() { client_.disconnect(); }

void MqttAdapter::connect(net::Millis timeout) { client_.connect(endpoint(), timeout); }

void MqttAdapter::start() { client_.subscribe(filter_, 1, net::Millis(2000)); }

void MqttAdapter::close() { client_.disconnect(); }

CoapAdapter::CoapAdapter(Endpoint endpoint) : AdapterInstance("coap", std::move(endpoint)) {}

CoapAdapter::~CoapAdapter() { client_.close(); }

bool CoapAdapter::handshake(net::Millis timeout) {
    client_.open(endpoint());
    return client_.ping(timeout);
}

void CoapAdapter::start() { refresh(); }

std::size_t CoapAdapter::refresh(net::Millis timeout) {
    std::size_t added = 0;
    for (const auto& path : client_.discover(timeout)) {
        {
            std::lock_guard lock(mutex_);
            if (observed_.count(path)) continue;
        }
        std::string uri = net::coap_uri(endpoint(), path);
        auto handler = [this, uri](const std::string&, const net::coap::Message& m) {
            dispatch(InboundMessage{uri, m.payload});
        };
        auto first = client_.observe(path, handler, timeout);
        if (first.code != net::coap::code::Content) continue;
        {
            std::lock_guard lock(mutex_);
            observed_.insert(path);
        }
        ++added;
        dispatch(InboundMessage{uri, first.payload});
    }
    return added;
}

void CoapAdapter::close() {
    alive_ = false;
    client_.close();
}

bool CoapAdapter::alive() const { return alive_; }

bool CoapAdapter::check(net::Millis timeout) {
    if (!alive_) return false;
    if (client_.ping(timeout)) return true;
    alive_ = false;
    notify_lost();
    return false;
}

MqttConnector::MqttConnector(std::string client_prefix, std::string filter)
    : prefix_(std::move(client_prefix)), filter_(std::move(filter)) {}

Attempt MqttConnector::attempt(const Endpoint& endpoint, Micros timeout) {
    auto t0 = Steady::now();
    Attempt a;
    try {
        auto s = std::make_shared<MqttAdapter>(endpoint, prefix_ + "-" + std::to_string(++n_), filter_);
        s->connect(to_millis(timeout));
        a.session = s;
    } catch (const std::exception& e) {
        a.error = e.what();
    }
    a.elapsed_us = since_us(t0);
    return a;
}

Attempt CoapConnector::attempt(const Endpoint& endpoint, Micros timeout) {
    auto t0 = Steady::now();
    Attempt a;
    try {
        auto s = std::make_shared<CoapAdapter>(endpoint);
        if (s->handshake(to_millis(timeout))) {
            a.session = s;
        } else {
            a.error = "no reply to CoAP ping from " + endpoint.str();
        }
    } catch (const std::exception& e) {
        a.error = e.what();
    }
    a.elapsed_us = since_us(t0);
    return a;
}

SimulatedConnector::SimulatedConnector(std::string protocol, bool succeeds, Micros cost)
    : protocol_(std::move(protocol)), succeeds_(succeeds), cost_(cost) {}

Attempt SimulatedConnector::attempt(const Endpoint& endpoint, Micros) {
    ++calls_;
    Attempt a;
    a.elapsed_us = cost_.count();
    if (succeeds_) {
        a.session = std::make_shared<AdapterInstance>(protocol_, endpoint);
    } else {
        a.error = "simulated failure";
    }
    return a;
}

}  // namespace gw::adapter
