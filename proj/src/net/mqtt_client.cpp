#include "gw/net/mqtt_client.hpp"

#include <chrono>

#include <sys/socket.h>

namespace gw::net {
namespace {

using SteadyClock = std::chrono::steady_clock;

Millis remaining(SteadyClock::time_point deadline) {
    auto left = std::chrono::duration_cast<Millis>(deadline - SteadyClock::now());
    return left.count() > 0 ? left : Millis(0);
}

}  // namespace

MqttClient::MqttClient(std::string client_id) : client_id_(std::move(client_id)) {}

MqttClient::~MqttClient() {
    on_disconnect_ = nullptr;
    disconnect();
}

void MqttClient::connect(const Endpoint& ep, Millis timeout, std::uint16_t keep_alive) {
    if (connected_ || reader_.joinable()) throw NetError("client already connected");
    auto deadline = SteadyClock::now() + timeout;
    Socket s = tcp_connect(ep, timeout);
    auto bytes = mqtt::encode(mqtt::Connect{client_id_, keep_alive, true});
    send_all(s, bytes.data(), bytes.size());

    mqtt::Decoder decoder;
    std::uint8_t buf[512];
    for (;;) {
        if (!wait_readable(s, remaining(deadline))) throw Timeout("no CONNACK from " + ep.str());
        ssize_t n = ::recv(s.fd(), buf, sizeof buf, 0);
        if (n <= 0) throw NetError("connection closed by " + ep.str() + " before CONNACK");
        decoder.feed(buf, static_cast<std::size_t>(n));
        if (auto p = decoder.next()) {
            auto* ack = std::get_if<mqtt::ConnAck>(&*p);
            if (ack == nullptr) throw mqtt::ProtocolError("expected CONNACK");
            if (ack->return_code != 0) {
                throw NetError("connection refused, code " + std::to_string(ack->return_code));
            }
            break;
        }
    }
    socket_ = std::move(s);
    decoder_ = std::move(decoder);
    closing_ = false;
    connected_ = true;
    reader_ = std::thread([this] { reader(); });
}

void MqttClient::send(const mqtt::Packet& p) {
    if (!connected_) throw NetError("not connected");
    auto bytes = mqtt::encode(p);
    std::lock_guard lock(write_mutex_);
    send_all(socket_, bytes.data(), bytes.size());
}

std::uint16_t MqttClient::next_id() {
    std::uint16_t id = next_id_++;
    if (next_id_ == 0) next_id_ = 1;
    return id;
}

mqtt::Bytes MqttClient::subscribe(const std::string& filter, std::uint8_t qos, Millis timeout) {
    std::uint16_t id;
    {
        std::lock_guard lock(mutex_);
        id = next_id();
        pending_[id];
    }
    send(mqtt::Subscribe{id, {{filter, qos}}});
    std::unique_lock lock(mutex_);
    bool ok = cv_.wait_for(lock, timeout, [&] { return pending_[id].has_value() || !connected_; });
    auto result = std::move(pending_[id]);
    pending_.erase(id);
    if (!ok || !result) throw Timeout("no SUBACK for " + filter);
    auto* ack = std::get_if<mqtt::SubAck>(&*result);
    if (ack == nullptr) throw mqtt::ProtocolError("expected SUBACK");
    return ack->codes;
}

void MqttClient::publish(const std::string& topic, const mqtt::Bytes& payload, std::uint8_t qos,
                         bool retain, Millis timeout) {
    if (qos > 1) throw std::invalid_argument("QoS 2 is not supported");
    if (qos == 0) {
        send(mqtt::Publish{topic, payload, 0, 0, retain, false});
        return;
    }
    std::uint16_t id;
    {
        std::lock_guard lock(mutex_);
        id = next_id();
        pending_[id];
    }
    send(mqtt::Publish{topic, payload, 1, id, retain, false});
    std::unique_lock lock(mutex_);
    bool ok = cv_.wait_for(lock, timeout, [&] { return pending_[id].has_value() || !connected_; });
    bool acked = ok && pending_[id].has_value();
    pending_.erase(id);
    if (!acked) throw Timeout("no PUBACK for " + topic);
}

bool MqttClient::ping(Millis timeout) {
    std::uint64_t before;
    {
        std::lock_guard lock(mutex_);
        before = pongs_;
    }
    send(mqtt::PingReq{});
    std::unique_lock lock(mutex_);
    return cv_.wait_for(lock, timeout, [&] { return pongs_ > before || !connected_; }) && pongs_ > before;
}

void MqttClient::reader() {
    std::uint8_t buf[4096];
    for (;;) {
        ssize_t n = ::recv(socket_.fd(), buf, sizeof buf, 0);
        if (n <= 0) break;
        decoder_.feed(buf, static_cast<std::size_t>(n));
        try {
            while (auto p = decoder_.next()) {
                if (auto* pub = std::get_if<mqtt::Publish>(&*p)) {
                    if (pub->qos == 1) {
                        try {
                            send(mqtt::PubAck{pub->packet_id});
                        } catch (const NetError&) {
                        }
                    }
                    if (on_message_) on_message_(*pub);
                } else if (auto* ack = std::get_if<mqtt::PubAck>(&*p)) {
                    std::lock_guard lock(mutex_);
                    auto it = pending_.find(ack->packet_id);
                    if (it != pending_.end()) it->second = *p;
                    cv_.notify_all();
                } else if (auto* sub = std::get_if<mqtt::SubAck>(&*p)) {
                    std::lock_guard lock(mutex_);
                    auto it = pending_.find(sub->packet_id);
                    if (it != pending_.end()) it->second = *p;
                    cv_.notify_all();
                } else if (std::holds_alternative<mqtt::PingResp>(*p)) {
                    std::lock_guard lock(mutex_);
                    ++pongs_;
                    cv_.notify_all();
                }
            }
        } catch (const mqtt::ProtocolError&) {
            break;
        }
    }
    {
        std::lock_guard lock(mutex_);
        connected_ = false;
        cv_.notify_all();
    }
    if (!closing_ && on_disconnect_) on_disconnect_();
}

void MqttClient::close_and_join() {
    socket_.shutdown();
    if (reader_.joinable() && reader_.get_id() != std::this_thread::get_id()) reader_.join();
    socket_.close();
}

void MqttClient::disconnect() {
    closing_ = true;
    if (connected_) {
        try {
            send(mqtt::Disconnect{});
        } catch (const NetError&) {
        }
    }
    close_and_join();
    connected_ = false;
}

}  // namespace gw::net
