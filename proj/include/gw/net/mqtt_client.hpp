#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "gw/net/mqtt_codec.hpp"
#include "gw/net/socket.hpp"

namespace gw::net {

/// Minimal MQTT 3.1.1 client: QoS 0/1 publish, subscribe, background reader.
class MqttClient {
public:
    using MessageHandler = std::function<void(const mqtt::Publish&)>;
    using DisconnectHandler = std::function<void()>;

    explicit MqttClient(std::string client_id);
    ~MqttClient();
    MqttClient(const MqttClient&) = delete;
    MqttClient& operator=(const MqttClient&) = delete;

    /// Handlers must be set before connect().
    void on_message(MessageHandler h) { on_message_ = std::move(h); }
    void on_disconnect(DisconnectHandler h) { on_disconnect_ = std::move(h); }

    /// TCP connect plus CONNECT/CONNACK, all within `timeout`. Throws
    /// Timeout, NetError or mqtt::ProtocolError.
    void connect(const Endpoint& ep, Millis timeout, std::uint16_t keep_alive = 60);
    /// Returns the granted QoS codes.
    mqtt::Bytes subscribe(const std::string& filter, std::uint8_t qos, Millis timeout);
    /// QoS 1 waits for PUBACK.
    void publish(const std::string& topic, const mqtt::Bytes& payload, std::uint8_t qos = 0,
                 bool retain = false, Millis timeout = Millis(2000));
    void publish(const std::string& topic, const std::string& payload, std::uint8_t qos = 0) {
        publish(topic, mqtt::Bytes(payload.begin(), payload.end()), qos);
    }
    bool ping(Millis timeout);
    void disconnect();

    bool connected() const { return connected_; }
    const std::string& client_id() const { return client_id_; }

private:
    void reader();
    void send(const mqtt::Packet& p);
    std::uint16_t next_id();
    void close_and_join();

    std::string client_id_;
    MessageHandler on_message_;
    DisconnectHandler on_disconnect_;
    Socket socket_;
    std::thread reader_;
    std::atomic<bool> connected_{false};
    std::atomic<bool> closing_{false};
    mqtt::Decoder decoder_;

    std::mutex write_mutex_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::uint16_t next_id_ = 1;
    std::map<std::uint16_t, std::optional<mqtt::Packet>> pending_;
    std::uint64_t pongs_ = 0;
};

}  // namespace gw::net
