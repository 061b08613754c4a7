#include "gw/net/mqtt_broker.hpp"

#include <algorithm>
#include <cerrno>
#include <optional>

#include <sys/socket.h>

namespace gw::net {
namespace {

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

SimMqttBroker::SimMqttBroker(BrokerFaults faults, std::string ip, std::uint16_t port)
    : ip_(std::move(ip)), faults_(faults), rng_(faults.seed) {
    listener_ = tcp_listen(ip_, port, &port_);
    acceptor_ = std::thread([this] { accept_loop(); });
}

SimMqttBroker::~SimMqttBroker() { stop(); }

void SimMqttBroker::stop() {
    if (!running_.exchange(false)) return;
    listener_.shutdown();
    if (acceptor_.joinable()) acceptor_.join();
    std::list<std::shared_ptr<Session>> sessions;
    {
        std::lock_guard lock(mutex_);
        sessions.swap(sessions_);
    }
    for (auto& s : sessions) s->socket.shutdown();
    for (auto& s : sessions) {
        if (s->thread.joinable()) s->thread.join();
    }
    listener_.close();
}

void SimMqttBroker::accept_loop() {
    while (running_) {
        int fd = ::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0) {
            if (!running_) return;
            if (errno == EINTR || errno == ECONNABORTED) continue;
            return;
        }
        reap();
        auto session = std::make_shared<Session>();
        session->socket = Socket(fd);
        Session* raw = session.get();
        {
            std::lock_guard lock(mutex_);
            if (!running_) return;
            ++stats_.connections;
            sessions_.push_back(std::move(session));
        }
        raw->thread = std::thread([this, raw] { serve(raw); });
    }
}

void SimMqttBroker::reap() {
    std::list<std::shared_ptr<Session>> finished;
    {
        std::lock_guard lock(mutex_);
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            if ((*it)->done) {
                finished.push_back(std::move(*it));
                it = sessions_.erase(it);
            } else {
                ++it;
            }
        }
    }
    for (auto& s : finished) {
        if (s->thread.joinable()) s->thread.join();
    }
}

bool SimMqttBroker::send(Session* s, const mqtt::Packet& p) {
    auto bytes = mqtt::encode(p);
    std::lock_guard lock(s->write_mutex);
    try {
        send_all(s->socket, bytes.data(), bytes.size());
        return true;
    } catch (const NetError&) {
        return false;
    }
}

void SimMqttBroker::serve(Session* s) {
    mqtt::Decoder decoder;
    bool connected = false;
    std::uint8_t buf[4096];
    auto finish = [&] {
        {
            std::lock_guard lock(mutex_);
            s->subscriptions.clear();
        }
        s->socket.shutdown();
        s->done = true;
        cv_.notify_all();
    };

    while (running_) {
        ssize_t n = ::recv(s->socket.fd(), buf, sizeof buf, 0);
        if (n <= 0) break;
        decoder.feed(buf, static_cast<std::size_t>(n));
        try {
            while (auto packet = decoder.next()) {
                if (!connected) {
                    if (!std::holds_alternative<mqtt::Connect>(*packet)) {
                        finish();
                        return;
                    }
                    bool refuse;
                    Millis delay;
                    {
                        std::lock_guard lock(mutex_);
                        refuse = uniform(rng_) < faults_.connect_failure_rate;
                        delay = faults_.connack_delay;
                        if (uniform(rng_) < faults_.slow_start_rate) delay += faults_.slow_start_delay;
                        if (refuse) ++stats_.refused;
                    }
                    if (refuse) {
                        finish();
                        return;
                    }
                    if (delay.count() > 0) std::this_thread::sleep_for(delay);
                    send(s, mqtt::ConnAck{false, 0});
                    connected = true;
                    continue;
                }
                if (auto* p = std::get_if<mqtt::Publish>(&*packet)) {
                    if (p->qos == 1) send(s, mqtt::PubAck{p->packet_id});
                    route(*p);
                } else if (auto* sub = std::get_if<mqtt::Subscribe>(&*packet)) {
                    mqtt::SubAck ack{sub->packet_id, {}};
                    std::vector<mqtt::Publish> retained;
                    {
                        std::lock_guard lock(mutex_);
                        for (const auto& [filter, qos] : sub->filters) {
                            std::uint8_t granted = std::min<std::uint8_t>(qos, 1);
                            auto it = std::find_if(s->subscriptions.begin(), s->subscriptions.end(),
                                                   [&](const auto& e) { return e.first == filter; });
                            if (it != s->subscriptions.end()) {
                                it->second = granted;
                            } else {
                                s->subscriptions.emplace_back(filter, granted);
                            }
                            ack.codes.push_back(granted);
                            for (const auto& [topic, msg] : retained_) {
                                if (mqtt::topic_matches(filter, topic)) retained.push_back(msg);
                            }
                        }
                    }
                    send(s, ack);
                    for (auto& r : retained) {
                        r.qos = 0;
                        r.packet_id = 0;
                        send(s, r);
                    }
                    cv_.notify_all();
                } else if (std::holds_alternative<mqtt::PingReq>(*packet)) {
                    send(s, mqtt::PingResp{});
                } else if (std::holds_alternative<mqtt::Disconnect>(*packet)) {
                    finish();
                    return;
                }
            }
        } catch (const mqtt::ProtocolError&) {
            break;
        }
    }
    finish();
}

void SimMqttBroker::route(const mqtt::Publish& p) {
    std::vector<std::pair<std::shared_ptr<Session>, mqtt::Publish>> out;
    {
        std::lock_guard lock(mutex_);
        ++stats_.published;
        if (p.retain) {
            if (p.payload.empty()) {
                retained_.erase(p.topic);
            } else {
                retained_[p.topic] = p;
            }
        }
        for (auto& s : sessions_) {
            if (s->done) continue;
            std::optional<std::uint8_t> best;
            for (const auto& [filter, qos] : s->subscriptions) {
                if (mqtt::topic_matches(filter, p.topic)) best = std::max<std::uint8_t>(best.value_or(0), qos);
            }
            if (!best) continue;
            mqtt::Publish copy = p;
            copy.retain = false;
            copy.dup = false;
            copy.qos = std::min(p.qos, *best);
            copy.packet_id = copy.qos > 0 ? s->next_id++ : 0;
            if (s->next_id == 0) s->next_id = 1;
            out.emplace_back(s, std::move(copy));
        }
    }
    for (auto& [s, msg] : out) {
        if (send(s.get(), msg)) {
            std::lock_guard lock(mutex_);
            ++stats_.delivered;
        }
    }
}

void SimMqttBroker::publish(const std::string& topic, const mqtt::Bytes& payload, std::uint8_t qos,
                            bool retain) {
    route(mqtt::Publish{topic, payload, qos, 0, retain, false});
}

bool SimMqttBroker::wait_for_subscriptions(std::size_t n, Millis timeout) {
    std::unique_lock lock(mutex_);
    return cv_.wait_for(lock, timeout, [&] {
        std::size_t count = 0;
        for (const auto& s : sessions_) {
            if (!s->done) count += s->subscriptions.size();
        }
        return count >= n;
    });
}

void SimMqttBroker::set_faults(BrokerFaults faults) {
    std::lock_guard lock(mutex_);
    faults_ = faults;
    rng_.seed(faults.seed);
}

void SimMqttBroker::kick_all() {
    std::lock_guard lock(mutex_);
    for (auto& s : sessions_) s->socket.shutdown();
}

BrokerStats SimMqttBroker::stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
}

}  // namespace gw::net
