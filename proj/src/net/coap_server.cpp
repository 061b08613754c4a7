#include "gw/net/coap_server.hpp"

#include <algorithm>

#include <poll.h>
#include <sys/socket.h>

namespace gw::net {
namespace {

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

coap::Bytes to_bytes(const std::string& s) { return coap::Bytes(s.begin(), s.end()); }

bool same_peer(const sockaddr_in& a, const sockaddr_in& b) {
    return a.sin_addr.s_addr == b.sin_addr.s_addr && a.sin_port == b.sin_port;
}

}  // namespace

SimCoapServer::SimCoapServer(BrokerFaults faults, std::string ip, std::uint16_t port)
    : ip_(std::move(ip)), faults_(faults), rng_(faults.seed) {
    socket_ = udp_bind(ip_, port, &port_);
    thread_ = std::thread([this] { loop(); });
}

SimCoapServer::~SimCoapServer() { stop(); }

void SimCoapServer::stop() {
    if (!running_.exchange(false)) return;
    if (thread_.joinable()) thread_.join();
    socket_.close();
}

std::string SimCoapServer::uri(const std::string& path) const {
    return "coap://" + ip_ + ":" + std::to_string(port_) + (path.empty() || path[0] != '/' ? "/" : "") + path;
}

void SimCoapServer::loop() {
    std::uint8_t buf[2048];
    while (running_) {
        pollfd p{socket_.fd(), POLLIN, 0};
        if (::poll(&p, 1, 50) <= 0) continue;
        sockaddr_in from{};
        socklen_t len = sizeof from;
        ssize_t n = ::recvfrom(socket_.fd(), buf, sizeof buf, 0, reinterpret_cast<sockaddr*>(&from), &len);
        if (n < 0) continue;
        coap::Message req;
        try {
            req = coap::decode(buf, static_cast<std::size_t>(n));
        } catch (const coap::ProtocolError&) {
            continue;
        }
        handle(req, from);
    }
}

void SimCoapServer::send_to(const coap::Message& m, const sockaddr_in& to) {
    auto bytes = coap::encode(m);
    ::sendto(socket_.fd(), bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&to), sizeof to);
}

void SimCoapServer::handle(const coap::Message& req, const sockaddr_in& from) {
    if (req.type == coap::Type::Acknowledgement || req.type == coap::Type::Reset) {
        if (req.type == coap::Type::Reset) {
            // RST to a notification cancels the observation.
            std::lock_guard lock(mutex_);
            for (auto& [path, list] : observers_) {
                std::erase_if(list, [&](const Observer& o) { return same_peer(o.addr, from); });
            }
        }
        return;
    }
    if (req.code == coap::code::Empty) {
        if (req.type != coap::Type::Confirmable) return;
        bool drop;
        Millis delay;
        {
            std::lock_guard lock(mutex_);
            ++stats_.pings;
            drop = uniform(rng_) < faults_.connect_failure_rate;
            delay = faults_.connack_delay;
            if (uniform(rng_) < faults_.slow_start_rate) delay += faults_.slow_start_delay;
            if (drop) ++stats_.dropped_pings;
        }
        if (drop) return;
        if (delay.count() > 0) std::this_thread::sleep_for(delay);
        coap::Message rst;
        rst.type = coap::Type::Reset;
        rst.message_id = req.message_id;
        send_to(rst, from);
        return;
    }

    coap::Message resp;
    resp.type = req.type == coap::Type::Confirmable ? coap::Type::Acknowledgement : coap::Type::NonConfirmable;
    resp.token = req.token;
    std::string path = req.path();
    {
        std::lock_guard lock(mutex_);
        ++stats_.requests;
        resp.message_id = req.type == coap::Type::Confirmable ? req.message_id : next_mid_++;
        if (req.code != coap::code::Get) {
            resp.code = coap::code::MethodNotAllowed;
        } else if (path == "/.well-known/core") {
            std::string links;
            for (const auto& [p, r] : resources_) {
                if (!links.empty()) links += ',';
                links += "<" + p + ">;obs";
            }
            resp.code = coap::code::Content;
            resp.add_uint_option(coap::option::ContentFormat, coap::format::LinkFormat);
            resp.payload = to_bytes(links);
        } else if (auto it = resources_.find(path); it != resources_.end()) {
            resp.code = coap::code::Content;
            auto obs = req.uint_option(coap::option::Observe);
            auto& list = observers_[path];
            std::erase_if(list, [&](const Observer& o) { return same_peer(o.addr, from) && o.token == req.token; });
            if (obs && *obs == 0) {
                list.push_back(Observer{from, req.token});
                resp.add_uint_option(coap::option::Observe, it->second.sequence);
                cv_.notify_all();
            }
            resp.add_uint_option(coap::option::ContentFormat, it->second.content_format);
            resp.payload = to_bytes(it->second.payload);
        } else {
            resp.code = coap::code::NotFound;
        }
    }
    send_to(resp, from);
}

void SimCoapServer::set_resource(const std::string& path, const std::string& payload,
                                 std::uint32_t content_format) {
    std::string key = path.empty() || path[0] != '/' ? "/" + path : path;
    std::vector<std::pair<coap::Message, sockaddr_in>> out;
    {
        std::lock_guard lock(mutex_);
        auto& r = resources_[key];
        r.payload = payload;
        r.content_format = content_format;
        ++r.sequence;
        for (const auto& o : observers_[key]) {
            coap::Message n;
            n.type = coap::Type::NonConfirmable;
            n.code = coap::code::Content;
            n.message_id = next_mid_++;
            n.token = o.token;
            n.add_uint_option(coap::option::Observe, r.sequence & 0xFFFFFF);
            n.add_uint_option(coap::option::ContentFormat, content_format);
            n.payload = to_bytes(payload);
            out.emplace_back(std::move(n), o.addr);
            ++stats_.notifications;
        }
    }
    for (const auto& [m, to] : out) send_to(m, to);
}

std::size_t SimCoapServer::observer_count() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& [p, list] : observers_) n += list.size();
    return n;
}

bool SimCoapServer::wait_for_observers(std::size_t n, Millis timeout) {
    std::unique_lock lock(mutex_);
    return cv_.wait_for(lock, timeout, [&] {
        std::size_t count = 0;
        for (const auto& [p, list] : observers_) count += list.size();
        return count >= n;
    });
}

void SimCoapServer::set_faults(BrokerFaults faults) {
    std::lock_guard lock(mutex_);
    faults_ = faults;
    rng_.seed(faults.seed);
}

CoapServerStats SimCoapServer::stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
}

}  // namespace gw::net
