#include "gw/net/coap_client.hpp"

#include <charconv>

#include <poll.h>
#include <sys/socket.h>

namespace gw::net {

CoapUri parse_coap_uri(const std::string& uri) {
    const std::string scheme = "coap://";
    if (uri.rfind(scheme, 0) != 0) throw InvalidAddress("not a coap:// URI: " + uri);
    std::size_t slash = uri.find('/', scheme.size());
    std::string authority = uri.substr(scheme.size(), slash == std::string::npos ? std::string::npos
                                                                                 : slash - scheme.size());
    Endpoint ep;
    if (authority.find(':') == std::string::npos) {
        ep = parse_endpoint(authority + ":5683");
    } else {
        ep = parse_endpoint(authority);
    }
    return {ep, slash == std::string::npos ? "/" : uri.substr(slash)};
}

std::string coap_uri(const Endpoint& ep, const std::string& path) {
    return "coap://" + ep.str() + (path.empty() || path[0] != '/' ? "/" : "") + path;
}

CoapClient::CoapClient() : mid_(static_cast<std::uint16_t>(std::random_device{}())), token_rng_(std::random_device{}()) {}

CoapClient::~CoapClient() { close(); }

void CoapClient::open(const Endpoint& ep) {
    close();
    endpoint_ = {resolve_ipv4(ep.host), ep.port};
    socket_ = udp_bind("0.0.0.0", 0, nullptr);
    udp_connect(socket_, endpoint_);
    running_ = true;
    reader_ = std::thread([this] { reader(); });
}

void CoapClient::close() {
    if (running_.exchange(false) && reader_.joinable()) {
        socket_.shutdown();
        reader_.join();
    }
    socket_.close();
    std::lock_guard lock(mutex_);
    observations_.clear();
    cv_.notify_all();
}

std::uint16_t CoapClient::next_mid() { return mid_++; }

coap::Bytes CoapClient::next_token() {
    std::uint64_t v = token_rng_();
    return coap::Bytes(reinterpret_cast<std::uint8_t*>(&v), reinterpret_cast<std::uint8_t*>(&v) + 4);
}

void CoapClient::reader() {
    std::uint8_t buf[2048];
    while (running_) {
        pollfd p{socket_.fd(), POLLIN, 0};
        if (::poll(&p, 1, 50) <= 0) continue;
        ssize_t n = ::recv(socket_.fd(), buf, sizeof buf, 0);
        if (n <= 0) continue;
        coap::Message m;
        try {
            m = coap::decode(buf, static_cast<std::size_t>(n));
        } catch (const coap::ProtocolError&) {
            continue;
        }
        std::unique_lock lock(mutex_);
        auto it = pending_.find(m.message_id);
        if ((m.type == coap::Type::Acknowledgement || m.type == coap::Type::Reset) && it != pending_.end()) {
            it->second = m;
            cv_.notify_all();
            continue;
        }
        auto obs = observations_.find(m.token);
        if (obs == observations_.end()) {
            if (m.type == coap::Type::Confirmable || m.type == coap::Type::NonConfirmable) {
                coap::Message rst;
                rst.type = coap::Type::Reset;
                rst.message_id = m.message_id;
                auto bytes = coap::encode(rst);
                ::send(socket_.fd(), bytes.data(), bytes.size(), MSG_NOSIGNAL);
            }
            continue;
        }
        auto [path, handler] = obs->second;
        lock.unlock();
        if (m.type == coap::Type::Confirmable) {
            coap::Message ack;
            ack.type = coap::Type::Acknowledgement;
            ack.message_id = m.message_id;
            auto bytes = coap::encode(ack);
            ::send(socket_.fd(), bytes.data(), bytes.size(), MSG_NOSIGNAL);
        }
        if (handler) handler(path, m);
    }
}

coap::Message CoapClient::exchange(coap::Message m, Millis timeout) {
    if (!running_) throw NetError("CoAP client not open");
    std::unique_lock lock(mutex_);
    m.message_id = next_mid();
    pending_[m.message_id];
    auto bytes = coap::encode(m);
    if (::send(socket_.fd(), bytes.data(), bytes.size(), MSG_NOSIGNAL) < 0) {
        pending_.erase(m.message_id);
        throw NetError("CoAP send to " + endpoint_.str() + " failed");
    }
    bool ok = cv_.wait_for(lock, timeout, [&] { return pending_[m.message_id].has_value() || !running_; });
    auto reply = std::move(pending_[m.message_id]);
    pending_.erase(m.message_id);
    if (!ok || !reply) throw Timeout("no CoAP response from " + endpoint_.str());
    return *reply;
}

bool CoapClient::ping(Millis timeout) {
    coap::Message m;
    m.type = coap::Type::Confirmable;
    m.code = coap::code::Empty;
    try {
        return exchange(m, timeout).type == coap::Type::Reset;
    } catch (const Timeout&) {
        return false;
    }
}

coap::Message CoapClient::get(const std::string& path, Millis timeout) {
    coap::Message m;
    m.type = coap::Type::Confirmable;
    m.code = coap::code::Get;
    {
        std::lock_guard lock(mutex_);
        m.token = next_token();
    }
    m.set_path(path);
    return exchange(m, timeout);
}

std::vector<std::string> CoapClient::discover(Millis timeout) {
    auto resp = get("/.well-known/core", timeout);
    if (resp.code != coap::code::Content) {
        throw NetError("resource discovery failed with " + coap::code_string(resp.code));
    }
    return coap::parse_link_format(std::string(resp.payload.begin(), resp.payload.end()));
}

coap::Message CoapClient::observe(const std::string& path, Handler handler, Millis timeout) {
    coap::Message m;
    m.type = coap::Type::Confirmable;
    m.code = coap::code::Get;
    {
        std::lock_guard lock(mutex_);
        m.token = next_token();
        observations_[m.token] = {path, std::move(handler)};
    }
    m.set_path(path);
    m.add_uint_option(coap::option::Observe, 0);
    coap::Message resp;
    try {
        resp = exchange(m, timeout);
    } catch (...) {
        std::lock_guard lock(mutex_);
        observations_.erase(m.token);
        throw;
    }
    if (resp.code != coap::code::Content || !resp.uint_option(coap::option::Observe)) {
        std::lock_guard lock(mutex_);
        observations_.erase(m.token);
    }
    return resp;
}

}  // namespace gw::net
