#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gw/net/coap_codec.hpp"
#include "gw/net/socket.hpp"

namespace gw::net {

/// "coap://host:port/a/b" -> endpoint and "/a/b".
struct CoapUri {
    Endpoint endpoint;
    std::string path;
};
CoapUri parse_coap_uri(const std::string& uri);
std::string coap_uri(const Endpoint& ep, const std::string& path);

/// CoAP client bound to one server. Requests are piggybacked CON
/// exchanges without retransmission; callers own retry policy.
class CoapClient {
public:
    using Handler = std::function<void(const std::string& path, const coap::Message&)>;

    CoapClient();
    ~CoapClient();
    CoapClient(const CoapClient&) = delete;
    CoapClient& operator=(const CoapClient&) = delete;

    void open(const Endpoint& ep);
    void close();
    const Endpoint& endpoint() const { return endpoint_; }

    /// Empty CON; true when the server answers with RST in time.
    bool ping(Millis timeout);
    coap::Message get(const std::string& path, Millis timeout);
    /// Resource paths listed under /.well-known/core.
    std::vector<std::string> discover(Millis timeout);
    /// Registers an observation; the handler sees every later notification.
    coap::Message observe(const std::string& path, Handler handler, Millis timeout);

private:
    coap::Message exchange(coap::Message m, Millis timeout);
    std::uint16_t next_mid();
    coap::Bytes next_token();
    void reader();

    Endpoint endpoint_;
    Socket socket_;
    std::thread reader_;
    std::atomic<bool> running_{false};

    std::mutex mutex_;
    std::condition_variable cv_;
    std::uint16_t mid_;
    std::mt19937_64 token_rng_;
    std::map<std::uint16_t, std::optional<coap::Message>> pending_;
    std::map<coap::Bytes, std::pair<std::string, Handler>> observations_;
};

}  // namespace gw::net
