#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace gw::net {

class NetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Timeout : public NetError {
public:
    using NetError::NetError;
};

class InvalidAddress : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;

    std::string str() const { return host + ":" + std::to_string(port); }
    friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

/// "host:port"; host is a dotted IPv4 address or a name. Throws
/// InvalidAddress for out-of-range octets, bad ports or missing parts.
Endpoint parse_endpoint(const std::string& text);
bool is_ipv4_literal(const std::string& host);
/// Resolves a host name to a dotted IPv4 address.
std::string resolve_ipv4(const std::string& host);

/// Owning file descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Socket& operator=(Socket&& o) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket();

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void close();
    /// Wakes blocked readers without releasing the descriptor.
    void shutdown();

private:
    int fd_ = -1;
};

using Millis = std::chrono::milliseconds;

/// Bound, listening TCP socket; port 0 picks an ephemeral port.
Socket tcp_listen(const std::string& ip, std::uint16_t port, std::uint16_t* bound_port);
/// Non-blocking connect bounded by `timeout`; the result is blocking.
Socket tcp_connect(const Endpoint& ep, Millis timeout);
void send_all(const Socket& s, const void* data, std::size_t size);
/// Waits up to `timeout` for readability; false on timeout.
bool wait_readable(const Socket& s, Millis timeout);

Socket udp_bind(const std::string& ip, std::uint16_t port, std::uint16_t* bound_port);
/// Fixes the peer of a datagram socket.
void udp_connect(const Socket& s, const Endpoint& ep);

}  // namespace gw::net
