#include "gw/net/socket.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace gw::net {
namespace {

[[noreturn]] void sys_fail(const std::string& what) {
    throw NetError(what + ": " + std::strerror(errno));
}

sockaddr_in make_addr(const std::string& ip, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, ip.c_str(), &addr.sin_addr) != 1) {
        throw InvalidAddress("not an IPv4 address: " + ip);
    }
    return addr;
}

std::uint16_t local_port(int fd) {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    if (getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) sys_fail("getsockname");
    return ntohs(addr.sin_port);
}

}  // namespace

bool is_ipv4_literal(const std::string& host) {
    in_addr a{};
    int dots = 0;
    for (char c : host) dots += c == '.';
    return dots == 3 && inet_pton(AF_INET, host.c_str(), &a) == 1;
}

Endpoint parse_endpoint(const std::string& text) {
    auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
        throw InvalidAddress("expected host:port, got '" + text + "'");
    }
    std::string host = text.substr(0, colon);
    std::string port_s = text.substr(colon + 1);
    unsigned port = 0;
    auto [ptr, ec] = std::from_chars(port_s.data(), port_s.data() + port_s.size(), port);
    if (ec != std::errc() || ptr != port_s.data() + port_s.size() || port == 0 || port > 65535) {
        throw InvalidAddress("bad port in '" + text + "'");
    }
    bool numeric = host.find_first_not_of("0123456789.") == std::string::npos;
    if (numeric && !is_ipv4_literal(host)) {
        throw InvalidAddress("bad IPv4 address '" + host + "'");
    }
    return {host, static_cast<std::uint16_t>(port)};
}

std::string resolve_ipv4(const std::string& host) {
    if (is_ipv4_literal(host)) return host;
    addrinfo hints{};
    hints.ai_family = AF_INET;
    addrinfo* res = nullptr;
    int rc = getaddrinfo(host.c_str(), nullptr, &hints, &res);
    if (rc != 0 || res == nullptr) {
        throw NetError("cannot resolve " + host + ": " + gai_strerror(rc));
    }
    char buf[INET_ADDRSTRLEN];
    auto* sin = reinterpret_cast<sockaddr_in*>(res->ai_addr);
    inet_ntop(AF_INET, &sin->sin_addr, buf, sizeof buf);
    freeaddrinfo(res);
    return buf;
}

Socket& Socket::operator=(Socket&& o) noexcept {
    if (this != &o) {
        close();
        fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
}

Socket::~Socket() { close(); }

void Socket::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void Socket::shutdown() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Socket tcp_listen(const std::string& ip, std::uint16_t port, std::uint16_t* bound_port) {
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) sys_fail("socket");
    int one = 1;
    setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    auto addr = make_addr(ip, port);
    if (bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) sys_fail("bind");
    if (listen(s.fd(), 64) != 0) sys_fail("listen");
    if (bound_port != nullptr) *bound_port = local_port(s.fd());
    return s;
}

Socket tcp_connect(const Endpoint& ep, Millis timeout) {
    auto addr = make_addr(resolve_ipv4(ep.host), ep.port);
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) sys_fail("socket");
    int flags = fcntl(s.fd(), F_GETFL, 0);
    fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    if (rc != 0 && errno != EINPROGRESS) sys_fail("connect to " + ep.str());
    if (rc != 0) {
        pollfd p{s.fd(), POLLOUT, 0};
        int n = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (n == 0) throw Timeout("connect to " + ep.str() + " timed out");
        if (n < 0) sys_fail("poll");
        int err = 0;
        socklen_t len = sizeof err;
        getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0) {
            errno = err;
            sys_fail("connect to " + ep.str());
        }
    }
    fcntl(s.fd(), F_SETFL, flags);
    int one = 1;
    setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return s;
}

void send_all(const Socket& s, const void* data, std::size_t size) {
    const auto* p = static_cast<const char*>(data);
    while (size > 0) {
        ssize_t n = ::send(s.fd(), p, size, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            sys_fail("send");
        }
        p += n;
        size -= static_cast<std::size_t>(n);
    }
}

bool wait_readable(const Socket& s, Millis timeout) {
    pollfd p{s.fd(), POLLIN, 0};
    for (;;) {
        int n = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (n < 0 && errno == EINTR) continue;
        if (n < 0) sys_fail("poll");
        return n > 0;
    }
}

Socket udp_bind(const std::string& ip, std::uint16_t port, std::uint16_t* bound_port) {
    Socket s(::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) sys_fail("socket");
    auto addr = make_addr(ip, port);
    if (bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) sys_fail("bind");
    if (bound_port != nullptr) *bound_port = local_port(s.fd());
    return s;
}

void udp_connect(const Socket& s, const Endpoint& ep) {
    auto addr = make_addr(resolve_ipv4(ep.host), ep.port);
    if (::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        sys_fail("connect to " + ep.str());
    }
}

}  // namespace gw::net
