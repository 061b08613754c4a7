#include "gw/daemon/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <cstring>
#include <random>

#include <poll.h>
#include <sys/socket.h>

#include "json.hpp"

namespace gw::daemon {

std::string RunStats::to_json() const {
    nlohmann::ordered_json j;
    auto& protos = j["protocols"] = nlohmann::ordered_json::object();
    for (const auto& [name, c] : protocols) {
        protos[name] = {{"trials", c.trials},
                        {"attempts", c.attempts},
                        {"successes", c.successes},
                        {"first_attempt_failures", c.first_attempt_failures},
                        {"complete_failures", c.complete_failures}};
    }
    auto& ranks_j = j["ranks"] = nlohmann::ordered_json::array();
    for (const auto& [rank, r] : ranks) {
        ranks_j.push_back({{"rank", rank}, {"connects", r.connects}, {"elapsed_us", r.elapsed_us}});
    }
    j["dispatch"] = {{"received", received},
                     {"delivered", delivered},
                     {"classification_requests", classification_requests},
                     {"malformed", malformed},
                     {"dropped", dropped}};
    j["discovery"] = {{"sa_created", sa_created}, {"duplicates", sa_duplicates}, {"rejected", rejected}};
    j["synthesis"] = {{"runs", synthesis_runs},
                      {"successes", synthesis_successes},
                      {"candidates_visited", candidates_visited}};
    return j.dump(2) + "\n";
}

double unit_uniform(std::uint64_t draw) { return static_cast<double>(draw >> 11) * 0x1.0p-53; }

RunStats simulate_connections(const SimulationParams& p) {
    if (p.trials < 1) throw std::invalid_argument("trials must be at least 1");
    auto check_rate = [](double r) {
        if (!(r >= 0 && r < 1)) throw std::invalid_argument("failure rate must be in [0, 1)");
    };
    check_rate(p.failure_rate);
    double retry_rate = p.retry_failure_rate.value_or(p.failure_rate);
    check_rate(retry_rate);
    p.policy.validate();

    std::mt19937_64 rng(p.seed);
    ProtocolCounters c;
    for (std::uint64_t t = 0; t < p.trials; ++t) {
        ++c.trials;
        bool ok = false;
        for (int a = 0; a < p.policy.attempts && !ok; ++a) {
            ++c.attempts;
            double rate = a == 0 ? p.failure_rate : retry_rate;
            ok = unit_uniform(rng()) >= rate;
            if (!ok && a == 0) ++c.first_attempt_failures;
        }
        if (ok) {
            ++c.successes;
        } else {
            ++c.complete_failures;
        }
    }
    RunStats s;
    s.protocols[p.protocol] = c;
    return s;
}

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("spearman needs equal-length inputs");
    if (xs.size() < 2) throw std::invalid_argument("spearman needs at least 2 pairs");
    for (auto v : xs) {
        if (std::isnan(v)) throw std::invalid_argument("NaN in input");
    }
    for (auto v : ys) {
        if (std::isnan(v)) throw std::invalid_argument("NaN in input");
    }
    auto rx = average_ranks(xs);
    auto ry = average_ranks(ys);
    double n = static_cast<double>(rx.size());
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) throw DegenerateInput("spearman is undefined for a constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ProbeResult latency_probe(const net::Endpoint& target, std::size_t count, net::Millis timeout) {
    if (count == 0) throw std::invalid_argument("probe count must be at least 1");
    net::Socket s = net::udp_bind("0.0.0.0", 0, nullptr);
    net::udp_connect(s, target);
    ProbeResult r;
    std::vector<double> rtts;
    std::uint8_t buf[64];
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t seq = i;
        auto t0 = std::chrono::steady_clock::now();
        ++r.sent;
        if (::send(s.fd(), &seq, sizeof seq, MSG_NOSIGNAL) < 0) continue;
        for (;;) {
            auto left = timeout - std::chrono::duration_cast<net::Millis>(std::chrono::steady_clock::now() - t0);
            if (left.count() <= 0 || !net::wait_readable(s, left)) break;
            ssize_t n = ::recv(s.fd(), buf, sizeof buf, 0);
            if (n < 0) break;  // ICMP port unreachable surfaces here
            std::uint64_t got = 0;
            if (n == sizeof got) std::memcpy(&got, buf, sizeof got);
            if (n == sizeof got && got == seq) {
                rtts.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
                break;
            }
        }
    }
    r.received = rtts.size();
    if (rtts.empty()) throw Unreachable("no reply from " + target.str() + " after " + std::to_string(count) + " probes");
    double n = static_cast<double>(rtts.size());
    r.mean_s = std::accumulate(rtts.begin(), rtts.end(), 0.0) / n;
    double ss = 0;
    for (auto v : rtts) ss += (v - r.mean_s) * (v - r.mean_s);
    r.std_s = std::sqrt(ss / n);
    return r;
}

UdpEchoServer::UdpEchoServer(std::string ip, std::uint16_t port) : ip_(std::move(ip)) {
    socket_ = net::udp_bind(ip_, port, &port_);
    thread_ = std::thread([this] {
        std::uint8_t buf[2048];
        while (running_) {
            pollfd p{socket_.fd(), POLLIN, 0};
            if (::poll(&p, 1, 50) <= 0) continue;
            sockaddr_storage from{};
            socklen_t len = sizeof from;
            ssize_t n = ::recvfrom(socket_.fd(), buf, sizeof buf, 0, reinterpret_cast<sockaddr*>(&from), &len);
            if (n < 0) continue;
            ::sendto(socket_.fd(), buf, static_cast<std::size_t>(n), 0, reinterpret_cast<sockaddr*>(&from), len);
        }
    });
}

UdpEchoServer::~UdpEchoServer() { stop(); }

void UdpEchoServer::stop() {
    if (!running_.exchange(false)) return;
    if (thread_.joinable()) thread_.join();
    socket_.close();
}

std::chrono::milliseconds backoff_delay(unsigned failures) {
    if (failures == 0) return std::chrono::milliseconds(0);
    std::int64_t ms = 1000;
    for (unsigned i = 1; i < failures && ms < 30000; ++i) ms *= 2;
    return std::chrono::milliseconds(std::min<std::int64_t>(ms, 30000));
}

}  // namespace gw::daemon
