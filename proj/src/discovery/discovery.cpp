#include "gw/discovery/discovery.hpp"

#include <charconv>
#include <cmath>

#include <spdlog/spdlog.h>

#include "json.hpp"

namespace gw::discovery {
namespace {

std::vector<std::string> segments(const std::string& path) {
    std::vector<std::string> out;
    std::size_t i = 0;
    for (;;) {
        std::size_t j = path.find('/', i);
        out.push_back(path.substr(i, j == std::string::npos ? std::string::npos : j - i));
        if (j == std::string::npos) break;
        i = j + 1;
    }
    return out;
}

std::optional<std::int64_t> parse_int(const std::string& s) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

std::optional<std::vector<std::int64_t>> int_array(const adapter::Bytes& payload) {
    auto j = nlohmann::json::parse(payload.begin(), payload.end(), nullptr, false);
    if (j.is_discarded() || !j.is_array() || j.empty()) return std::nullopt;
    std::vector<std::int64_t> out;
    for (const auto& e : j) {
        if (!e.is_number_integer()) return std::nullopt;
        out.push_back(e.get<std::int64_t>());
    }
    return out;
}

std::int64_t reading(const adapter::Bytes& payload) {
    std::string s(payload.begin(), payload.end());
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    if (b == std::string::npos) return 0;
    s = s.substr(b, e - b + 1);
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return 0;
    if (std::fabs(v) > 9.0e18) return 0;
    return static_cast<std::int64_t>(std::llround(v));
}

}  // namespace

BrokerEntry make_broker_entry(const std::string& address, const std::string& protocol, AddedBy by) {
    BrokerEntry e;
    e.address = net::parse_endpoint(address);
    if (!protocol.empty()) {
        if (protocol != "mqtt" && protocol != "coap") {
            throw std::invalid_argument("unknown protocol '" + protocol + "' (expected mqtt or coap)");
        }
        e.protocol_hint = protocol;
    }
    e.added_by = by;
    return e;
}

std::string resource_path(const std::string& resource_id) {
    const std::string scheme = "coap://";
    if (resource_id.rfind(scheme, 0) != 0) return resource_id;
    auto slash = resource_id.find('/', scheme.size());
    return slash == std::string::npos ? "" : resource_id.substr(slash + 1);
}

std::string location_of(const std::string& resource_id) {
    std::string path = resource_path(resource_id);
    auto slash = path.rfind('/');
    return slash == std::string::npos ? "" : path.substr(0, slash);
}

std::int64_t type_code(const std::string& segment) {
    static const std::map<std::string, std::int64_t> codes = {
        {"temp", 1}, {"temperature", 1}, {"humidity", 2}, {"light", 3}, {"motion", 4}, {"pressure", 5}};
    auto it = codes.find(segment);
    return it == codes.end() ? 9 : it->second;
}

std::vector<std::int64_t> sa_attributes(const std::string& resource_id, const adapter::Bytes& payload) {
    if (auto v = int_array(payload)) return *v;
    auto segs = segments(resource_path(resource_id));
    std::int64_t type = segs.size() >= 2 ? type_code(segs[segs.size() - 2]) : 9;
    std::int64_t num = parse_int(segs.back()).value_or(0);
    return {type, num, reading(payload)};
}

Discovery::Discovery(device::DeviceManager& dm, DiscoveryOptions options)
    : dm_(dm), options_(std::move(options)) {
    for (const auto& [cluster, ids] : dm_.snapshot()) {
        for (auto id : ids) next_id_ = std::max(next_id_, id + 1);
    }
}

Discovery::~Discovery() { stop(); }

bool Discovery::allowed(const std::string& resource_id) const {
    if (options_.allowlist.empty()) return true;
    std::string path = resource_path(resource_id);
    for (const auto& prefix : options_.allowlist) {
        if (path.rfind(prefix, 0) == 0) return true;
    }
    return false;
}

SaCreated Discovery::handle_unsubscribed(const ClassificationRequest& req) {
    std::lock_guard lock(mutex_);
    ++stats_.requests;
    auto adapter = req.adapter.lock();
    if (!allowed(req.resource_id)) {
        ++stats_.rejected;
        std::string msg = "rejected '" + req.resource_id + "' from adapter " + std::to_string(req.adapter_ref);
        audit_.push_back(msg);
        spdlog::warn("authentication failed: {}", msg);
        throw AuthenticationFailed("resource not in allowlist: " + req.resource_id);
    }
    if (auto it = by_resource_.find(req.resource_id); it != by_resource_.end()) {
        ++stats_.duplicates;
        if (adapter) adapter->register_sa(req.resource_id, it->second);
        dm_.touch(it->second);
        return {it->second, dm_.cluster_of(it->second).value_or(device::kUnclassified), false};
    }
    if (!dm_.active_program()) throw device::NoActiveProgram();
    device::SensorAgent sa;
    sa.id = next_id_++;
    sa.attributes = sa_attributes(req.resource_id, req.raw_payload);
    sa.resource_id = req.resource_id;
    sa.location = location_of(req.resource_id);
    by_resource_[req.resource_id] = sa.id;
    if (adapter) adapter->register_sa(req.resource_id, sa.id);
    std::int64_t cluster = dm_.insert(std::move(sa));
    ++stats_.created;
    spdlog::debug("created SA {} for '{}' in cluster {}", by_resource_[req.resource_id], req.resource_id, cluster);
    return {by_resource_[req.resource_id], cluster, true};
}

void Discovery::on_result(ResultHandler h) {
    std::lock_guard lock(queue_mutex_);
    result_handler_ = std::move(h);
}

void Discovery::start() {
    std::lock_guard lock(queue_mutex_);
    if (running_) return;
    running_ = true;
    worker_ = std::thread([this] { consume(); });
}

void Discovery::submit(ClassificationRequest req) {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back(std::move(req));
    queue_cv_.notify_all();
}

void Discovery::consume() {
    std::unique_lock lock(queue_mutex_);
    for (;;) {
        queue_cv_.wait(lock, [&] { return !queue_.empty() || !running_; });
        if (queue_.empty()) return;
        ClassificationRequest req = std::move(queue_.front());
        queue_.pop_front();
        busy_ = true;
        auto handler = result_handler_;
        lock.unlock();
        std::optional<Outcome> outcome;
        try {
            outcome.emplace(handle_unsubscribed(req));
        } catch (const AuthenticationFailed& e) {
            outcome.emplace(e);
        } catch (const std::exception& e) {
            spdlog::error("classification of '{}' failed: {}", req.resource_id, e.what());
            std::lock_guard stats_lock(mutex_);
            ++stats_.errors;
        }
        if (outcome && handler) handler(req, *outcome);
        lock.lock();
        busy_ = false;
        queue_cv_.notify_all();
    }
}

bool Discovery::drain(net::Millis timeout) {
    std::unique_lock lock(queue_mutex_);
    return queue_cv_.wait_for(lock, timeout, [&] { return queue_.empty() && !busy_; });
}

void Discovery::stop() {
    {
        std::lock_guard lock(queue_mutex_);
        running_ = false;
        queue_cv_.notify_all();
    }
    if (worker_.joinable()) worker_.join();
}

bool Discovery::add_broker(const BrokerEntry& entry) {
    BrokerHandler handler;
    {
        std::lock_guard lock(mutex_);
        for (const auto& b : brokers_) {
            if (b.address == entry.address) return false;
        }
        brokers_.push_back(entry);
        handler = broker_handler_;
    }
    if (handler) handler(entry);
    return true;
}

void Discovery::on_broker_added(BrokerHandler h) {
    std::lock_guard lock(mutex_);
    broker_handler_ = std::move(h);
}

std::vector<BrokerEntry> Discovery::brokers() const {
    std::lock_guard lock(mutex_);
    return brokers_;
}

std::optional<std::int64_t> Discovery::sa_for(const std::string& resource_id) const {
    std::lock_guard lock(mutex_);
    auto it = by_resource_.find(resource_id);
    if (it == by_resource_.end()) return std::nullopt;
    return it->second;
}

std::map<std::string, std::int64_t> Discovery::resources() const {
    std::lock_guard lock(mutex_);
    return by_resource_;
}

DiscoveryStats Discovery::stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
}

std::vector<std::string> Discovery::audit_log() const {
    std::lock_guard lock(mutex_);
    return audit_;
}

}  // namespace gw::discovery
