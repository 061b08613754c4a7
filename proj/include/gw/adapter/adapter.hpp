#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gw/net/socket.hpp"

namespace gw::adapter {

using Bytes = std::vector<std::uint8_t>;
using Clock = std::chrono::system_clock;
using net::Endpoint;

struct RetryPolicy {
    double timeout_s = 0.5;
    int attempts = 1;

    double budget_s() const { return timeout_s * attempts; }
    /// Throws std::invalid_argument.
    void validate() const;
    friend bool operator==(const RetryPolicy&, const RetryPolicy&) = default;
};

/// Built-in policies; `aggressive` selects the shortened two-attempt profile.
RetryPolicy default_policy(const std::string& protocol, bool aggressive = false);

/// An inbound publish or notification. A missing resource id marks the
/// message as malformed.
struct InboundMessage {
    std::optional<std::string> resource_id;
    Bytes payload;
};

class AdapterInstance;

struct Delivered {
    std::int64_t sa_id = 0;
    friend bool operator==(const Delivered&, const Delivered&) = default;
};

struct ClassificationRequest {
    std::string resource_id;
    Bytes raw_payload;
    std::uint64_t adapter_ref = 0;
    std::weak_ptr<AdapterInstance> adapter;
    Clock::time_point received_at{};
};

struct Malformed {};

using DispatchOutcome = std::variant<Delivered, ClassificationRequest, Malformed>;

/// resource id -> SA id. Exact-match lookups, last write wins.
class DispatchTable {
public:
    void register_sa(const std::string& resource_id, std::int64_t sa_id);
    std::optional<std::int64_t> lookup(const std::string& resource_id) const;
    std::size_t size() const;
    std::map<std::string, std::int64_t> snapshot() const;

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::int64_t> map_;
};

struct DispatchCounters {
    std::uint64_t received = 0;
    std::uint64_t delivered = 0;
    std::uint64_t classification_requests = 0;
    std::uint64_t malformed = 0;
};

/// One live broker session. Owns its dispatch table; subclasses feed
/// inbound traffic into dispatch().
class AdapterInstance : public std::enable_shared_from_this<AdapterInstance> {
public:
    struct Handlers {
        std::function<void(std::int64_t sa_id, const InboundMessage&)> delivered;
        std::function<void(ClassificationRequest)> unmatched;
        std::function<void()> lost;
    };

    AdapterInstance(std::string protocol, Endpoint endpoint);
    virtual ~AdapterInstance() = default;
    AdapterInstance(const AdapterInstance&) = delete;
    AdapterInstance& operator=(const AdapterInstance&) = delete;

    std::uint64_t id() const { return id_; }
    const std::string& protocol() const { return protocol_; }
    const Endpoint& endpoint() const { return endpoint_; }

    /// Set before start().
    void set_handlers(Handlers h) { handlers_ = std::move(h); }
    void register_sa(const std::string& resource_id, std::int64_t sa_id);
    DispatchOutcome dispatch(const InboundMessage& msg);
    const DispatchTable& table() const { return table_; }
    DispatchCounters counters() const;

    /// Starts receiving traffic.
    virtual void start() {}
    virtual void close() {}
    virtual bool alive() const { return true; }

protected:
    void notify_lost();

private:
    std::uint64_t id_;
    std::string protocol_;
    Endpoint endpoint_;
    Handlers handlers_;
    DispatchTable table_;
    std::atomic<std::uint64_t> received_{0};
    std::atomic<std::uint64_t> delivered_{0};
    std::atomic<std::uint64_t> unmatched_{0};
    std::atomic<std::uint64_t> malformed_{0};
};

}  // namespace gw::adapter
