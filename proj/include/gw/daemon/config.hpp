#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gw/adapter/adapter.hpp"
#include "gw/discovery/discovery.hpp"

namespace gw::daemon {

namespace fs = std::filesystem;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct HarnessOptions {
    bool enabled = false;
    std::uint16_t mqtt_port = 0;
    std::uint16_t coap_port = 0;
    double mqtt_failure_rate = 0.0;
    double coap_failure_rate = 0.0;
    double slow_start_rate = 0.0;
    double slow_start_delay_s = 0.0;
    std::uint64_t seed = 1;
};

struct GatewayConfig {
    std::vector<discovery::BrokerEntry> brokers;
    std::string retry_profile = "default";
    /// Resolved per protocol: profile defaults, then [retry.*] overrides.
    std::map<std::string, adapter::RetryPolicy> retry;
    fs::path archive_dir = "archive";
    fs::path clustering_program = "clustering.prog";
    fs::path clustering_examples;
    fs::path contexts;
    std::string placement_program;
    std::vector<std::string> allowlist;
    double ttl_s = 3600.0;
    fs::path stats_path;
    HarnessOptions harness;
};

/// Flat-section "key = value" format; unknown sections and keys are
/// rejected. Relative paths are resolved against `base_dir`.
GatewayConfig parse_config(const std::string& text, const fs::path& base_dir = {});
GatewayConfig load_config(const fs::path& path);

/// GATEWAY_CONFIG, when set, wins over `given`; then `given`; then
/// "gateway.conf".
fs::path resolve_config_path(const std::optional<std::string>& given);

}  // namespace gw::daemon
