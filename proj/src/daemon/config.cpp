#include "gw/daemon/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace gw::daemon {
namespace {

namespace pt = boost::property_tree;

std::string unquote(std::string v) {
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
        return v.substr(1, v.size() - 2);
    }
    return v;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

class Section {
public:
    Section(std::string name, const pt::ptree& tree) : name_(std::move(name)), tree_(tree) {}

    void allow(std::initializer_list<const char*> keys) {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [k, v] : tree_) {
            if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in [" + name_ + "]");
        }
    }

    std::optional<std::string> str(const std::string& key) const {
        auto v = tree_.get_optional<std::string>(key);
        if (!v) return std::nullopt;
        return unquote(trim(*v));
    }

    std::optional<double> real(const std::string& key) const {
        auto s = str(key);
        if (!s) return std::nullopt;
        double v = 0;
        auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
        if (ec != std::errc() || p != s->data() + s->size() || !std::isfinite(v)) {
            throw ConfigError(where(key) + " expects a number, got '" + *s + "'");
        }
        return v;
    }

    std::optional<std::uint64_t> integer(const std::string& key, std::uint64_t max) const {
        auto s = str(key);
        if (!s) return std::nullopt;
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
        if (ec != std::errc() || p != s->data() + s->size() || v > max) {
            throw ConfigError(where(key) + " expects an integer in [0, " + std::to_string(max) + "], got '" + *s + "'");
        }
        return v;
    }

    std::optional<bool> boolean(const std::string& key) const {
        auto s = str(key);
        if (!s) return std::nullopt;
        if (*s == "true") return true;
        if (*s == "false") return false;
        throw ConfigError(where(key) + " expects true or false, got '" + *s + "'");
    }

    std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

private:
    std::string name_;
    const pt::ptree& tree_;
};

double rate(const Section& s, const std::string& key, double fallback) {
    double v = s.real(key).value_or(fallback);
    if (v < 0 || v >= 1) throw ConfigError(s.where(key) + " must be in [0, 1)");
    return v;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    if (path.empty() || path.is_absolute() || base.empty()) return path;
    return base / path;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = unquote(trim(item));
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

GatewayConfig parse_config(const std::string& text, const fs::path& base_dir) {
    // '#' comments are accepted alongside ';'.
    std::string cleaned;
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
        auto t = trim(line);
        cleaned += (!t.empty() && t[0] == '#') ? "" : line;
        cleaned += '\n';
    }
    pt::ptree tree;
    std::istringstream in(cleaned);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }

    GatewayConfig cfg;
    std::map<std::string, const pt::ptree*> retry_sections;
    for (const auto& [name, sub] : tree) {
        if (sub.empty() && !sub.data().empty()) {
            throw ConfigError("key '" + name + "' outside of a section");
        }
        if (name == "gateway") {
            Section s(name, sub);
            s.allow({"archive_dir", "clustering_program", "clustering_examples", "contexts",
                     "placement_program", "allowlist", "ttl_s", "stats_path", "retry_profile"});
            if (auto v = s.str("archive_dir")) cfg.archive_dir = resolve(base_dir, *v);
            if (auto v = s.str("clustering_program")) cfg.clustering_program = resolve(base_dir, *v);
            if (auto v = s.str("clustering_examples")) cfg.clustering_examples = resolve(base_dir, *v);
            if (auto v = s.str("contexts")) cfg.contexts = resolve(base_dir, *v);
            if (auto v = s.str("placement_program")) cfg.placement_program = *v;
            if (auto v = s.str("allowlist")) cfg.allowlist = split_list(*v);
            if (auto v = s.str("stats_path")) cfg.stats_path = resolve(base_dir, *v);
            if (auto v = s.real("ttl_s")) {
                if (*v <= 0) throw ConfigError("[gateway] ttl_s must be positive");
                cfg.ttl_s = *v;
            }
            if (auto v = s.str("retry_profile")) {
                if (*v != "default" && *v != "aggressive") {
                    throw ConfigError("[gateway] retry_profile must be default or aggressive");
                }
                cfg.retry_profile = *v;
            }
        } else if (name == "retry.mqtt" || name == "retry.coap") {
            retry_sections[name.substr(6)] = &sub;
        } else if (name.rfind("broker.", 0) == 0 && name.size() > 7) {
            Section s(name, sub);
            s.allow({"address", "protocol"});
            auto addr = s.str("address");
            if (!addr) throw ConfigError("[" + name + "] needs an address");
            try {
                auto entry = discovery::make_broker_entry(*addr, s.str("protocol").value_or(""),
                                                          discovery::AddedBy::Config);
                for (const auto& b : cfg.brokers) {
                    if (b.address == entry.address) throw ConfigError("duplicate broker address " + *addr);
                }
                cfg.brokers.push_back(entry);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("[" + name + "] " + e.what());
            }
        } else if (name == "harness") {
            Section s(name, sub);
            s.allow({"enabled", "mqtt_port", "coap_port", "mqtt_failure_rate", "coap_failure_rate",
                     "slow_start_rate", "slow_start_delay_s", "seed"});
            auto& h = cfg.harness;
            h.enabled = s.boolean("enabled").value_or(false);
            h.mqtt_port = static_cast<std::uint16_t>(s.integer("mqtt_port", 65535).value_or(0));
            h.coap_port = static_cast<std::uint16_t>(s.integer("coap_port", 65535).value_or(0));
            h.mqtt_failure_rate = rate(s, "mqtt_failure_rate", 0.0);
            h.coap_failure_rate = rate(s, "coap_failure_rate", 0.0);
            h.slow_start_rate = rate(s, "slow_start_rate", 0.0);
            h.slow_start_delay_s = s.real("slow_start_delay_s").value_or(0.0);
            if (h.slow_start_delay_s < 0) throw ConfigError("[harness] slow_start_delay_s must be >= 0");
            h.seed = s.integer("seed", UINT64_MAX).value_or(1);
        } else {
            throw ConfigError("unknown section [" + name + "]");
        }
    }

    bool aggressive = cfg.retry_profile == "aggressive";
    for (const char* p : {"mqtt", "coap"}) cfg.retry[p] = adapter::default_policy(p, aggressive);
    for (const auto& [proto, sub] : retry_sections) {
        Section s("retry." + proto, *sub);
        s.allow({"timeout_s", "attempts"});
        auto& r = cfg.retry[proto];
        if (auto v = s.real("timeout_s")) r.timeout_s = *v;
        if (auto v = s.integer("attempts", 100)) r.attempts = static_cast<int>(*v);
        try {
            r.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("[retry." + proto + "] " + e.what());
        }
    }
    return cfg;
}

GatewayConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

fs::path resolve_config_path(const std::optional<std::string>& given) {
    if (const char* env = std::getenv("GATEWAY_CONFIG"); env != nullptr && *env != '\0') return env;
    if (given) return *given;
    return "gateway.conf";
}

}  // namespace gw::daemon
