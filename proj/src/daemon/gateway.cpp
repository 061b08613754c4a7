#include "gw/daemon/gateway.hpp"

#include <cerrno>
#include <charconv>
#include <fstream>
#include <sstream>

#include <poll.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include "gw/adapter/transports.hpp"
#include "gw/context/placement.hpp"
#include "gw/dsl/list_registry.hpp"

namespace gw::daemon {
namespace {

using namespace std::chrono_literals;

device::DeviceManagerOptions dm_options(const GatewayConfig& c) {
    device::DeviceManagerOptions o;
    o.archive_dir = c.archive_dir;
    o.program_path = c.clustering_program;
    return o;
}

std::vector<std::string> tokens(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string t; in >> t;) out.push_back(t);
    return out;
}

std::string rest_after(const std::string& line, std::size_t n_tokens) {
    std::size_t i = 0;
    for (std::size_t k = 0; k < n_tokens; ++k) {
        i = line.find_first_not_of(" \t", i);
        if (i == std::string::npos) return "";
        i = line.find_first_of(" \t", i);
        if (i == std::string::npos) return "";
    }
    auto b = line.find_first_not_of(" \t", i);
    return b == std::string::npos ? "" : line.substr(b);
}

net::BrokerFaults harness_faults(const HarnessOptions& h, double failure_rate) {
    net::BrokerFaults f;
    f.connect_failure_rate = failure_rate;
    f.slow_start_rate = h.slow_start_rate;
    f.slow_start_delay = net::Millis(static_cast<std::int64_t>(h.slow_start_delay_s * 1000));
    f.seed = h.seed;
    return f;
}

constexpr const char* kHelp =
    "commands:\n"
    "  add-broker <ip:port> [--protocol mqtt|coap]\n"
    "  recluster\n"
    "  regenerate <examples.json>\n"
    "  evict\n"
    "  stats\n"
    "  sessions\n"
    "  dump-contexts\n"
    "  publish <topic> <payload>       (harness broker)\n"
    "  set-resource <path> <payload>   (harness CoAP server)\n"
    "  quit\n";

}  // namespace

Gateway::Gateway(GatewayConfig config)
    : config_(std::move(config)), dm_(dm_options(config_)), discovery_(dm_, discovery::DiscoveryOptions{config_.allowlist}) {
    for (const char* p : {"mqtt", "coap"}) {
        std::shared_ptr<adapter::Connector> c;
        if (std::string(p) == "mqtt") {
            c = std::make_shared<adapter::MqttConnector>("gateway", "#");
        } else {
            c = std::make_shared<adapter::CoapConnector>();
        }
        ranking_.add({p, -1, 0, config_.retry.count(p) ? config_.retry.at(p) : adapter::default_policy(p), c});
    }
}

Gateway::~Gateway() { stop(); }

void Gateway::regenerate(const std::string& examples_path) {
    auto examples = dsl::load_list_examples(examples_path);
    std::span<const dsl::IoExample<dsl::ListValue>> ex(examples);
    auto probe = dsl::synthesize(ex, dsl::list_registry(), dm_.q_table());
    {
        std::lock_guard lock(mutex_);
        ++totals_.synthesis_runs;
        totals_.candidates_visited += probe.candidates_visited;
    }
    dm_.regenerate(ex);
    std::lock_guard lock(mutex_);
    ++totals_.synthesis_successes;
}

void Gateway::start() {
    if (started_.exchange(true)) return;
    if (fs::exists(config_.clustering_program)) {
        dm_.load_clustering_program(config_.clustering_program.string());
    } else if (!config_.clustering_examples.empty()) {
        try {
            regenerate(config_.clustering_examples.string());
        } catch (const std::exception& e) {
            throw ConfigError(std::string("cannot synthesize a clustering program: ") + e.what());
        }
    } else {
        throw ConfigError("no clustering program at " + config_.clustering_program.string() +
                          " and no clustering_examples configured");
    }
    spdlog::info("clustering program: {}", dsl::describe(*dm_.active_program()));

    if (!config_.contexts.empty() && fs::exists(config_.contexts)) {
        contexts_ = context::load_contexts(config_.contexts.string());
    }
    if (!config_.placement_program.empty()) {
        try {
            auto prog = dsl::parse_program(config_.placement_program);
            context::context_registry().validate(prog);
            placement_ = prog;
        } catch (const std::exception& e) {
            throw ConfigError(std::string("placement_program: ") + e.what());
        }
    }

    discovery_.on_result([this](const auto& req, const auto& outcome) { on_classified(req, outcome); });
    discovery_.start();
    discovery_.on_broker_added([this](const discovery::BrokerEntry& e) { add_link(e); });

    if (config_.harness.enabled) {
        const auto& h = config_.harness;
        harness_mqtt_ = std::make_unique<net::SimMqttBroker>(harness_faults(h, h.mqtt_failure_rate), "127.0.0.1",
                                                             h.mqtt_port);
        harness_coap_ = std::make_unique<net::SimCoapServer>(harness_faults(h, h.coap_failure_rate), "127.0.0.1",
                                                             h.coap_port);
        spdlog::info("harness: mqtt {} coap {}", harness_mqtt_->endpoint().str(), harness_coap_->endpoint().str());
        discovery_.add_broker({harness_mqtt_->endpoint(), "mqtt", discovery::AddedBy::Config});
        discovery_.add_broker({harness_coap_->endpoint(), "coap", discovery::AddedBy::Config});
    }
    for (const auto& b : config_.brokers) discovery_.add_broker(b);
}

void Gateway::add_link(const discovery::BrokerEntry& entry) {
    std::lock_guard lock(mutex_);
    if (stopping_) return;
    links_.push_back(Link{entry, {}});
    links_.back().thread = std::thread([this, entry] { link_loop(entry); });
}

void Gateway::record_connect(const std::vector<adapter::AttemptLog>& log, std::size_t rank, std::int64_t elapsed_us) {
    std::lock_guard lock(mutex_);
    for (const auto& e : log) {
        auto& c = totals_.protocols[e.protocol];
        ++c.trials;
        c.attempts += static_cast<std::uint64_t>(e.attempts);
        if (!e.success || e.attempts > 1) ++c.first_attempt_failures;
        if (e.success) {
            ++c.successes;
        } else {
            ++c.complete_failures;
        }
    }
    if (rank > 0) {
        auto& r = totals_.ranks[rank];
        ++r.connects;
        r.elapsed_us += elapsed_us;
    }
}

void Gateway::retire(const std::shared_ptr<adapter::AdapterInstance>& s) {
    auto c = s->counters();
    std::lock_guard lock(mutex_);
    totals_.received += c.received;
    totals_.delivered += c.delivered;
    totals_.classification_requests += c.classification_requests;
    totals_.malformed += c.malformed;
    std::erase(sessions_, s);
}

void Gateway::link_loop(const discovery::BrokerEntry& entry) {
    unsigned failures = 0;
    const std::string only = entry.protocol_hint.value_or("");
    while (!stopping_) {
        if (failures > 0) {
            auto delay = backoff_delay(failures);
            spdlog::info("reconnecting to {} in {} ms", entry.address.str(), delay.count());
            std::unique_lock lock(mutex_);
            cv_.wait_for(lock, delay, [&] { return stopping_.load(); });
            if (stopping_) return;
        }
        std::shared_ptr<adapter::AdapterInstance> session;
        try {
            auto res = adapter::connect_ranked(ranking_, entry.address, only);
            record_connect(res.log, res.rank, res.elapsed_us);
            session = res.session;
            spdlog::info("connected to {} via {} (rank {})", entry.address.str(), res.protocol, res.rank);
        } catch (const adapter::ConnectFailure& e) {
            record_connect(e.log(), 0, 0);
            spdlog::warn("{}: {}", entry.address.str(), e.what());
            ++failures;
            continue;
        } catch (const std::exception& e) {
            spdlog::warn("{}: {}", entry.address.str(), e.what());
            ++failures;
            continue;
        }

        auto lost = std::make_shared<std::atomic<bool>>(false);
        session->set_handlers({[this](std::int64_t sa, const adapter::InboundMessage&) { dm_.touch(sa); },
                               [this](adapter::ClassificationRequest req) { discovery_.submit(std::move(req)); },
                               [this, lost] {
                                   lost->store(true);
                                   std::lock_guard lock(mutex_);
                                   cv_.notify_all();
                               }});
        {
            std::lock_guard lock(mutex_);
            if (stopping_) {
                session->close();
                return;
            }
            sessions_.push_back(session);
        }
        try {
            session->start();
            failures = 0;
        } catch (const std::exception& e) {
            spdlog::warn("starting session on {} failed: {}", entry.address.str(), e.what());
            lost->store(true);
        }

        auto* coap = dynamic_cast<adapter::CoapAdapter*>(session.get());
        while (!stopping_ && !lost->load() && session->alive()) {
            {
                std::unique_lock lock(mutex_);
                cv_.wait_for(lock, 1s, [&] { return stopping_ || lost->load(); });
            }
            if (coap != nullptr && !stopping_ && !lost->load()) {
                try {
                    if (coap->check(net::Millis(500))) coap->refresh();
                } catch (const std::exception& e) {
                    spdlog::warn("coap refresh on {}: {}", entry.address.str(), e.what());
                }
            }
        }
        session->close();
        retire(session);
        if (stopping_) return;
        spdlog::warn("lost broker {}", entry.address.str());
        failures = std::max(failures, 1u);
    }
}

void Gateway::on_classified(const discovery::ClassificationRequest& req, const discovery::Outcome& outcome) {
    auto* created = std::get_if<discovery::SaCreated>(&outcome);
    if (created == nullptr) return;
    if (created->created) place_sensor(created->sa_id, req);
}

void Gateway::place_sensor(std::int64_t sa_id, const discovery::ClassificationRequest& req) {
    if (!placement_) return;
    context::SensorObservation obs;
    obs.name = "sa" + std::to_string(sa_id);
    obs.values.emplace_back("loc", discovery::location_of(req.resource_id));
    std::string path = discovery::resource_path(req.resource_id);
    std::string kind;
    if (auto last = path.rfind('/'); last != std::string::npos && last > 0) {
        auto prev = path.rfind('/', last - 1);
        std::size_t from = prev == std::string::npos ? 0 : prev + 1;
        kind = path.substr(from, last - from);
    }
    std::string text(req.raw_payload.begin(), req.raw_payload.end());
    double v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (!kind.empty() && ec == std::errc() && p == text.data() + text.size()) obs.values.emplace_back(kind, v);
    obs.values.emplace_back(
        "time", context::Timestamp{std::chrono::duration<double>(req.received_at.time_since_epoch()).count()});

    std::lock_guard lock(context_mutex_);
    try {
        contexts_ = context::place(obs, contexts_, *placement_).contexts;
    } catch (const std::exception& e) {
        spdlog::warn("placement of {} failed: {}", obs.name, e.what());
    }
}

void Gateway::stop() {
    if (!started_ || stopping_.exchange(true)) return;
    {
        std::lock_guard lock(mutex_);
        cv_.notify_all();
    }
    std::list<Link> links;
    {
        std::lock_guard lock(mutex_);
        links.swap(links_);
    }
    for (auto& l : links) {
        if (l.thread.joinable()) l.thread.join();
    }
    discovery_.drain(net::Millis(5000));
    discovery_.stop();
    auto archived = dm_.archive_all();
    spdlog::info("archived {} clusters", archived.size());
    if (!config_.contexts.empty()) {
        std::lock_guard lock(context_mutex_);
        context::save_contexts(contexts_, config_.contexts.string());
    }
    write_stats();
    if (harness_mqtt_) harness_mqtt_->stop();
    if (harness_coap_) harness_coap_->stop();
}

RunStats Gateway::stats() const {
    std::vector<std::shared_ptr<adapter::AdapterInstance>> live;
    RunStats s;
    {
        std::lock_guard lock(mutex_);
        s = totals_;
        live = sessions_;
    }
    for (const auto& x : live) {
        auto c = x->counters();
        s.received += c.received;
        s.delivered += c.delivered;
        s.classification_requests += c.classification_requests;
        s.malformed += c.malformed;
    }
    auto d = discovery_.stats();
    s.sa_created = d.created;
    s.sa_duplicates = d.duplicates;
    s.rejected = d.rejected;
    s.dropped = d.errors;
    return s;
}

void Gateway::write_stats() const {
    if (config_.stats_path.empty()) return;
    auto tmp = config_.stats_path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        out << stats().to_json();
    }
    fs::rename(tmp, config_.stats_path);
}

std::vector<std::shared_ptr<adapter::AdapterInstance>> Gateway::sessions() const {
    std::lock_guard lock(mutex_);
    return sessions_;
}

bool Gateway::wait_for_sessions(std::size_t n, net::Millis timeout) {
    auto end = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < end) {
        if (sessions().size() >= n) return true;
        std::this_thread::sleep_for(5ms);
    }
    return sessions().size() >= n;
}

bool Gateway::settle(net::Millis timeout) { return discovery_.drain(timeout); }

context::ContextSet Gateway::contexts() const {
    std::lock_guard lock(context_mutex_);
    return contexts_;
}

std::string Gateway::execute(const std::string& line) {
    auto t = tokens(line);
    if (t.empty()) return "";
    const std::string& verb = t[0];
    try {
        if (verb == "help") return kHelp;
        if (verb == "add-broker") {
            if (t.size() != 2 && !(t.size() == 4 && t[2] == "--protocol")) {
                return "usage: add-broker <ip:port> [--protocol mqtt|coap]\n";
            }
            auto entry = discovery::make_broker_entry(t[1], t.size() == 4 ? t[3] : "", discovery::AddedBy::Runtime);
            return discovery_.add_broker(entry) ? "added " + entry.address.str() + "\n"
                                                : "already present " + entry.address.str() + "\n";
        }
        if (verb == "recluster") {
            dm_.recluster();
            return "reclustered " + std::to_string(dm_.size()) + " sensor agents\n";
        }
        if (verb == "regenerate") {
            if (t.size() != 2) return "usage: regenerate <examples.json>\n";
            regenerate(t[1]);
            return "clustering program " + dsl::serialize_program(*dm_.active_program());
        }
        if (verb == "evict") {
            auto ids = dm_.evict_inactive(std::chrono::duration_cast<device::Clock::duration>(
                std::chrono::duration<double>(config_.ttl_s)));
            return "archived " + std::to_string(ids.size()) + " clusters\n";
        }
        if (verb == "stats") return stats().to_json();
        if (verb == "sessions") {
            std::string out;
            for (const auto& s : sessions()) {
                out += std::to_string(s->id()) + " " + s->protocol() + " " + s->endpoint().str() + " " +
                       std::to_string(s->table().size()) + " resources\n";
            }
            return out.empty() ? "no sessions\n" : out;
        }
        if (verb == "dump-contexts") return context::to_json(contexts()).dump(2) + "\n";
        if (verb == "publish") {
            if (!harness_mqtt_) return "error: harness is disabled\n";
            if (t.size() < 3) return "usage: publish <topic> <payload>\n";
            harness_mqtt_->publish(t[1], rest_after(line, 2));
            return "published " + t[1] + "\n";
        }
        if (verb == "set-resource") {
            if (!harness_coap_) return "error: harness is disabled\n";
            if (t.size() < 3) return "usage: set-resource <path> <payload>\n";
            harness_coap_->set_resource(t[1], rest_after(line, 2));
            return "updated " + t[1] + "\n";
        }
        return "error: unknown command '" + verb + "' (try help)\n";
    } catch (const std::exception& e) {
        return std::string("error: ") + e.what() + "\n";
    }
}

int run_daemon(Gateway& gateway, int in_fd, std::ostream& out, const std::atomic<bool>& stop) {
    std::string buffer;
    bool input_open = in_fd >= 0;
    auto last_stats = std::chrono::steady_clock::now();
    auto last_evict = last_stats;
    while (!stop) {
        if (input_open) {
            pollfd p{in_fd, POLLIN, 0};
            int n = ::poll(&p, 1, 100);
            if (n > 0) {
                char buf[1024];
                ssize_t r = ::read(in_fd, buf, sizeof buf);
                if (r <= 0) {
                    if (r < 0 && errno == EINTR) continue;
                    input_open = false;
                } else {
                    buffer.append(buf, static_cast<std::size_t>(r));
                }
            }
            std::size_t nl;
            while ((nl = buffer.find('\n')) != std::string::npos) {
                std::string line = buffer.substr(0, nl);
                buffer.erase(0, nl + 1);
                if (line == "quit" || line == "exit") {
                    gateway.stop();
                    return 0;
                }
                out << gateway.execute(line) << std::flush;
            }
        } else {
            std::this_thread::sleep_for(100ms);
        }
        auto now = std::chrono::steady_clock::now();
        if (now - last_stats >= 1s) {
            gateway.write_stats();
            last_stats = now;
        }
        if (now - last_evict >= 60s) {
            gateway.execute("evict");
            last_evict = now;
        }
    }
    gateway.stop();
    return 0;
}

}  // namespace gw::daemon
