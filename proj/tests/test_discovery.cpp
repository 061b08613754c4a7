#include <atomic>
#include <filesystem>
#include <thread>

#include <unistd.h>

#include "doctest.h"
#include "gw/discovery/discovery.hpp"
#include "gw/dsl/list_registry.hpp"

using namespace gw::discovery;
using gw::adapter::AdapterInstance;
using gw::adapter::Bytes;
using gw::device::DeviceManager;
using gw::device::DeviceManagerOptions;
namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

struct Fixture {
    fs::path dir;
    DeviceManager dm;
    std::shared_ptr<AdapterInstance> adapter;

    static fs::path make_dir() {
        static int n = 0;
        auto p = fs::temp_directory_path() /
                 ("gw_discovery_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
        fs::create_directories(p);
        return p;
    }

    Fixture()
        : dir(make_dir()),
          dm(DeviceManagerOptions{dir / "archive", dir / "clustering.prog", 4, [] { return gw::device::Clock::now(); }}),
          adapter(std::make_shared<AdapterInstance>("mqtt", gw::net::Endpoint{"127.0.0.1", 1883})) {
        dm.set_program(gw::dsl::parse_program("L: 1"));
    }
    ~Fixture() { fs::remove_all(dir); }

    ClassificationRequest request(const std::string& topic, const std::string& payload) {
        return {topic, Bytes(payload.begin(), payload.end()), adapter->id(), adapter, {}};
    }
};

}  // namespace

TEST_CASE("location and attribute extraction") {
    CHECK(location_of("kista/temp/7") == "kista/temp");
    CHECK(location_of("coap://127.0.0.1:5683/kista/temp/7") == "kista/temp");
    CHECK(location_of("t") == "");
    CHECK(location_of("a/") == "a");
    CHECK(resource_path("coap://127.0.0.1:5683/kista/temp/7") == "kista/temp/7");
    CHECK(sa_attributes("kista/temp/7", Bytes{'2', '1', '.', '5'}) == std::vector<std::int64_t>{1, 7, 22});
    CHECK(sa_attributes("kista/light/x", Bytes{'a'}) == std::vector<std::int64_t>{3, 0, 0});
    CHECK(sa_attributes("solo", Bytes{}) == std::vector<std::int64_t>{9, 0, 0});
    std::string arr = "[4, 13, 20, 9, 10]";
    CHECK(sa_attributes("x/y", Bytes(arr.begin(), arr.end())) == std::vector<std::int64_t>{4, 13, 20, 9, 10});
    std::string mixed = "[4, 1.5]";
    CHECK(sa_attributes("x/temp/2", Bytes(mixed.begin(), mixed.end())) == std::vector<std::int64_t>{1, 2, 0});
}

TEST_CASE("first message on a topic creates an SA clustered by the active program") {
    Fixture f;
    Discovery d(f.dm);
    auto r = d.handle_unsubscribed(f.request("kista/temp/7", "21.5"));
    CHECK(r.created);
    CHECK(r.sa_id == 1);
    // Oracle: run the loaded program on the SA vector.
    auto sa = f.dm.find(r.sa_id);
    REQUIRE(sa);
    auto expected = gw::dsl::evaluate(gw::dsl::list_registry(), *f.dm.active_program(),
                                      gw::dsl::ListValue(sa->attributes));
    CHECK(r.cluster_id == std::get<std::int64_t>(expected));
    CHECK(r.cluster_id == 1);
    CHECK(sa->location == "kista/temp");
    CHECK(sa->resource_id == "kista/temp/7");
    CHECK(f.adapter->table().lookup("kista/temp/7") == r.sa_id);
    CHECK(f.dm.cluster_of(r.sa_id) == r.cluster_id);
}

TEST_CASE("duplicate requests resolve to the same SA") {
    Fixture f;
    Discovery d(f.dm);
    auto a = d.handle_unsubscribed(f.request("t/new", "1"));
    auto b = d.handle_unsubscribed(f.request("t/new", "2"));
    CHECK(a.created);
    CHECK_FALSE(b.created);
    CHECK(a.sa_id == b.sa_id);
    CHECK(a.cluster_id == b.cluster_id);
    CHECK(f.dm.size() == 1);
    CHECK(d.stats().duplicates == 1);
}

TEST_CASE("concurrent duplicate submissions through the queue create one SA") {
    Fixture f;
    Discovery d(f.dm);
    std::mutex m;
    std::vector<SaCreated> results;
    d.on_result([&](const ClassificationRequest&, const Outcome& o) {
        std::lock_guard lock(m);
        results.push_back(std::get<SaCreated>(o));
    });
    d.start();
    std::vector<std::thread> ts;
    for (int t = 0; t < 8; ++t) {
        ts.emplace_back([&, t] {
            for (int i = 0; i < 25; ++i) d.submit(f.request("dup/topic/" + std::to_string(i % 5), std::to_string(t)));
        });
    }
    for (auto& t : ts) t.join();
    REQUIRE(d.drain(5000ms));
    CHECK(results.size() == 200);
    CHECK(f.dm.size() == 5);
    CHECK(d.stats().created == 5);
    CHECK(d.stats().duplicates == 195);
    for (const auto& r : results) {
        CHECK(f.dm.cluster_of(r.sa_id) == r.cluster_id);
    }
    // Dispatch table and device manager agree.
    for (const auto& [rid, sa] : f.adapter->table().snapshot()) {
        CHECK(d.sa_for(rid) == sa);
        CHECK(f.dm.find(sa)->resource_id == rid);
    }
}

TEST_CASE("allowlist rejects with an audit entry and no side effects") {
    Fixture f;
    Discovery d(f.dm, DiscoveryOptions{{"kista/"}});
    CHECK_THROWS_AS(d.handle_unsubscribed(f.request("solna/temp/1", "3")), AuthenticationFailed);
    CHECK(f.dm.size() == 0);
    CHECK(f.adapter->table().size() == 0);
    REQUIRE(d.audit_log().size() == 1);
    CHECK(d.audit_log()[0].find("solna/temp/1") != std::string::npos);
    CHECK(d.handle_unsubscribed(f.request("kista/temp/1", "3")).created);

    Discovery coap(f.dm, DiscoveryOptions{{"kista/"}});
    CHECK(coap.handle_unsubscribed(f.request("coap://127.0.0.1:5683/kista/light/2", "3")).created);
}

TEST_CASE("requests without a live program change nothing") {
    Fixture f;
    DeviceManager empty(DeviceManagerOptions{f.dir / "a2", f.dir / "p2", 4, [] { return gw::device::Clock::now(); }});
    Discovery d(empty);
    CHECK_THROWS_AS(d.handle_unsubscribed(f.request("a/b", "1")), gw::device::NoActiveProgram);
    CHECK(f.adapter->table().size() == 0);
    CHECK_FALSE(d.sa_for("a/b"));
}

TEST_CASE("broker list") {
    Fixture f;
    Discovery d(f.dm);
    std::vector<std::string> added;
    d.on_broker_added([&](const BrokerEntry& e) { added.push_back(e.address.str()); });
    CHECK(d.add_broker(make_broker_entry("127.0.0.1:1883")));
    CHECK_FALSE(d.add_broker(make_broker_entry("127.0.0.1:1883", "mqtt")));
    CHECK(d.add_broker(make_broker_entry("127.0.0.1:5683", "coap", AddedBy::Config)));
    CHECK(added == std::vector<std::string>{"127.0.0.1:1883", "127.0.0.1:5683"});
    CHECK(d.brokers().size() == 2);
    CHECK(d.brokers()[1].protocol_hint == "coap");
    CHECK_THROWS_AS(make_broker_entry("999.1.1.1:1"), gw::net::InvalidAddress);
    CHECK_THROWS_AS(make_broker_entry("127.0.0.1:1", "zigbee"), std::invalid_argument);
}

TEST_CASE("ids continue after SAs already in the device manager") {
    Fixture f;
    gw::device::SensorAgent sa;
    sa.id = 41;
    sa.attributes = {2, 0, 0};
    f.dm.insert(sa);
    Discovery d(f.dm);
    CHECK(d.handle_unsubscribed(f.request("x/y/1", "0")).sa_id == 42);
}
