#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "doctest.h"
#include "gw/device/device_manager.hpp"

using namespace gw::device;
using gw::dsl::DslProgram;
using gw::dsl::ListValue;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int n = 0;
        path = fs::temp_directory_path() /
               ("gw_device_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct FakeClock {
    Clock::time_point t = Clock::time_point(std::chrono::hours(24 * 365 * 50));
};

DeviceManagerOptions options_for(const TempDir& dir, FakeClock* clock) {
    DeviceManagerOptions o;
    o.archive_dir = dir.path / "archive";
    o.program_path = dir.path / "clustering.prog";
    o.now = [clock] { return clock->t; };
    return o;
}

SensorAgent sa(std::int64_t id, std::vector<std::int64_t> attrs) {
    return {id, std::move(attrs), "r/" + std::to_string(id), "r", {}};
}

std::string fixture(const char* name) { return std::string(GW_FIXTURE_DIR) + "/" + name; }

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

// Independent evaluation oracle for the two fixture programs.
std::int64_t head(const std::vector<std::int64_t>& v) { return v.at(0); }
std::int64_t second(const std::vector<std::int64_t>& v) { return v.at(1); }

}  // namespace

TEST_CASE("loading clustering programs") {
    TempDir dir;
    FakeClock clock;
    DeviceManager dm(options_for(dir, &clock));
    CHECK_FALSE(dm.active_program());
    CHECK_THROWS_AS(dm.insert(sa(1, {1})), NoActiveProgram);

    write(dir.path / "type.prog", "L: 1\n");
    write(dir.path / "id.prog", "L: 2 1\n");
    write(dir.path / "bad.prog", "L: 2 x\n");
    write(dir.path / "unknown.prog", "L: 42\n");

    CHECK(dm.load_clustering_program((dir.path / "type.prog").string()) == DslProgram{"L", {1}});
    CHECK(dm.insert(sa(1, {3, 12, 20, 9, 12})) == 3);
    CHECK_THROWS_AS(dm.load_clustering_program((dir.path / "bad.prog").string()), gw::dsl::ParseError);
    CHECK_THROWS_AS(dm.load_clustering_program((dir.path / "unknown.prog").string()),
                    gw::dsl::UnknownIndex);
    CHECK(*dm.active_program() == DslProgram{"L", {1}});

    dm.load_clustering_program((dir.path / "id.prog").string());
    CHECK(dm.insert(sa(2, {8, 9, 7, 6, 5})) == 9);
    // Lazy: the earlier SA keeps its cluster until an explicit recluster.
    CHECK(dm.cluster_of(1) == 3);
    dm.recluster();
    CHECK(dm.cluster_of(1) == 12);
    CHECK(dm.cluster_of(2) == 9);
}

TEST_CASE("insert partitions and moves") {
    TempDir dir;
    FakeClock clock;
    DeviceManager dm(options_for(dir, &clock));
    dm.set_program({"L", {2, 1}});

    CHECK(dm.insert(sa(7, {1, 10, 20})) == 10);
    CHECK(dm.snapshot() == std::map<std::int64_t, std::vector<std::int64_t>>{{10, {7}}});
    // Too short for REST,HEAD: unclassified.
    CHECK(dm.insert(sa(8, {5})) == kUnclassified);
    CHECK(dm.unclassified_count() == 1);
    // Re-inserting id 7 with new attributes moves it.
    CHECK(dm.insert(sa(7, {1, 11, 20})) == 11);
    auto snap = dm.snapshot();
    CHECK(snap.count(10) == 0);
    CHECK(snap[11] == std::vector<std::int64_t>{7});
    CHECK(dm.size() == 2);
    CHECK_THROWS_AS(dm.insert(sa(9, {})), std::invalid_argument);
}

TEST_CASE("program/label coherence and partition on random SAs") {
    TempDir dir;
    FakeClock clock;
    DeviceManager dm(options_for(dir, &clock));
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> len(0, 5), val(-20, 20), id(0, 299);
    std::map<std::int64_t, std::vector<std::int64_t>> latest;
    for (int round = 0; round < 2; ++round) {
        dm.set_program({"L", round == 0 ? std::vector<int>{1} : std::vector<int>{2, 1}});
        for (int i = 0; i < 1000; ++i) {
            std::vector<std::int64_t> attrs(1 + len(rng));
            for (auto& a : attrs) a = val(rng);
            std::int64_t sid = id(rng);
            std::int64_t got = dm.insert(sa(sid, attrs));
            std::int64_t want = round == 0 ? head(attrs) : (attrs.size() > 1 ? second(attrs) : kUnclassified);
            CHECK(got == want);
            latest[sid] = attrs;
        }
        std::size_t total = 0;
        for (const auto& [cid, ids] : dm.snapshot()) total += ids.size();
        CHECK(total == latest.size());
        CHECK(dm.size() == latest.size());
    }
}

TEST_CASE("regenerate from the clustering example sets") {
    TempDir dir;
    FakeClock clock;
    auto opts = options_for(dir, &clock);
    DeviceManager dm(opts);

    auto by_type = gw::dsl::load_list_examples(fixture("cluster_by_type.json"));
    auto path = dm.regenerate(by_type);
    CHECK(path == opts.program_path.string());
    CHECK(gw::dsl::load_program_file(path) == *dm.active_program());
    for (const auto& ex : by_type) {
        auto v = std::get<std::vector<std::int64_t>>(ex.input[0]);
        CHECK(dm.insert(sa(100, v)) == std::get<std::int64_t>(ex.output));
        CHECK(dm.insert(sa(100, v)) == head(v));
    }
    CHECK(dm.q_table().q("L", 1) > 0);

    auto by_id = gw::dsl::load_list_examples(fixture("cluster_by_id.json"));
    dm.regenerate(by_id);
    for (const auto& ex : by_id) {
        auto v = std::get<std::vector<std::int64_t>>(ex.input[0]);
        CHECK(dm.insert(sa(101, v)) == second(v));
    }

    auto before = *dm.active_program();
    fs::remove(opts.program_path);
    std::vector<gw::dsl::IoExample<ListValue>> impossible{
        {{ListValue(std::vector<std::int64_t>{1, 2})}, ListValue(std::int64_t{99})}};
    CHECK_THROWS_AS(dm.regenerate(impossible), ClusteringNotFound);
    CHECK(*dm.active_program() == before);
    CHECK_FALSE(fs::exists(opts.program_path));
}

TEST_CASE("eviction, archive and restore") {
    TempDir dir;
    FakeClock clock;
    DeviceManager dm(options_for(dir, &clock));
    dm.set_program({"L", {1}});
    dm.insert(sa(1, {1, 5}));
    dm.insert(sa(2, {1, 6}));
    clock.t += std::chrono::minutes(10);
    dm.insert(sa(3, {2, 7}));
    auto cluster1 = dm.members(1);

    CHECK(dm.evict_inactive(Clock::duration::max()).empty());
    CHECK_THROWS_AS(dm.evict_inactive(Clock::duration::zero()), std::invalid_argument);

    clock.t += std::chrono::minutes(1);
    auto evicted = dm.evict_inactive(std::chrono::minutes(5));
    CHECK(evicted == std::vector<std::int64_t>{1});
    CHECK(dm.archived() == std::set<std::int64_t>{1});
    CHECK(fs::exists(dm.archive_path(1)));
    CHECK_FALSE(dm.find(1));
    CHECK(dm.size() == 1);

    auto j = nlohmann::json::parse(std::ifstream(dm.archive_path(1)));
    CHECK(j["cluster_id"] == 1);
    CHECK(j["members"].size() == 2);

    // A lookup on an archived cluster restores it verbatim.
    CHECK(dm.members(1) == cluster1);
    CHECK(dm.archived().empty());
    CHECK(dm.cluster_of(2) == 1);
    CHECK_FALSE(fs::exists(dm.archive_path(1)));

    // Touching keeps a cluster alive.
    clock.t += std::chrono::minutes(10);
    dm.touch(1);
    CHECK(dm.evict_inactive(std::chrono::minutes(5)) == std::vector<std::int64_t>{2});

    auto all = dm.archive_all();
    CHECK(all == std::vector<std::int64_t>{1});
    CHECK(dm.size() == 0);
    dm.restore(2);
    CHECK(dm.cluster_of(3) == 2);
}

TEST_CASE("damaged archives") {
    TempDir dir;
    FakeClock clock;
    DeviceManager dm(options_for(dir, &clock));
    dm.set_program({"L", {1}});
    dm.insert(sa(1, {4}));
    dm.archive_all();

    write(dm.archive_path(4), "{\"cluster_id\": 4, \"members\": [");
    CHECK_THROWS_AS(dm.restore(4), ArchiveCorrupt);
    write(dm.archive_path(4), "{\"cluster_id\": 5, \"members\": []}");
    CHECK_THROWS_AS(dm.restore(4), ArchiveCorrupt);
    write(dm.archive_path(4), "{\"cluster_id\": 4, \"members\": [{\"id\": 1}]}");
    CHECK_THROWS_AS(dm.restore(4), ArchiveCorrupt);
    fs::remove(dm.archive_path(4));
    CHECK_THROWS_AS(dm.restore(4), ArchiveCorrupt);
}
