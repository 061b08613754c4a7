#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gw/dsl/list_registry.hpp"
#include "gw/dsl/program.hpp"
#include "gw/dsl/qtable.hpp"
#include "json.hpp"

namespace gw::device {

using Clock = std::chrono::system_clock;

struct SensorAgent {
    std::int64_t id = 0;
    std::vector<std::int64_t> attributes;
    std::string resource_id;
    std::string location;
    Clock::time_point last_active{};

    friend bool operator==(const SensorAgent&, const SensorAgent&) = default;
};

nlohmann::json to_json(const SensorAgent& sa);
SensorAgent sensor_agent_from_json(const nlohmann::json& j);

inline constexpr std::int64_t kUnclassified = -1;

class NoActiveProgram : public std::logic_error {
public:
    NoActiveProgram() : std::logic_error("no clustering program loaded") {}
};

class ClusteringNotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArchiveCorrupt : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DeviceManagerOptions {
    std::filesystem::path archive_dir = "archive";
    std::filesystem::path program_path = "clustering.prog";
    std::size_t max_program_len = 4;
    std::function<Clock::time_point()> now = [] { return Clock::now(); };
};

/// Sensor Agents grouped by the output of the active clustering program.
/// Writers are serialized; readers take consistent snapshots.
class DeviceManager {
public:
    explicit DeviceManager(DeviceManagerOptions options = {});

    /// Loads a registry L program file. On failure the previous program
    /// stays active and the error propagates.
    dsl::DslProgram load_clustering_program(const std::string& path);
    void set_program(const dsl::DslProgram& program);
    std::optional<dsl::DslProgram> active_program() const;

    /// Clusters the SA with the active program. Evaluation failures (and
    /// non-scalar outputs) go to kUnclassified. An SA id that is already
    /// stored is moved, never duplicated.
    std::int64_t insert(SensorAgent sa);

    /// Synthesizes a clustering program from the examples with the live
    /// Q-table, writes it to options.program_path and makes it active.
    /// Throws ClusteringNotFound without touching the active program.
    std::string regenerate(std::span<const dsl::IoExample<dsl::ListValue>> examples);

    /// Re-inserts every in-memory SA under the active program.
    void recluster();

    bool touch(std::int64_t sa_id);

    std::optional<SensorAgent> find(std::int64_t sa_id) const;
    std::optional<std::int64_t> cluster_of(std::int64_t sa_id) const;
    /// Members of a cluster; an archived cluster is restored first.
    std::vector<SensorAgent> members(std::int64_t cluster_id);
    /// cluster id -> member ids, in-memory clusters only.
    std::map<std::int64_t, std::vector<std::int64_t>> snapshot() const;
    std::size_t size() const;
    std::size_t unclassified_count() const;

    /// Archives clusters whose most recent member activity is older than
    /// `ttl`. Returns the archived ids.
    std::vector<std::int64_t> evict_inactive(Clock::duration ttl);
    /// Archives every in-memory cluster.
    std::vector<std::int64_t> archive_all();
    void restore(std::int64_t cluster_id);
    std::set<std::int64_t> archived() const;

    std::filesystem::path archive_path(std::int64_t cluster_id) const;
    dsl::QTable q_table() const;

private:
    void insert_locked(SensorAgent sa);
    void remove_locked(std::int64_t sa_id);
    void archive_locked(std::int64_t cluster_id);
    void restore_locked(std::int64_t cluster_id);

    DeviceManagerOptions options_;
    mutable std::shared_mutex mutex_;
    std::optional<dsl::DslProgram> program_;
    dsl::QTable q_;
    std::map<std::int64_t, std::vector<SensorAgent>> clusters_;
    std::map<std::int64_t, std::int64_t> index_;
    std::set<std::int64_t> archived_;
    std::size_t unclassified_ = 0;
};

}  // namespace gw::device
