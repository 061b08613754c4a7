#include "gw/device/device_manager.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "gw/dsl/synthesizer.hpp"

namespace gw::device {

namespace fs = std::filesystem;

namespace {

void write_atomically(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace

nlohmann::json to_json(const SensorAgent& sa) {
    return {
        {"id", sa.id},
        {"attributes", sa.attributes},
        {"resource_id", sa.resource_id},
        {"location", sa.location},
        {"last_active_ns",
         std::chrono::duration_cast<std::chrono::nanoseconds>(sa.last_active.time_since_epoch()).count()},
    };
}

SensorAgent sensor_agent_from_json(const nlohmann::json& j) {
    SensorAgent sa;
    sa.id = j.at("id").get<std::int64_t>();
    sa.attributes = j.at("attributes").get<std::vector<std::int64_t>>();
    sa.resource_id = j.at("resource_id").get<std::string>();
    sa.location = j.at("location").get<std::string>();
    sa.last_active = Clock::time_point(std::chrono::duration_cast<Clock::duration>(
        std::chrono::nanoseconds(j.at("last_active_ns").get<std::int64_t>())));
    if (sa.attributes.empty()) throw std::invalid_argument("sensor agent without attributes");
    return sa;
}

DeviceManager::DeviceManager(DeviceManagerOptions options) : options_(std::move(options)) {}

dsl::DslProgram DeviceManager::load_clustering_program(const std::string& path) {
    dsl::DslProgram program = dsl::load_program_file(path);
    dsl::list_registry().validate(program);
    std::unique_lock lock(mutex_);
    program_ = program;
    spdlog::info("clustering program {} loaded from {}", dsl::list_registry().pretty(program), path);
    return program;
}

void DeviceManager::set_program(const dsl::DslProgram& program) {
    dsl::list_registry().validate(program);
    std::unique_lock lock(mutex_);
    program_ = program;
}

std::optional<dsl::DslProgram> DeviceManager::active_program() const {
    std::shared_lock lock(mutex_);
    return program_;
}

void DeviceManager::remove_locked(std::int64_t sa_id) {
    auto it = index_.find(sa_id);
    if (it == index_.end()) return;
    auto& members = clusters_[it->second];
    members.erase(std::remove_if(members.begin(), members.end(),
                                 [&](const SensorAgent& m) { return m.id == sa_id; }),
                  members.end());
    if (members.empty()) clusters_.erase(it->second);
    index_.erase(it);
}

void DeviceManager::insert_locked(SensorAgent sa) {
    if (sa.attributes.empty()) throw std::invalid_argument("sensor agent without attributes");
    std::int64_t cluster = kUnclassified;
    try {
        auto out = dsl::evaluate(dsl::list_registry(), *program_, dsl::ListValue(sa.attributes));
        if (auto* n = std::get_if<std::int64_t>(&out)) {
            cluster = *n;
        } else {
            throw dsl::KindMismatch("clustering program returned a list");
        }
    } catch (const dsl::EvaluationError& e) {
        ++unclassified_;
        spdlog::warn("SA {} unclassified: {}", sa.id, e.what());
    }
    remove_locked(sa.id);
    index_[sa.id] = cluster;
    clusters_[cluster].push_back(std::move(sa));
}

std::int64_t DeviceManager::insert(SensorAgent sa) {
    std::unique_lock lock(mutex_);
    if (!program_) throw NoActiveProgram();
    sa.last_active = options_.now();
    std::int64_t id = sa.id;
    insert_locked(std::move(sa));
    return index_.at(id);
}

std::string DeviceManager::regenerate(std::span<const dsl::IoExample<dsl::ListValue>> examples) {
    std::unique_lock lock(mutex_);
    dsl::QTable trial = q_;
    auto result = dsl::synthesize_and_learn(examples, dsl::list_registry(), trial,
                                            {options_.max_program_len});
    if (!result.program) {
        throw ClusteringNotFound("no registry L pipeline reproduces the clustering examples");
    }
    write_atomically(options_.program_path, dsl::serialize_program(*result.program));
    program_ = dsl::load_program_file(options_.program_path.string());
    q_ = std::move(trial);
    spdlog::info("regenerated clustering program {} after {} candidates",
                 dsl::list_registry().pretty(*program_), result.candidates_visited);
    return options_.program_path.string();
}

void DeviceManager::recluster() {
    std::unique_lock lock(mutex_);
    if (!program_) throw NoActiveProgram();
    std::vector<SensorAgent> all;
    for (auto& [id, members] : clusters_) {
        for (auto& m : members) all.push_back(std::move(m));
    }
    clusters_.clear();
    index_.clear();
    for (auto& sa : all) insert_locked(std::move(sa));
}

bool DeviceManager::touch(std::int64_t sa_id) {
    std::unique_lock lock(mutex_);
    auto it = index_.find(sa_id);
    if (it == index_.end()) return false;
    for (auto& m : clusters_[it->second]) {
        if (m.id == sa_id) m.last_active = options_.now();
    }
    return true;
}

std::optional<SensorAgent> DeviceManager::find(std::int64_t sa_id) const {
    std::shared_lock lock(mutex_);
    auto it = index_.find(sa_id);
    if (it == index_.end()) return std::nullopt;
    for (const auto& m : clusters_.at(it->second)) {
        if (m.id == sa_id) return m;
    }
    return std::nullopt;
}

std::optional<std::int64_t> DeviceManager::cluster_of(std::int64_t sa_id) const {
    std::shared_lock lock(mutex_);
    auto it = index_.find(sa_id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<SensorAgent> DeviceManager::members(std::int64_t cluster_id) {
    std::unique_lock lock(mutex_);
    if (archived_.count(cluster_id)) restore_locked(cluster_id);
    auto it = clusters_.find(cluster_id);
    return it == clusters_.end() ? std::vector<SensorAgent>{} : it->second;
}

std::map<std::int64_t, std::vector<std::int64_t>> DeviceManager::snapshot() const {
    std::shared_lock lock(mutex_);
    std::map<std::int64_t, std::vector<std::int64_t>> out;
    for (const auto& [id, members] : clusters_) {
        auto& ids = out[id];
        for (const auto& m : members) ids.push_back(m.id);
    }
    return out;
}

std::size_t DeviceManager::size() const {
    std::shared_lock lock(mutex_);
    return index_.size();
}

std::size_t DeviceManager::unclassified_count() const {
    std::shared_lock lock(mutex_);
    return unclassified_;
}

fs::path DeviceManager::archive_path(std::int64_t cluster_id) const {
    return options_.archive_dir / ("cluster_" + std::to_string(cluster_id) + ".json");
}

void DeviceManager::archive_locked(std::int64_t cluster_id) {
    auto it = clusters_.find(cluster_id);
    if (it == clusters_.end()) return;
    nlohmann::json j;
    j["cluster_id"] = cluster_id;
    j["members"] = nlohmann::json::array();
    for (const auto& m : it->second) j["members"].push_back(to_json(m));
    write_atomically(archive_path(cluster_id), j.dump(2) + "\n");
    for (const auto& m : it->second) index_.erase(m.id);
    clusters_.erase(it);
    archived_.insert(cluster_id);
    spdlog::info("cluster {} archived to {}", cluster_id, archive_path(cluster_id).string());
}

std::vector<std::int64_t> DeviceManager::evict_inactive(Clock::duration ttl) {
    if (ttl <= Clock::duration::zero()) throw std::invalid_argument("ttl must be positive");
    std::unique_lock lock(mutex_);
    std::vector<std::int64_t> stale;
    if (ttl == Clock::duration::max()) return stale;
    auto now = options_.now();
    for (const auto& [id, members] : clusters_) {
        auto newest = Clock::time_point::min();
        for (const auto& m : members) newest = std::max(newest, m.last_active);
        if (newest < now && now - newest > ttl) stale.push_back(id);
    }
    for (auto id : stale) archive_locked(id);
    return stale;
}

std::vector<std::int64_t> DeviceManager::archive_all() {
    std::unique_lock lock(mutex_);
    std::vector<std::int64_t> ids;
    for (const auto& [id, members] : clusters_) ids.push_back(id);
    for (auto id : ids) archive_locked(id);
    return ids;
}

void DeviceManager::restore_locked(std::int64_t cluster_id) {
    fs::path path = archive_path(cluster_id);
    std::ifstream in(path);
    if (!in) throw ArchiveCorrupt("archive for cluster " + std::to_string(cluster_id) + " is missing");
    std::vector<SensorAgent> members;
    try {
        auto j = nlohmann::json::parse(in);
        if (j.at("cluster_id").get<std::int64_t>() != cluster_id) {
            throw ArchiveCorrupt("archive " + path.string() + " holds another cluster");
        }
        for (const auto& m : j.at("members")) members.push_back(sensor_agent_from_json(m));
    } catch (const ArchiveCorrupt&) {
        throw;
    } catch (const std::exception& e) {
        throw ArchiveCorrupt("archive " + path.string() + " is damaged: " + e.what());
    }
    auto& target = clusters_[cluster_id];
    std::vector<SensorAgent> merged;
    for (auto& m : members) {
        if (!index_.count(m.id)) {
            index_[m.id] = cluster_id;
            merged.push_back(std::move(m));
        }
    }
    merged.insert(merged.end(), std::make_move_iterator(target.begin()),
                  std::make_move_iterator(target.end()));
    target = std::move(merged);
    if (target.empty()) clusters_.erase(cluster_id);
    archived_.erase(cluster_id);
    fs::remove(path);
}

void DeviceManager::restore(std::int64_t cluster_id) {
    std::unique_lock lock(mutex_);
    restore_locked(cluster_id);
}

std::set<std::int64_t> DeviceManager::archived() const {
    std::shared_lock lock(mutex_);
    return archived_;
}

dsl::QTable DeviceManager::q_table() const {
    std::shared_lock lock(mutex_);
    return q_;
}

}  // namespace gw::device
