#include "fieldbabel/jobs.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "fieldbabel/error.hpp"
#include "fieldbabel/geojson.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fieldbabel {

std::string_view to_string(JobStatus s) {
    switch (s) {
        case JobStatus::pending: return "pending";
        case JobStatus::processing: return "processing";
        case JobStatus::done: return "done";
        case JobStatus::failed: return "failed";
    }
    return "failed";
}

JobStatus parse_job_status(std::string_view text) {
    for (auto s : {JobStatus::pending, JobStatus::processing, JobStatus::done, JobStatus::failed}) {
        if (to_string(s) == text) return s;
    }
    throw Error(ErrorCode::invalid_argument, fmt::format("unknown job status '{}'", text));
}

std::string request_json(const AOIRequest& r) {
    json j{{"request_id", r.request_id},
           {"email", r.email},
           {"polygon", json::parse(polygon_to_geojson(r.polygon))},
           {"crop", r.crop},
           {"year", r.year},
           {"ratio_mode", std::string(to_string(r.ratio_mode))},
           {"created_at", format_timestamp(r.created_at)},
           {"status", std::string(to_string(r.status))},
           {"scene_count", r.scene_count}};
    if (r.message) j["message"] = *r.message;
    if (r.bundle_path) j["bundle_path"] = *r.bundle_path;
    if (r.notification) j["notification"] = *r.notification;
    return j.dump();
}

AOIRequest parse_request_json(std::string_view line) {
    const auto j = json::parse(line);
    AOIRequest r;
    r.request_id = j.at("request_id").get<std::string>();
    r.email = j.at("email").get<std::string>();
    r.polygon = parse_geojson_polygon(j.at("polygon").dump());
    r.crop = j.at("crop").get<std::string>();
    r.year = j.at("year").get<int>();
    r.ratio_mode = parse_ratio_mode(j.at("ratio_mode").get<std::string>());
    r.created_at = parse_timestamp(j.at("created_at").get<std::string>());
    r.status = parse_job_status(j.at("status").get<std::string>());
    r.scene_count = j.value("scene_count", 0);
    if (j.contains("message")) r.message = j["message"].get<std::string>();
    if (j.contains("bundle_path")) r.bundle_path = j["bundle_path"].get<std::string>();
    if (j.contains("notification")) r.notification = j["notification"].get<std::string>();
    return r;
}

namespace {

fs::path ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::io_error, fmt::format("cannot create {}: {}", dir.string(), ec.message()));
    return dir;
}

}  // namespace

JobStore::JobStore(fs::path state_dir)
    : state_dir_(std::move(state_dir)), journal_(ensure_dir(state_dir_) / "jobs.jsonl") {
    std::lock_guard lock(mutex_);
    refresh_locked();
}

void JobStore::refresh_locked() {
    auto chunk = read_journal(journal_path(), offset_);
    for (const auto& line : chunk.lines) {
        try {
            auto r = parse_request_json(line);
            if (!index_.contains(r.request_id)) order_.push_back(r.request_id);
            index_[r.request_id] = std::move(r);
        } catch (const std::exception& e) {
            ++skipped_;
            spdlog::warn("skipping unreadable job journal line: {}", e.what());
        }
    }
    offset_ = chunk.next_offset;
}

void JobStore::write_locked(const AOIRequest& r) {
    journal_.append(request_json(r));
    refresh_locked();
}

void JobStore::submit(const AOIRequest& request) {
    if (request.status != JobStatus::pending) throw Error(ErrorCode::invalid_argument, "new requests must be pending");
    std::lock_guard lock(mutex_);
    FileLock flock(state_dir_ / "jobs.lock");
    refresh_locked();
    if (index_.contains(request.request_id)) {
        throw Error(ErrorCode::conflict, fmt::format("request {} already exists", request.request_id));
    }
    write_locked(request);
}

std::optional<AOIRequest> JobStore::get(const std::string& id) {
    std::lock_guard lock(mutex_);
    refresh_locked();
    const auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::optional<AOIRequest> JobStore::claim_next() {
    std::lock_guard lock(mutex_);
    FileLock flock(state_dir_ / "jobs.lock");
    refresh_locked();
    for (const auto& id : order_) {
        auto r = index_.at(id);
        if (r.status != JobStatus::pending) continue;
        r.status = JobStatus::processing;
        write_locked(r);
        return r;
    }
    return std::nullopt;
}

AOIRequest JobStore::finish(const std::string& id, JobStatus status, std::optional<std::string> message,
                            std::optional<std::string> bundle_path, int scene_count) {
    if (status != JobStatus::done && status != JobStatus::failed) {
        throw Error(ErrorCode::invalid_argument, "jobs finish as done or failed");
    }
    if ((status == JobStatus::done) != bundle_path.has_value()) {
        throw Error(ErrorCode::invalid_argument, "a bundle path comes with done and only with done");
    }
    std::lock_guard lock(mutex_);
    FileLock flock(state_dir_ / "jobs.lock");
    refresh_locked();
    const auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorCode::not_found, fmt::format("no request {}", id));
    if (it->second.status != JobStatus::processing) {
        throw Error(ErrorCode::conflict,
                    fmt::format("request {} is {}, not processing", id, to_string(it->second.status)));
    }
    auto r = it->second;
    r.status = status;
    r.message = std::move(message);
    r.bundle_path = std::move(bundle_path);
    r.scene_count = scene_count;
    write_locked(r);
    return r;
}

void JobStore::record_notification(const std::string& id, const std::string& text) {
    std::lock_guard lock(mutex_);
    FileLock flock(state_dir_ / "jobs.lock");
    refresh_locked();
    const auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorCode::not_found, fmt::format("no request {}", id));
    if (it->second.status != JobStatus::done && it->second.status != JobStatus::failed) {
        throw Error(ErrorCode::conflict, fmt::format("request {} has not finished", id));
    }
    auto r = it->second;
    r.notification = text;
    write_locked(r);
}

int JobStore::recover() {
    std::lock_guard lock(mutex_);
    FileLock flock(state_dir_ / "jobs.lock");
    refresh_locked();
    int n = 0;
    for (const auto& id : order_) {
        auto r = index_.at(id);
        if (r.status != JobStatus::processing) continue;
        r.status = JobStatus::pending;
        write_locked(r);
        ++n;
    }
    return n;
}

std::vector<AOIRequest> JobStore::all() {
    std::lock_guard lock(mutex_);
    refresh_locked();
    std::vector<AOIRequest> out;
    for (const auto& id : order_) out.push_back(index_.at(id));
    return out;
}

}  // namespace fieldbabel
