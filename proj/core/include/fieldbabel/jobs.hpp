#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fieldbabel/analytics.hpp"
#include "fieldbabel/geometry.hpp"
#include "fieldbabel/journal.hpp"
#include "fieldbabel/time.hpp"

namespace fieldbabel {

enum class JobStatus { pending, processing, done, failed };

std::string_view to_string(JobStatus s);
JobStatus parse_job_status(std::string_view text);

struct AOIRequest {
    std::string request_id;
    std::string email;
    Polygon polygon;
    std::string crop;  // canonical English name
    int year = 0;
    RatioMode ratio_mode = RatioMode::db_quotient;
    Timestamp created_at;
    JobStatus status = JobStatus::pending;
    std::optional<std::string> message;
    std::optional<std::string> bundle_path;  // relative to the state directory
    int scene_count = 0;
    std::optional<std::string> notification;

    bool operator==(const AOIRequest&) const = default;
};

std::string request_json(const AOIRequest& r);
AOIRequest parse_request_json(std::string_view line);

/// Durable job store: `jobs.jsonl` holds one full request state per line and
/// the last line for an id wins. Mutations from several processes are
/// serialised through `jobs.lock`; every read first picks up lines other
/// processes have appended.
class JobStore {
public:
    explicit JobStore(std::filesystem::path state_dir);

    /// Appends a new pending request. Throws Error(conflict) on a reused id.
    void submit(const AOIRequest& request);

    std::optional<AOIRequest> get(const std::string& id);

    /// Oldest pending request, moved to processing.
    std::optional<AOIRequest> claim_next();

    /// processing → done/failed. Throws Error(conflict) on any other
    /// transition.
    AOIRequest finish(const std::string& id, JobStatus status, std::optional<std::string> message,
                      std::optional<std::string> bundle_path, int scene_count);

    /// Adds the notification text to a finished request.
    void record_notification(const std::string& id, const std::string& text);

    /// Reverts every processing request to pending (worker start-up).
    /// Returns the number reverted.
    int recover();

    /// All requests in submission order.
    std::vector<AOIRequest> all();

    /// Lines skipped during replay because they did not parse.
    std::size_t skipped_lines() const { return skipped_; }

    const std::filesystem::path& state_dir() const { return state_dir_; }
    std::filesystem::path journal_path() const { return state_dir_ / "jobs.jsonl"; }

private:
    void refresh_locked();
    void write_locked(const AOIRequest& r);

    std::filesystem::path state_dir_;
    std::mutex mutex_;
    Journal journal_;
    std::uint64_t offset_ = 0;
    std::vector<std::string> order_;
    std::map<std::string, AOIRequest> index_;
    std::size_t skipped_ = 0;
};

}  // namespace fieldbabel
