#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fieldbabel/analytics.hpp"
#include "fieldbabel/catalog.hpp"
#include "fieldbabel/config.hpp"
#include "fieldbabel/jobs.hpp"
#include "fieldbabel/parcels.hpp"

namespace fieldbabel {

struct Notification {
    std::string request_id;
    std::string email;
    JobStatus status = JobStatus::done;
    std::string url;      // download link for done jobs
    std::string message;  // failure message for failed jobs
};

class Notifier {
public:
    virtual ~Notifier() = default;
    virtual void notify(const Notification& n) = 0;
};

/// Writes the notification to the server log only; the service records it
/// in the job record.
class LogNotifier : public Notifier {
public:
    void notify(const Notification& n) override;
};

/// One '@', non-empty local part, a domain with a dot, no whitespace.
bool valid_email(std::string_view email);

/// "a***@example.com"
std::string mask_email(std::string_view email);

/// 128 random bits as 32 lowercase hex digits.
std::string new_request_id();

/// Everything a finished job leaves behind.
struct Bundle {
    std::vector<std::uint8_t> zip;
    std::string timeseries_json;
    int scene_count = 0;
};

struct BundleInputs {
    const std::vector<FieldParcel>* parcels = nullptr;
    const std::vector<GrowthStageObservation>* observations = nullptr;
    ColorRanges color_ranges;
    double erosion_m = kDefaultErosionM;
};

/// Bundle layout:
///   manifest.json                             request echo and scene list
///   project.qgs                               QGIS project over the files below
///   scenes/<YYYY-MM-DD>_<orbit>_<PASS>.tif    3-band composites cut to the AOI bbox
///   parcels/parcels.shp|.shx|.dbf             LPIS parcels meeting the AOI bbox
///   timeseries/<parcel_id>.csv                per-parcel series
/// The archive carries no request id or clock reading, so equal catalogs and
/// equal requests give equal bytes.
Bundle build_bundle(SceneCatalog& catalog, const AOIRequest& request, const BundleInputs& inputs);

class Service {
public:
    explicit Service(ServiceConfig config, std::shared_ptr<Notifier> notifier = std::make_shared<LogNotifier>());

    /// Validates and stores a pending request. Errors: malformed_document,
    /// not_single_polygon, not_polygon_type, unclosed_ring, invalid_polygon,
    /// oversized_aoi, invalid_email, unknown_crop, invalid_argument (year).
    std::string submit_request(std::string_view geojson, std::string_view email, std::string_view crop, int year,
                               RatioMode ratio_mode = RatioMode::db_quotient);

    /// Processes the oldest pending request; failures end up in the record.
    std::optional<std::string> process_next_job();

    /// Errors: not_found.
    AOIRequest get_status(const std::string& request_id);
    /// Errors: not_found, conflict (not done).
    std::vector<std::uint8_t> download_bundle(const std::string& request_id);
    std::string timeseries_json(const std::string& request_id);

    /// JSON status view; the email is masked.
    std::string status_view(const AOIRequest& request) const;
    std::string bundle_url(const std::string& request_id) const;

    /// Reverts interrupted jobs to pending.
    int recover() { return jobs_.recover(); }

    /// Wakes idle workers after a submission in this process.
    void wake_workers();
    /// Blocks until woken or `timeout` passes.
    void wait_for_work(std::chrono::milliseconds timeout);

    JobStore& jobs() { return jobs_; }
    SceneCatalog& catalog() { return catalog_; }
    const ServiceConfig& config() const { return config_; }

private:
    void notify(const AOIRequest& request);

    ServiceConfig config_;
    std::shared_ptr<Notifier> notifier_;
    SceneCatalog catalog_;
    JobStore jobs_;
    std::vector<FieldParcel> parcels_;
    std::vector<GrowthStageObservation> observations_;

    std::mutex wake_mutex_;
    std::condition_variable wake_;
    std::uint64_t wake_seq_ = 0;
};

/// N threads draining the job queue; runs recovery first. Stops and joins on
/// destruction.
class WorkerPool {
public:
    WorkerPool(Service& service, int workers, std::chrono::milliseconds idle_poll = std::chrono::milliseconds(500));
    ~WorkerPool();
    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    std::size_t processed() const { return processed_.load(); }

private:
    Service& service_;
    std::atomic<std::size_t> processed_{0};
    std::vector<std::jthread> threads_;
};

}  // namespace fieldbabel
