#include "fieldbabel/service.hpp"

#include <cctype>
#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "fieldbabel/bytes.hpp"
#include "fieldbabel/crop_calendar.hpp"
#include "fieldbabel/crs.hpp"
#include "fieldbabel/error.hpp"
#include "fieldbabel/geojson.hpp"
#include "fieldbabel/geotiff.hpp"
#include "fieldbabel/project.hpp"
#include "fieldbabel/zip.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fieldbabel {

void LogNotifier::notify(const Notification& n) {
    if (n.status == JobStatus::done) {
        spdlog::info("notify {}: request {} ready at {}", mask_email(n.email), n.request_id, n.url);
    } else {
        spdlog::info("notify {}: request {} failed: {}", mask_email(n.email), n.request_id, n.message);
    }
}

bool valid_email(std::string_view email) {
    const auto at = email.find('@');
    if (at == std::string_view::npos || email.find('@', at + 1) != std::string_view::npos) return false;
    const auto local = email.substr(0, at);
    const auto domain = email.substr(at + 1);
    if (local.empty() || domain.empty() || domain.find('.') == std::string_view::npos) return false;
    for (unsigned char c : email) {
        if (std::isspace(c) || std::iscntrl(c)) return false;
    }
    return true;
}

std::string mask_email(std::string_view email) {
    const auto at = email.find('@');
    if (at == std::string_view::npos || at == 0) return "***";
    return fmt::format("{}***{}", email.front(), email.substr(at));
}

std::string new_request_id() {
    std::random_device rd;
    std::string id;
    for (int i = 0; i < 4; ++i) id += fmt::format("{:08x}", static_cast<std::uint32_t>(rd()));
    return id;
}

namespace {

std::string safe_name(std::string_view s) {
    std::string out;
    for (char c : s) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        out += ok ? c : '_';
    }
    if (out.empty() || out.front() == '.') out.insert(out.begin(), '_');
    return out;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<std::uint8_t> as_bytes(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

Bundle build_bundle(SceneCatalog& catalog, const AOIRequest& request, const BundleInputs& inputs) {
    const auto window = season_window(request.crop, request.year);
    const Timestamp start = start_of(window.start);
    const Timestamp end = start_of(window.end) + std::chrono::seconds(86399);
    const BBox aoi = bbox_of(request.polygon);
    const auto& grid = catalog.grid();
    const BBox grid_bbox = is_geographic_crs(grid.crs) ? aoi : project_bbox(aoi, grid.crs);

    std::vector<ZipEntry> entries;
    std::vector<ProjectLayer> layers;
    std::vector<SceneLayers> series_inputs;
    json scenes = json::array();
    std::set<std::string> names;
    for (const auto& rec : catalog.query_scenes(aoi, start, end)) {
        Raster vv, vh;
        try {
            vv = catalog.get_raster(rec, Polarization::VV, grid_bbox);
            vh = catalog.get_raster(rec, Polarization::VH, grid_bbox);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::empty_intersection) continue;
            throw Error(e.code(), fmt::format("scene {}: {}", rec.scene_id, e.what()));
        }
        auto name = fmt::format("{}_{}_{}", format_date(date_of(rec.acquired_at)), rec.relative_orbit, to_string(rec.pass));
        if (names.contains(name)) name += "_" + safe_name(rec.scene_id);
        names.insert(name);
        const auto file = fmt::format("scenes/{}.tif", name);
        entries.push_back({file, encode_geotiff(composite_rgb(vv, vh, request.ratio_mode))});
        layers.push_back({LayerKind::composite, file, name, grid.crs});
        scenes.push_back({{"scene_id", rec.scene_id},
                          {"acquired_at", format_timestamp(rec.acquired_at)},
                          {"pass", std::string(to_string(rec.pass))},
                          {"relative_orbit", rec.relative_orbit},
                          {"file", file}});
        series_inputs.push_back({rec.scene_id, rec.acquired_at, std::move(vv), std::move(vh)});
    }

    const auto parcels = inputs.parcels ? clip_parcels_bbox(*inputs.parcels, aoi) : std::vector<FieldParcel>{};
    auto shp = encode_parcels_shapefile(parcels);
    entries.push_back({"parcels/parcels.shp", std::move(shp.shp)});
    entries.push_back({"parcels/parcels.shx", std::move(shp.shx)});
    entries.push_back({"parcels/parcels.dbf", std::move(shp.dbf)});
    layers.push_back({LayerKind::parcels, "parcels/parcels.shp", "parcels", 4326});

    static const std::vector<GrowthStageObservation> no_observations;
    const auto& observations = inputs.observations ? *inputs.observations : no_observations;
    json series_files = json::array();
    json parcel_summary = json::array();
    json points = json::array();
    std::set<std::string> series_names;
    for (const auto& parcel : parcels) {
        const auto series = build_field_time_series(parcel, series_inputs, inputs.erosion_m, request.ratio_mode);
        const auto rows = align_growth_stages(series, observations);
        auto file_name = safe_name(parcel.parcel_id);
        while (series_names.contains(file_name)) file_name += "_";
        series_names.insert(file_name);
        const auto file = fmt::format("timeseries/{}.csv", file_name);
        entries.push_back({file, as_bytes(time_series_csv(parcel.parcel_id, rows))});
        series_files.push_back(file);
        layers.push_back({LayerKind::table, file, parcel.parcel_id, 4326});
        parcel_summary.push_back({{"parcel_id", parcel.parcel_id},
                                  {"crop_code", parcel.crop_code},
                                  {"eroded_away", series.eroded_away},
                                  {"sample_count", series.samples.size()}});
        for (const auto& row : rows) {
            points.push_back({{"parcel_id", parcel.parcel_id},
                              {"timestamp", format_timestamp(row.sample.timestamp)},
                              {"scene_id", row.sample.scene_id},
                              {"mean_vv_db", number_or_null(row.sample.mean_vv_db)},
                              {"mean_vh_db", number_or_null(row.sample.mean_vh_db)},
                              {"ratio", number_or_null(row.sample.ratio)},
                              {"pixel_count", row.sample.pixel_count},
                              {"stage", row.stage ? number_or_null(*row.stage) : json(nullptr)}});
        }
    }

    const auto title = fmt::format("fieldbabel {} {}", request.crop, request.year);
    entries.push_back({"project.qgs", as_bytes(build_project_descriptor(layers, inputs.color_ranges, request.ratio_mode, title))});

    const json manifest{{"request",
                         {{"aoi", json::parse(polygon_to_geojson(request.polygon))},
                          {"crop", request.crop},
                          {"year", request.year},
                          {"ratio_mode", std::string(to_string(request.ratio_mode))}}},
                        {"window", {{"start", format_date(window.start)}, {"end", format_date(window.end)}}},
                        {"grid_crs", grid.crs},
                        {"scenes", scenes},
                        {"parcels", {{"count", parcels.size()}, {"file", "parcels/parcels.shp"}}},
                        {"timeseries", series_files}};
    entries.push_back({"manifest.json", as_bytes(manifest.dump(2) + "\n")});

    Bundle out;
    out.scene_count = static_cast<int>(scenes.size());
    out.zip = write_zip(std::move(entries));
    out.timeseries_json = json{{"request_id", request.request_id},
                               {"ratio_mode", std::string(to_string(request.ratio_mode))},
                               {"parcels", parcel_summary},
                               {"points", points}}
                              .dump();
    return out;
}

Service::Service(ServiceConfig config, std::shared_ptr<Notifier> notifier)
    : config_(std::move(config)),
      notifier_(notifier ? std::move(notifier) : std::make_shared<LogNotifier>()),
      catalog_(config_.catalog_root, config_.grid, CatalogOptions{config_.filter, 0}),
      jobs_(config_.state_dir) {
    if (config_.lpis) parcels_ = read_parcels_shapefile(config_.lpis->shp, config_.lpis->dbf, config_.lpis->columns);
    if (config_.growth_stages_csv) {
        const auto bytes = read_file_bytes(*config_.growth_stages_csv);
        observations_ = parse_growth_stage_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    }
}

std::string Service::submit_request(std::string_view geojson, std::string_view email, std::string_view crop, int year,
                                    RatioMode ratio_mode) {
    AOIRequest r;
    r.polygon = parse_geojson_polygon(geojson);
    validate_aoi(r.polygon);
    if (!valid_email(email)) throw Error(ErrorCode::invalid_email, fmt::format("'{}' is not a valid e-mail address", email));
    r.crop = std::string(find_crop(crop).english_name);
    season_window(r.crop, year);
    r.email = std::string(email);
    r.year = year;
    r.ratio_mode = ratio_mode;
    r.request_id = new_request_id();
    r.created_at = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    r.status = JobStatus::pending;
    jobs_.submit(r);
    spdlog::info("request {} accepted ({} {})", r.request_id, r.crop, r.year);
    wake_workers();
    return r.request_id;
}

std::optional<std::string> Service::process_next_job() {
    auto claimed = jobs_.claim_next();
    if (!claimed) return std::nullopt;
    const auto id = claimed->request_id;
    spdlog::info("processing request {}", id);

    AOIRequest finished;
    try {
        const BundleInputs inputs{&parcels_, &observations_, config_.color_ranges, config_.erosion_m};
        const auto bundle = build_bundle(catalog_, *claimed, inputs);
        const auto rel = fmt::format("bundles/{}.zip", id);
        fs::create_directories(config_.state_dir / "bundles");
        write_file_atomic(config_.state_dir / rel, bundle.zip);
        write_file_atomic(config_.state_dir / fmt::format("bundles/{}.timeseries.json", id), bundle.timeseries_json);
        finished = jobs_.finish(id, JobStatus::done, std::nullopt, rel, bundle.scene_count);
        spdlog::info("request {} done with {} scenes", id, bundle.scene_count);
    } catch (const std::exception& e) {
        spdlog::error("request {} failed: {}", id, e.what());
        finished = jobs_.finish(id, JobStatus::failed, std::string(e.what()), std::nullopt, 0);
    }
    notify(finished);
    return id;
}

void Service::notify(const AOIRequest& r) {
    Notification n{r.request_id, r.email, r.status, {}, {}};
    if (r.status == JobStatus::done) n.url = bundle_url(r.request_id);
    else n.message = r.message.value_or("");
    try {
        notifier_->notify(n);
        jobs_.record_notification(r.request_id, r.status == JobStatus::done ? fmt::format("download link sent: {}", n.url)
                                                                            : fmt::format("failure reported: {}", n.message));
    } catch (const std::exception& e) {
        spdlog::error("notification for request {} failed: {}", r.request_id, e.what());
    }
}

AOIRequest Service::get_status(const std::string& request_id) {
    auto r = jobs_.get(request_id);
    if (!r) throw Error(ErrorCode::not_found, fmt::format("no request {}", request_id));
    return *r;
}

std::vector<std::uint8_t> Service::download_bundle(const std::string& request_id) {
    const auto r = get_status(request_id);
    if (r.status != JobStatus::done || !r.bundle_path) {
        throw Error(ErrorCode::conflict, fmt::format("request {} is {}; no bundle yet", request_id, to_string(r.status)));
    }
    return read_file_bytes(config_.state_dir / *r.bundle_path);
}

std::string Service::timeseries_json(const std::string& request_id) {
    const auto r = get_status(request_id);
    if (r.status != JobStatus::done) {
        throw Error(ErrorCode::conflict, fmt::format("request {} is {}; no series yet", request_id, to_string(r.status)));
    }
    const auto bytes = read_file_bytes(config_.state_dir / fmt::format("bundles/{}.timeseries.json", request_id));
    return {bytes.begin(), bytes.end()};
}

std::string Service::bundle_url(const std::string& request_id) const {
    return fmt::format("{}/api/requests/{}/bundle.zip", config_.public_url, request_id);
}

std::string Service::status_view(const AOIRequest& r) const {
    json j{{"request_id", r.request_id},
           {"status", std::string(to_string(r.status))},
           {"email", mask_email(r.email)},
           {"crop", r.crop},
           {"year", r.year},
           {"ratio_mode", std::string(to_string(r.ratio_mode))},
           {"created_at", format_timestamp(r.created_at)},
           {"scene_count", r.scene_count},
           {"message", r.message ? json(*r.message) : json(nullptr)}};
    if (r.status == JobStatus::done) {
        j["bundle_url"] = fmt::format("/api/requests/{}/bundle.zip", r.request_id);
        j["timeseries_url"] = fmt::format("/api/requests/{}/timeseries.json", r.request_id);
    }
    return j.dump();
}

void Service::wake_workers() {
    {
        std::lock_guard lock(wake_mutex_);
        ++wake_seq_;
    }
    wake_.notify_all();
}

void Service::wait_for_work(std::chrono::milliseconds timeout) {
    std::unique_lock lock(wake_mutex_);
    const auto seen = wake_seq_;
    wake_.wait_for(lock, timeout, [&] { return wake_seq_ != seen; });
}

WorkerPool::WorkerPool(Service& service, int workers, std::chrono::milliseconds idle_poll) : service_(service) {
    const int reverted = service_.recover();
    if (reverted > 0) spdlog::warn("recovered {} interrupted request(s)", reverted);
    for (int i = 0; i < workers; ++i) {
        threads_.emplace_back([this, idle_poll](std::stop_token stop) {
            while (!stop.stop_requested()) {
                try {
                    if (service_.process_next_job()) {
                        ++processed_;
                        continue;
                    }
                } catch (const std::exception& e) {
                    spdlog::error("worker error: {}", e.what());
                }
                service_.wait_for_work(idle_poll);
            }
        });
    }
}

WorkerPool::~WorkerPool() {
    for (auto& t : threads_) t.request_stop();
    service_.wake_workers();
    threads_.clear();
}

}  // namespace fieldbabel
