// fieldbabel command-line front end.
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "fieldbabel/analytics.hpp"
#include "fieldbabel/bytes.hpp"
#include "fieldbabel/catalog.hpp"
#include "fieldbabel/config.hpp"
#include "fieldbabel/crop_calendar.hpp"
#include "fieldbabel/crs.hpp"
#include "fieldbabel/error.hpp"
#include "fieldbabel/geotiff.hpp"
#include "fieldbabel/http_api.hpp"
#include "fieldbabel/kmeans.hpp"
#include "fieldbabel/project.hpp"
#include "fieldbabel/raster_ops.hpp"
#include "fieldbabel/service.hpp"

namespace fs = std::filesystem;
using namespace fieldbabel;

namespace {

// Blocks SIGINT/SIGTERM in every thread created afterwards; the caller
// waits for them with wait_for_shutdown().
sigset_t block_shutdown_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    return set;
}

int wait_for_shutdown(const sigset_t& set) {
    int sig = 0;
    sigwait(&set, &sig);
    spdlog::info("signal {} received, shutting down", sig);
    return sig;
}

std::string read_text(const fs::path& p) {
    const auto bytes = read_file_bytes(p);
    return {bytes.begin(), bytes.end()};
}

SceneCatalog open_catalog(const ServiceConfig& config) {
    return SceneCatalog(config.catalog_root, config.grid, CatalogOptions{config.filter, 0});
}

std::vector<FieldParcel> load_parcels(const ServiceConfig& config, const std::string& shp) {
    if (!shp.empty()) {
        const ParcelColumns cols = config.lpis ? config.lpis->columns : ParcelColumns{};
        return read_parcels_shapefile(shp, fs::path(shp).replace_extension(".dbf"), cols);
    }
    if (!config.lpis) throw Error(ErrorCode::invalid_config, "no --parcels given and no lpis source configured");
    return read_parcels_shapefile(config.lpis->shp, config.lpis->dbf, config.lpis->columns);
}

struct Interval {
    Timestamp start = Timestamp{std::chrono::seconds{0}};
    Timestamp end = start_of(Date{std::chrono::year{2100}, std::chrono::December, std::chrono::day{31}});
};

Interval interval_of(const std::string& crop, int year, const std::string& from, const std::string& to) {
    Interval iv;
    if (!crop.empty()) {
        const auto w = season_window(crop, year);
        iv.start = start_of(w.start);
        iv.end = start_of(w.end) + std::chrono::seconds(86399);
    }
    if (!from.empty()) iv.start = parse_timestamp(from);
    if (!to.empty()) iv.end = parse_timestamp(to);
    return iv;
}

BBox union_bbox(const std::vector<FieldParcel>& parcels) {
    BBox b = bbox_of(parcels.front().geometry);
    for (const auto& p : parcels) {
        const auto q = bbox_of(p.geometry);
        b = {std::min(b.min_x, q.min_x), std::min(b.min_y, q.min_y), std::max(b.max_x, q.max_x), std::max(b.max_y, q.max_y)};
    }
    return b;
}

BBox to_grid(const BBox& lonlat, int crs) { return is_geographic_crs(crs) ? lonlat : project_bbox(lonlat, crs); }

int cmd_serve(const ServiceConfig& config, bool no_worker, int port_override) {
    const auto signals = block_shutdown_signals();
    Service service(config);
    HttpApi api(service);
    const int port = api.bind(config.bind_host, port_override >= 0 ? port_override : config.bind_port);
    if (port < 0) throw Error(ErrorCode::io_error, fmt::format("cannot bind {}:{}", config.bind_host, config.bind_port));
    std::optional<WorkerPool> pool;
    if (!no_worker) pool.emplace(service, config.workers);
    std::jthread http([&] { api.listen(); });
    spdlog::info("listening on {}:{}", config.bind_host, port);
    std::printf("listening on %s:%d\n", config.bind_host.c_str(), port);
    std::fflush(stdout);
    wait_for_shutdown(signals);
    api.stop();
    return 0;
}

int cmd_worker(const ServiceConfig& config, bool drain) {
    if (drain) {
        Service service(config);
        const int reverted = service.recover();
        if (reverted > 0) spdlog::warn("recovered {} interrupted request(s)", reverted);
        int n = 0;
        while (auto id = service.process_next_job()) {
            std::printf("%s %s\n", id->c_str(), std::string(to_string(service.get_status(*id).status)).c_str());
            ++n;
        }
        spdlog::info("queue drained after {} job(s)", n);
        return 0;
    }
    const auto signals = block_shutdown_signals();
    Service service(config);
    WorkerPool pool(service, config.workers);
    wait_for_shutdown(signals);
    return 0;
}

int cmd_ingest(const ServiceConfig& config, const std::string& vv, const std::string& vh, const std::string& meta) {
    auto catalog = open_catalog(config);
    SceneInput in;
    if (!vv.empty()) in.vv = vv;
    if (!vh.empty()) in.vh = vh;
    in.sidecar = meta;
    const auto r = catalog.ingest_scene(in);
    std::printf("%s\n", record_json(r).c_str());
    return 0;
}

int cmd_timeseries(const ServiceConfig& config, const std::string& parcels_path, const std::vector<std::string>& ids,
                   const Interval& iv, const std::string& stages, std::optional<double> erosion, RatioMode mode,
                   const std::string& out_dir, bool peak) {
    auto catalog = open_catalog(config);
    auto parcels = load_parcels(config, parcels_path);
    if (!ids.empty()) {
        const std::set<std::string> wanted(ids.begin(), ids.end());
        std::erase_if(parcels, [&](const FieldParcel& p) { return !wanted.contains(p.parcel_id); });
    }
    if (parcels.empty()) throw Error(ErrorCode::not_found, "no matching parcels");

    std::vector<GrowthStageObservation> obs;
    if (!stages.empty()) obs = parse_growth_stage_csv(read_text(stages));
    else if (config.growth_stages_csv) obs = parse_growth_stage_csv(read_text(*config.growth_stages_csv));

    const auto area = union_bbox(parcels);
    const auto grid_bbox = to_grid(area, catalog.grid().crs);
    std::vector<SceneLayers> scenes;
    for (const auto& rec : catalog.query_scenes(area, iv.start, iv.end)) {
        try {
            scenes.push_back({rec.scene_id, rec.acquired_at, catalog.get_raster(rec, Polarization::VV, grid_bbox),
                              catalog.get_raster(rec, Polarization::VH, grid_bbox)});
        } catch (const Error& e) {
            if (e.code() != ErrorCode::empty_intersection) throw;
        }
    }
    spdlog::info("{} scene(s), {} parcel(s)", scenes.size(), parcels.size());

    if (!out_dir.empty()) fs::create_directories(out_dir);
    bool header_done = false;
    for (const auto& p : parcels) {
        const auto series = build_field_time_series(p, scenes, erosion.value_or(config.erosion_m), mode);
        if (series.eroded_away) spdlog::warn("parcel {} vanishes under erosion", p.parcel_id);
        const auto csv = time_series_csv(p.parcel_id, align_growth_stages(series, obs));
        if (!out_dir.empty()) {
            write_file_atomic(fs::path(out_dir) / (p.parcel_id + ".csv"), csv);
        } else {
            std::cout << (header_done ? csv.substr(csv.find('\n') + 1) : csv);
            header_done = true;
        }
        if (peak) {
            if (const auto pk = detect_peak(series)) {
                std::cerr << fmt::format("{} peak {} ratio {} (smoothed {})\n", p.parcel_id, format_timestamp(pk->timestamp),
                                         pk->ratio, pk->smoothed_ratio);
            } else {
                std::cerr << fmt::format("{} no peak (fewer than 3 samples)\n", p.parcel_id);
            }
        }
    }
    return 0;
}

int cmd_cluster(const ServiceConfig& config, const std::string& scene_id, const std::string& pol,
                const std::string& parcels_path, const std::string& parcel_id, std::optional<double> erosion, int k,
                std::uint64_t seed, int samples, const std::string& labels_out) {
    auto catalog = open_catalog(config);
    const auto records = catalog.records();
    const auto rec = std::find_if(records.begin(), records.end(), [&](const SceneRecord& r) {
        return r.scene_id == scene_id && r.status == SceneStatus::ingested;
    });
    if (rec == records.end()) throw Error(ErrorCode::not_found, fmt::format("no ingested scene {}", scene_id));
    const auto parcels = load_parcels(config, parcels_path);
    const auto parcel = std::find_if(parcels.begin(), parcels.end(), [&](const FieldParcel& p) { return p.parcel_id == parcel_id; });
    if (parcel == parcels.end()) throw Error(ErrorCode::not_found, fmt::format("no parcel {}", parcel_id));

    const int crs = catalog.grid().crs;
    const auto band = catalog.get_raster(*rec, parse_polarization(pol), to_grid(bbox_of(parcel->geometry), crs));
    const auto shape = is_geographic_crs(crs) ? parcel->geometry : project_polygon(parcel->geometry, crs);
    const auto mask = erode_disk(rasterize_polygon(shape, band.geometry), erosion.value_or(config.erosion_m));
    const auto result = kmeans_cluster(band, mask, k, seed);

    std::cerr << fmt::format("sse {} after {} iteration(s); centroids", result.sse, result.iterations);
    for (double c : result.centroids) std::cerr << fmt::format(" {:.3f}", c);
    std::cerr << '\n';
    if (!labels_out.empty()) write_geotiff(result.labels, labels_out);

    std::cout << "label,col,row,map_x,map_y,lon,lat,value\n";
    for (const auto& s : sampling_plan(result, samples)) {
        const auto ll = is_geographic_crs(crs) ? Point{s.map_x, s.map_y} : unproject_point({s.map_x, s.map_y}, crs);
        std::cout << fmt::format("{},{},{},{},{},{:.7f},{:.7f},{}\n", s.label, s.col, s.row, s.map_x, s.map_y, ll.x, ll.y, s.value);
    }
    return 0;
}

int cmd_season(const std::string& crop, std::optional<int> year) {
    if (!year) {
        std::cout << "english_name,lpis_name,start,start_year_offset,end,end_year_offset\n";
        for (const auto& c : list_crops()) {
            std::cout << fmt::format("{},{},{:02d}-{:02d},{},{:02d}-{:02d},{}\n", c.english_name, c.lpis_name, c.start.month,
                                     c.start.day, c.start_year_offset, c.end.month, c.end.day, c.end_year_offset);
        }
        return 0;
    }
    std::cout << "crop,start,end\n";
    for (const auto& c : list_crops()) {
        if (!crop.empty() && &find_crop(crop) != &c) continue;
        const auto w = season_window(c.english_name, *year);
        std::cout << fmt::format("{},{},{}\n", c.english_name, format_date(w.start), format_date(w.end));
    }
    return 0;
}

int cmd_color_ranges(const ServiceConfig& config, const Interval& iv, double lo, double hi) {
    auto catalog = open_catalog(config);
    std::vector<MultiBandRaster> quotient, difference;
    const BBox world{-180, -90, 180, 90};
    for (const auto& rec : catalog.query_scenes(world, iv.start, iv.end)) {
        const auto vv = catalog.get_raster(rec, Polarization::VV);
        const auto vh = catalog.get_raster(rec, Polarization::VH);
        quotient.push_back(composite_rgb(vv, vh, RatioMode::db_quotient));
        difference.push_back(composite_rgb(vv, vh, RatioMode::db_difference));
    }
    if (quotient.empty()) throw Error(ErrorCode::not_found, "no ingested scenes in the interval");
    const auto r = percentile_ranges(quotient, difference, lo, hi);
    const nlohmann::json j{{"color_ranges",
                            {{"vv", {r.vv.min, r.vv.max}},
                             {"vh", {r.vh.min, r.vh.max}},
                             {"db_quotient", {r.db_quotient.min, r.db_quotient.max}},
                             {"db_difference", {r.db_difference.min, r.db_difference.max}}}},
                           {"scenes", quotient.size()}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fieldbabel: Sentinel-1 field analytics and request service"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");

    std::string config_path;
    auto add_config = [&](CLI::App* sub) { sub->add_option("-c,--config", config_path, "service configuration file")->required(); };

    auto* serve = app.add_subcommand("serve", "run the HTTP API (and workers unless --no-worker)");
    add_config(serve);
    bool no_worker = false;
    int port = -1;
    serve->add_flag("--no-worker", no_worker, "do not process jobs in this process");
    serve->add_option("--port", port, "override the configured port (0 picks a free one)");

    auto* worker = app.add_subcommand("worker", "process queued requests");
    add_config(worker);
    bool drain = false;
    worker->add_flag("--drain", drain, "process until the queue is empty, then exit");

    auto* ingest = app.add_subcommand("ingest", "calibrate, filter and catalogue one dual-pol scene");
    add_config(ingest);
    std::string vv, vh, meta;
    ingest->add_option("--vv", vv, "VV digital-number GeoTIFF");
    ingest->add_option("--vh", vh, "VH digital-number GeoTIFF");
    ingest->add_option("--meta", meta, "scene sidecar JSON")->required();

    auto* ts = app.add_subcommand("timeseries", "per-parcel VV/VH series from the catalog");
    add_config(ts);
    std::string parcels_path, stages, out_dir, crop, from, to, mode_name = "db_quotient";
    std::vector<std::string> parcel_ids;
    int year = 0;
    std::optional<double> erosion;
    bool peak = false;
    ts->add_option("--parcels", parcels_path, "parcel shapefile (.shp; defaults to the configured LPIS layer)");
    ts->add_option("--parcel", parcel_ids, "restrict to these parcel ids");
    ts->add_option("--crop", crop, "season window of this crop");
    ts->add_option("--year", year, "reference year for --crop");
    ts->add_option("--from", from, "interval start (ISO-8601)");
    ts->add_option("--to", to, "interval end (ISO-8601)");
    ts->add_option("--stages", stages, "growth-stage CSV");
    ts->add_option("--erosion", erosion, "erosion radius in metres");
    ts->add_option("--ratio-mode", mode_name, "db_quotient or db_difference");
    ts->add_option("--out", out_dir, "write <parcel_id>.csv files here instead of stdout");
    ts->add_flag("--peak", peak, "report the smoothed ratio peak on stderr");

    auto* cl = app.add_subcommand("cluster", "k-means sampling map of one parcel in one scene");
    add_config(cl);
    std::string scene_id, pol = "VV", parcel_id, labels_out;
    int k = 3, samples = 3;
    std::uint64_t seed = 0;
    cl->add_option("--scene", scene_id, "scene id")->required();
    cl->add_option("--pol", pol, "VV or VH");
    cl->add_option("--parcels", parcels_path, "parcel shapefile (.shp)");
    cl->add_option("--parcel", parcel_id, "parcel id")->required();
    cl->add_option("--erosion", erosion, "erosion radius in metres");
    cl->add_option("-k", k, "number of clusters");
    cl->add_option("--seed", seed, "restart seed");
    cl->add_option("--samples", samples, "sample points per cluster");
    cl->add_option("--labels", labels_out, "write the label raster as GeoTIFF");

    auto* season = app.add_subcommand("season", "print crop season windows");
    std::optional<int> season_year;
    season->add_option("--crop", crop, "English or Danish crop name");
    season->add_option("--year", season_year, "reference (harvest) year");

    auto* ranges = app.add_subcommand("color-ranges", "percentile colour ranges over the catalog");
    add_config(ranges);
    double lo = 0.02, hi = 0.98;
    ranges->add_option("--from", from, "interval start");
    ranges->add_option("--to", to, "interval end");
    ranges->add_option("--low", lo, "lower percentile");
    ranges->add_option("--high", hi, "upper percentile");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
    spdlog::set_default_logger(spdlog::default_logger());

    try {
        if (season->parsed()) return cmd_season(crop, season_year);
        const auto config = load_service_config(config_path);
        if (serve->parsed()) return cmd_serve(config, no_worker, port);
        if (worker->parsed()) return cmd_worker(config, drain);
        if (ingest->parsed()) return cmd_ingest(config, vv, vh, meta);
        if (ts->parsed()) {
            return cmd_timeseries(config, parcels_path, parcel_ids, interval_of(crop, year, from, to), stages, erosion,
                                  parse_ratio_mode(mode_name), out_dir, peak);
        }
        if (cl->parsed()) {
            return cmd_cluster(config, scene_id, pol, parcels_path, parcel_id, erosion, k, seed, samples, labels_out);
        }
        if (ranges->parsed()) return cmd_color_ranges(config, interval_of("", 0, from, to), lo, hi);
    } catch (const Error& e) {
        std::cerr << fmt::format("error [{}]: {}\n", to_string(e.code()), e.what());
        return 2;
    } catch (const std::exception& e) {
        std::cerr << fmt::format("error: {}\n", e.what());
        return 2;
    }
    return 0;
}
