#include "fieldbabel/catalog.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "fieldbabel/bytes.hpp"
#include "fieldbabel/crs.hpp"
#include "fieldbabel/error.hpp"
#include "fieldbabel/geotiff.hpp"
#include "fieldbabel/journal.hpp"
#include "fieldbabel/raster_ops.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fieldbabel {

std::string_view to_string(Polarization p) { return p == Polarization::VV ? "VV" : "VH"; }
std::string_view to_string(Pass p) { return p == Pass::ascending ? "ASCENDING" : "DESCENDING"; }
std::string_view to_string(SceneStatus s) { return s == SceneStatus::ingested ? "ingested" : "failed"; }

Polarization parse_polarization(std::string_view text) {
    if (text == "VV" || text == "vv") return Polarization::VV;
    if (text == "VH" || text == "vh") return Polarization::VH;
    throw Error(ErrorCode::invalid_argument, fmt::format("unknown polarization '{}'", text));
}

Pass parse_pass(std::string_view text) {
    if (text == "ASCENDING") return Pass::ascending;
    if (text == "DESCENDING") return Pass::descending;
    throw Error(ErrorCode::invalid_argument, fmt::format("pass must be ASCENDING or DESCENDING, got '{}'", text));
}

GridGeometry AnalysisGrid::covering(const BBox& extent) const {
    constexpr double eps = 1e-9;
    const double c0 = std::floor((extent.min_x - origin_x) / pixel_size + eps);
    const double c1 = std::ceil((extent.max_x - origin_x) / pixel_size - eps);
    const double r0 = std::floor((origin_y - extent.max_y) / pixel_size + eps);
    const double r1 = std::ceil((origin_y - extent.min_y) / pixel_size - eps);
    GridGeometry g;
    g.width = std::max(1, static_cast<int>(c1 - c0));
    g.height = std::max(1, static_cast<int>(r1 - r0));
    g.origin_x = origin_x + c0 * pixel_size;
    g.origin_y = origin_y - r0 * pixel_size;
    g.pixel_size_x = pixel_size;
    g.pixel_size_y = pixel_size;
    g.crs = crs;
    return g;
}

void AnalysisGrid::validate() const {
    if (!is_supported_crs(crs)) throw Error(ErrorCode::invalid_config, fmt::format("unsupported grid CRS EPSG:{}", crs));
    if (!(pixel_size > 0.0) || !std::isfinite(origin_x) || !std::isfinite(origin_y)) {
        throw Error(ErrorCode::invalid_config, "analysis grid needs a positive pixel size and a finite origin");
    }
}

std::string analysis_grid_json(const AnalysisGrid& grid) {
    return json{{"crs", grid.crs}, {"origin_x", grid.origin_x}, {"origin_y", grid.origin_y}, {"pixel_size", grid.pixel_size}}
        .dump();
}

AnalysisGrid parse_analysis_grid(std::string_view text) {
    try {
        const auto j = json::parse(text);
        AnalysisGrid g;
        g.crs = j.at("crs").get<int>();
        g.origin_x = j.at("origin_x").get<double>();
        g.origin_y = j.at("origin_y").get<double>();
        g.pixel_size = j.value("pixel_size", kAnalysisPixelSize);
        g.validate();
        return g;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_config, fmt::format("bad analysis grid: {}", e.what()));
    }
}

namespace {

void check_scene_id(const std::string& id) {
    const bool ok = !id.empty() && id.size() <= 128 && id.front() != '.' &&
                    std::all_of(id.begin(), id.end(), [](char c) {
                        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                               c == '-' || c == '.';
                    });
    if (!ok) throw Error(ErrorCode::invalid_sidecar, fmt::format("scene_id '{}' must match [A-Za-z0-9_.-]+", id));
}

CalibrationLUT lut_from_json(const json& j) {
    CalibrationLUT lut;
    for (const auto& row : j) {
        CalibrationVector v;
        v.line = row.at("line").get<int>();
        for (const auto& pt : row.at("points")) {
            v.pixels.push_back(pt.at("pixel").get<int>());
            v.gains.push_back(pt.at("gain").get<double>());
        }
        lut.vectors.push_back(std::move(v));
    }
    return lut;
}

json lut_to_json(const CalibrationLUT& lut) {
    json rows = json::array();
    for (const auto& v : lut.vectors) {
        json points = json::array();
        for (std::size_t i = 0; i < v.pixels.size(); ++i) points.push_back({{"pixel", v.pixels[i]}, {"gain", v.gains[i]}});
        rows.push_back({{"line", v.line}, {"points", points}});
    }
    return rows;
}

}  // namespace

SceneMetadata parse_sidecar(std::string_view text) {
    SceneMetadata m;
    try {
        const auto j = json::parse(text);
        m.scene_id = j.at("scene_id").get<std::string>();
        m.acquired_at = parse_timestamp(j.at("acquired_at").get<std::string>());
        m.pass = parse_pass(j.at("pass").get<std::string>());
        m.relative_orbit = j.at("relative_orbit").get<int>();
        for (const auto& [key, rows] : j.at("calibration").items()) {
            const auto pol = parse_polarization(key);
            auto lut = lut_from_json(rows);
            lut.validate();
            m.calibration[pol] = std::move(lut);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_sidecar, fmt::format("bad sidecar: {}", e.what()));
    } catch (const Error& e) {
        throw Error(ErrorCode::invalid_sidecar, fmt::format("bad sidecar: {}", e.what()));
    }
    check_scene_id(m.scene_id);
    if (m.relative_orbit < 1) throw Error(ErrorCode::invalid_sidecar, "relative_orbit must be positive");
    return m;
}

std::string sidecar_json(const SceneMetadata& meta) {
    json cal = json::object();
    for (const auto& [pol, lut] : meta.calibration) cal[std::string(to_string(pol))] = lut_to_json(lut);
    return json{{"scene_id", meta.scene_id},
                {"acquired_at", format_timestamp(meta.acquired_at)},
                {"pass", std::string(to_string(meta.pass))},
                {"relative_orbit", meta.relative_orbit},
                {"calibration", cal}}
        .dump(2);
}

std::string record_json(const SceneRecord& r) {
    json pols = json::array();
    for (auto p : r.polarizations) pols.push_back(std::string(to_string(p)));
    json products = json::object();
    for (const auto& [pol, path] : r.product_paths) products[std::string(to_string(pol))] = path;
    json j{{"scene_id", r.scene_id},
           {"acquired_at", format_timestamp(r.acquired_at)},
           {"pass", std::string(to_string(r.pass))},
           {"relative_orbit", r.relative_orbit},
           {"footprint", {r.footprint.min_x, r.footprint.min_y, r.footprint.max_x, r.footprint.max_y}},
           {"polarizations", pols},
           {"products", products},
           {"status", std::string(to_string(r.status))}};
    if (!r.message.empty()) j["message"] = r.message;
    return j.dump();
}

SceneRecord parse_record(std::string_view line) {
    try {
        const auto j = json::parse(line);
        SceneRecord r;
        r.scene_id = j.at("scene_id").get<std::string>();
        r.acquired_at = parse_timestamp(j.at("acquired_at").get<std::string>());
        r.pass = parse_pass(j.at("pass").get<std::string>());
        r.relative_orbit = j.at("relative_orbit").get<int>();
        const auto& fp = j.at("footprint");
        r.footprint = BBox{fp.at(0).get<double>(), fp.at(1).get<double>(), fp.at(2).get<double>(), fp.at(3).get<double>()};
        for (const auto& p : j.at("polarizations")) r.polarizations.push_back(parse_polarization(p.get<std::string>()));
        for (const auto& [key, path] : j.at("products").items()) r.product_paths[parse_polarization(key)] = path.get<std::string>();
        const auto status = j.at("status").get<std::string>();
        if (status != "ingested" && status != "failed") throw Error(ErrorCode::catalog_corruption, "bad status " + status);
        r.status = status == "ingested" ? SceneStatus::ingested : SceneStatus::failed;
        r.message = j.value("message", "");
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::catalog_corruption, fmt::format("unreadable catalog entry: {}", e.what()));
    } catch (const Error& e) {
        throw Error(ErrorCode::catalog_corruption, fmt::format("unreadable catalog entry: {}", e.what()));
    }
}

SceneCatalog::SceneCatalog(fs::path root, std::optional<AnalysisGrid> grid, CatalogOptions options)
    : root_(std::move(root)), options_(std::move(options)) {
    options_.filter.validate();
    std::error_code ec;
    fs::create_directories(root_ / "catalog", ec);
    if (ec) throw Error(ErrorCode::io_error, fmt::format("cannot create catalog at {}: {}", root_.string(), ec.message()));

    FileLock lock(root_ / "catalog.lock");
    const auto grid_path = root_ / "grid.json";
    if (fs::exists(grid_path)) {
        const auto bytes = read_file_bytes(grid_path);
        grid_ = parse_analysis_grid(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
        if (grid && !(*grid == grid_)) {
            throw Error(ErrorCode::invalid_config,
                        fmt::format("catalog at {} was created with grid {}", root_.string(), analysis_grid_json(grid_)));
        }
    } else {
        if (!grid) throw Error(ErrorCode::invalid_config, fmt::format("no catalog at {} and no grid to create one", root_.string()));
        grid->validate();
        grid_ = *grid;
        write_file_atomic(grid_path, analysis_grid_json(grid_));
    }
    refresh();
    cleanup_orphans();
}

void SceneCatalog::apply(const std::string& line) {
    auto r = parse_record(line);
    if (!index_.contains(r.scene_id)) order_.push_back(r.scene_id);
    index_[r.scene_id] = std::move(r);
}

void SceneCatalog::refresh() {
    std::unique_lock lock(mutex_);
    auto chunk = read_journal(root_ / "catalog.jsonl", offset_);
    for (const auto& line : chunk.lines) apply(line);
    offset_ = chunk.next_offset;
}

// Directories left by an ingest that died before its journal entry.
void SceneCatalog::cleanup_orphans() {
    std::shared_lock lock(mutex_);
    for (const auto& entry : fs::directory_iterator(root_ / "catalog")) {
        if (!entry.is_directory()) continue;
        const auto name = entry.path().filename().string();
        const auto it = index_.find(name);
        if (it != index_.end() && it->second.status == SceneStatus::ingested) continue;
        spdlog::warn("removing orphaned catalog directory {}", entry.path().string());
        fs::remove_all(entry.path());
    }
}

SceneRecord SceneCatalog::ingest_scene(const SceneInput& input) {
    const auto sidecar_bytes = read_file_bytes(input.sidecar);
    const auto meta =
        parse_sidecar(std::string_view(reinterpret_cast<const char*>(sidecar_bytes.data()), sidecar_bytes.size()));
    for (auto pol : {Polarization::VV, Polarization::VH}) {
        const auto& path = pol == Polarization::VV ? input.vv : input.vh;
        if (!path) throw Error(ErrorCode::missing_polarization, fmt::format("scene {} has no {} raster", meta.scene_id, to_string(pol)));
        if (!meta.calibration.contains(pol)) {
            throw Error(ErrorCode::missing_polarization,
                        fmt::format("scene {} has no {} calibration table", meta.scene_id, to_string(pol)));
        }
    }

    std::lock_guard writer(write_mutex_);
    FileLock lock(root_ / "catalog.lock");
    refresh();
    {
        std::shared_lock read(mutex_);
        const auto it = index_.find(meta.scene_id);
        if (it != index_.end() && it->second.status == SceneStatus::ingested) {
            throw Error(ErrorCode::duplicate_scene, fmt::format("scene {} is already in the catalog", meta.scene_id));
        }
    }

    SceneRecord record;
    record.scene_id = meta.scene_id;
    record.acquired_at = meta.acquired_at;
    record.pass = meta.pass;
    record.relative_orbit = meta.relative_orbit;
    record.polarizations = {Polarization::VV, Polarization::VH};

    const auto final_dir = root_ / "catalog" / meta.scene_id;
    const auto tmp_dir = root_ / "catalog" / (".tmp-" + meta.scene_id);
    Journal journal(root_ / "catalog.jsonl");
    try {
        fs::remove_all(tmp_dir);
        fs::create_directories(tmp_dir);
        std::optional<BBox> footprint;
        for (auto pol : record.polarizations) {
            const auto dn = read_geotiff(pol == Polarization::VV ? *input.vv : *input.vh);
            if (dn.geometry.crs != grid_.crs) {
                throw Error(ErrorCode::crs_mismatch, fmt::format("{} raster is EPSG:{}, analysis grid is EPSG:{}", to_string(pol),
                                                                 dn.geometry.crs, grid_.crs));
            }
            const auto sigma0 = calibrate_sigma0(dn, meta.calibration.at(pol));
            const auto filtered = lee_sigma_filter(sigma0, options_.filter, options_.threads);
            const auto resampled = resample_bilinear(filtered, grid_.covering(dn.geometry.extent()));
            const auto db = to_db(resampled);
            const auto name = fmt::format("{}.tif", to_string(pol));
            write_geotiff(db, tmp_dir / name);
            record.product_paths[pol] = fmt::format("catalog/{}/{}", meta.scene_id, name);

            const auto fp = unproject_bbox(dn.geometry.extent(), grid_.crs);
            footprint = footprint ? BBox{std::min(footprint->min_x, fp.min_x), std::min(footprint->min_y, fp.min_y),
                                         std::max(footprint->max_x, fp.max_x), std::max(footprint->max_y, fp.max_y)}
                                  : fp;
        }
        record.footprint = *footprint;
        fs::remove_all(final_dir);
        fs::rename(tmp_dir, final_dir);
        sync_directory(root_ / "catalog");
    } catch (const std::exception& e) {
        std::error_code ec;
        fs::remove_all(tmp_dir, ec);
        record.status = SceneStatus::failed;
        record.message = e.what();
        record.product_paths.clear();
        journal.append(record_json(record));
        refresh();
        spdlog::error("ingest of {} failed: {}", meta.scene_id, e.what());
        throw Error(ErrorCode::pipeline_failure, fmt::format("scene {}: {}", meta.scene_id, e.what()));
    }
    journal.append(record_json(record));
    refresh();
    spdlog::info("ingested scene {} ({})", record.scene_id, format_timestamp(record.acquired_at));
    return record;
}

std::vector<SceneRecord> SceneCatalog::query_scenes(const BBox& bbox, Timestamp start, Timestamp end) {
    if (end < start) throw Error(ErrorCode::invalid_argument, "query interval ends before it starts");
    refresh();
    std::vector<SceneRecord> out;
    {
        std::shared_lock lock(mutex_);
        for (const auto& [id, r] : index_) {
            if (r.status != SceneStatus::ingested) continue;
            if (!r.footprint.intersects(bbox)) continue;
            if (r.acquired_at < start || r.acquired_at > end) continue;
            out.push_back(r);
        }
    }
    std::sort(out.begin(), out.end(), [](const SceneRecord& a, const SceneRecord& b) {
        return std::tie(a.acquired_at, a.scene_id) < std::tie(b.acquired_at, b.scene_id);
    });
    return out;
}

std::vector<SceneRecord> SceneCatalog::records() {
    refresh();
    std::shared_lock lock(mutex_);
    std::vector<SceneRecord> out;
    for (const auto& id : order_) out.push_back(index_.at(id));
    return out;
}

Raster SceneCatalog::get_raster(const SceneRecord& record, Polarization pol, const std::optional<BBox>& grid_bbox) const {
    const auto it = record.product_paths.find(pol);
    if (record.status != SceneStatus::ingested || it == record.product_paths.end()) {
        throw Error(ErrorCode::not_found, fmt::format("scene {} has no {} layer", record.scene_id, to_string(pol)));
    }
    const auto path = root_ / it->second;
    if (!fs::exists(path)) {
        throw Error(ErrorCode::catalog_corruption,
                    fmt::format("scene {}: layer file {} is missing", record.scene_id, path.string()));
    }
    auto raster = read_geotiff(path);
    return grid_bbox ? subset_bbox(raster, *grid_bbox) : raster;
}

}  // namespace fieldbabel
