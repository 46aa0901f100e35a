#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "fieldbabel/calibration.hpp"
#include "fieldbabel/geometry.hpp"
#include "fieldbabel/raster.hpp"
#include "fieldbabel/speckle.hpp"
#include "fieldbabel/time.hpp"

namespace fieldbabel {

enum class Polarization { VV, VH };
enum class Pass { ascending, descending };
enum class SceneStatus { ingested, failed };

std::string_view to_string(Polarization p);
std::string_view to_string(Pass p);  // "ASCENDING" / "DESCENDING"
std::string_view to_string(SceneStatus s);
Polarization parse_polarization(std::string_view text);
Pass parse_pass(std::string_view text);

/// The lattice every analysis-ready layer is resampled onto: CRS, the
/// corner of one reference pixel, and the pitch.
struct AnalysisGrid {
    int crs = 4326;
    double origin_x = 0.0;
    double origin_y = 0.0;
    double pixel_size = kAnalysisPixelSize;

    /// Smallest lattice-aligned grid covering `extent` (grid CRS).
    GridGeometry covering(const BBox& extent) const;
    void validate() const;

    bool operator==(const AnalysisGrid&) const = default;
};

/// Parsed scene sidecar document.
struct SceneMetadata {
    std::string scene_id;
    Timestamp acquired_at;
    Pass pass = Pass::ascending;
    int relative_orbit = 0;
    std::map<Polarization, CalibrationLUT> calibration;
};

/// Throws Error(invalid_sidecar).
SceneMetadata parse_sidecar(std::string_view text);
std::string sidecar_json(const SceneMetadata& meta);

struct SceneRecord {
    std::string scene_id;
    Timestamp acquired_at;
    Pass pass = Pass::ascending;
    int relative_orbit = 0;
    BBox footprint;  // WGS84
    std::vector<Polarization> polarizations;
    std::map<Polarization, std::string> product_paths;  // relative to the catalog root
    SceneStatus status = SceneStatus::ingested;
    std::string message;

    bool operator==(const SceneRecord&) const = default;
};

struct SceneInput {
    std::optional<std::filesystem::path> vv;
    std::optional<std::filesystem::path> vh;
    std::filesystem::path sidecar;
};

struct CatalogOptions {
    SpeckleFilterParams filter;
    unsigned threads = 0;
};

/// On-disk layout under the root:
///   grid.json                  analysis grid, fixed at creation
///   catalog.jsonl              one scene record per line, last entry per id wins
///   catalog/<scene_id>/VV.tif  analysis-ready dB layers
///
/// Ingestion is serialised across processes by a lock file; readers pick up
/// entries appended by other processes on every query.
class SceneCatalog {
public:
    /// Creates the catalog when `grid` is given and none exists yet. An
    /// existing catalog must agree with `grid` if one is passed
    /// (Error(invalid_config) otherwise).
    SceneCatalog(std::filesystem::path root, std::optional<AnalysisGrid> grid, CatalogOptions options = {});

    /// calibrate → speckle filter → resample to the analysis grid → dB.
    /// Errors: duplicate_scene, missing_polarization, invalid_sidecar, and
    /// pipeline_failure (which also journals a failed record).
    SceneRecord ingest_scene(const SceneInput& input);

    /// Ingested scenes whose footprint meets `bbox` (WGS84) and whose
    /// acquisition lies in [start, end], by time then id.
    std::vector<SceneRecord> query_scenes(const BBox& bbox, Timestamp start, Timestamp end);

    /// Every record, failed ones included, in journal order of first
    /// appearance.
    std::vector<SceneRecord> records();

    /// The stored layer, optionally subset to `grid_bbox` (grid CRS).
    /// Missing files are Error(catalog_corruption).
    Raster get_raster(const SceneRecord& record, Polarization pol, const std::optional<BBox>& grid_bbox = std::nullopt) const;

    const AnalysisGrid& grid() const { return grid_; }
    const std::filesystem::path& root() const { return root_; }

    /// Picks up entries appended by other processes.
    void refresh();

private:
    void apply(const std::string& line);
    void cleanup_orphans();

    std::filesystem::path root_;
    AnalysisGrid grid_;
    CatalogOptions options_;

    mutable std::shared_mutex mutex_;
    std::mutex write_mutex_;
    std::uint64_t offset_ = 0;
    std::vector<std::string> order_;
    std::map<std::string, SceneRecord> index_;
};

std::string record_json(const SceneRecord& record);
SceneRecord parse_record(std::string_view line);

std::string analysis_grid_json(const AnalysisGrid& grid);
AnalysisGrid parse_analysis_grid(std::string_view text);

}  // namespace fieldbabel
