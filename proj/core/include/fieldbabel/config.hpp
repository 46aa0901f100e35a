#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "fieldbabel/analytics.hpp"
#include "fieldbabel/catalog.hpp"
#include "fieldbabel/parcels.hpp"
#include "fieldbabel/project.hpp"
#include "fieldbabel/speckle.hpp"

namespace fieldbabel {

struct LpisSource {
    std::filesystem::path shp;
    std::filesystem::path dbf;
    ParcelColumns columns;
};

/// Service configuration (JSON). Relative paths resolve against the
/// directory holding the file.
///
///   {
///     "catalog_root": "catalog",
///     "state_dir": "state",
///     "grid": {"crs": 32632, "origin_x": 500000, "origin_y": 6200000, "pixel_size": 10},
///     "lpis": {"shp": "lpis.shp", "dbf": "lpis.dbf",
///              "id_column": "parcel_id", "crop_column": "crop_code", "applicant_column": "applicant"},
///     "growth_stages_csv": "stages.csv",
///     "filter": {"window": 7, "target_window": 3, "looks": 1, "sigma": 0.9,
///                "point_target_percentile": 0.98, "point_target_min_count": 5, "min_in_range": 4},
///     "color_ranges": {"vv": [-25, 0], "vh": [-32, -5], "db_quotient": [0.3, 1.0], "db_difference": [2, 12]},
///     "erosion_m": 30,
///     "workers": 1,
///     "bind": "127.0.0.1:8080",
///     "public_url": "http://localhost:8080",
///     "static_root": "webui/dist"
///   }
struct ServiceConfig {
    std::filesystem::path catalog_root = "catalog";
    std::filesystem::path state_dir = "state";
    std::optional<AnalysisGrid> grid;
    std::optional<LpisSource> lpis;
    std::optional<std::filesystem::path> growth_stages_csv;
    SpeckleFilterParams filter;
    ColorRanges color_ranges;
    double erosion_m = kDefaultErosionM;
    int workers = 1;
    std::string bind_host = "127.0.0.1";
    int bind_port = 8080;
    std::string public_url;
    std::optional<std::filesystem::path> static_root;

    /// Throws Error(invalid_config).
    void validate() const;
};

/// Throws Error(invalid_config) with the offending key in the message.
ServiceConfig parse_service_config(std::string_view text, const std::filesystem::path& base_dir = {});
ServiceConfig load_service_config(const std::filesystem::path& path);

}  // namespace fieldbabel
