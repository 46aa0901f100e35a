#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fieldbabel/geometry.hpp"

namespace fieldbabel {

/// One LPIS field. Geometry is WGS84 (lon, lat) with RFC 7946 orientation
/// (exterior counter-clockwise, holes clockwise).
struct FieldParcel {
    std::string parcel_id;
    std::string crop_code;  // Danish LPIS crop name, e.g. "Vinterhvede"
    Polygon geometry;
    std::optional<std::string> applicant_id;

    friend bool operator==(const FieldParcel&, const FieldParcel&) = default;
};

/// .dbf column names carrying the parcel attributes (at most 10 bytes each).
struct ParcelColumns {
    std::string parcel_id = "parcel_id";
    std::string crop_code = "crop_code";
    std::string applicant_id = "applicant";
};

struct ShapefileBytes {
    std::vector<std::uint8_t> shp;
    std::vector<std::uint8_t> shx;
    std::vector<std::uint8_t> dbf;
};

/// Polygon (type 5) shapefile subset. Rings are written clockwise for
/// exteriors and counter-clockwise for holes; the applicant column is only
/// emitted when some parcel carries one. Output is deterministic.
ShapefileBytes encode_parcels_shapefile(const std::vector<FieldParcel>& parcels, const ParcelColumns& columns = {});

/// Errors: shape_type_mismatch (not type 5, null shapes), record_count_mismatch
/// (.shp vs .dbf), missing_column, invalid_polygon (multi-part exteriors,
/// orphan holes), io_error (truncated).
std::vector<FieldParcel> decode_parcels_shapefile(std::span<const std::uint8_t> shp, std::span<const std::uint8_t> dbf,
                                                  const ParcelColumns& columns = {});

std::vector<FieldParcel> read_parcels_shapefile(const std::filesystem::path& shp, const std::filesystem::path& dbf,
                                                const ParcelColumns& columns = {});

/// Writes <stem>.shp, <stem>.shx and <stem>.dbf.
void write_parcels_shapefile(const std::vector<FieldParcel>& parcels, const std::filesystem::path& stem,
                             const ParcelColumns& columns = {});

/// Whole parcels whose bounding box intersects `bbox`; geometry is never cut.
std::vector<FieldParcel> clip_parcels_bbox(const std::vector<FieldParcel>& parcels, const BBox& bbox);

}  // namespace fieldbabel
