#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fieldbabel {

/// Machine-readable failure categories. Every distinct failure the library
/// reports maps to exactly one code; the HTTP layer exposes them verbatim.
enum class ErrorCode {
    // raster-core
    io_error,
    multi_band,
    missing_georeferencing,
    unsupported_format,
    empty_intersection,
    crs_mismatch,
    degenerate_polygon,
    anisotropic_pixels,
    geometry_mismatch,
    invalid_argument,
    // sar-processing
    empty_lut,
    negative_input,
    // geo-vector
    malformed_document,
    not_single_polygon,
    not_polygon_type,
    unclosed_ring,
    invalid_polygon,
    oversized_aoi,
    shape_type_mismatch,
    record_count_mismatch,
    missing_column,
    // crop-calendar
    unknown_crop,
    // analytics
    insufficient_distinct_values,
    // scene-catalog
    duplicate_scene,
    missing_polarization,
    invalid_sidecar,
    catalog_corruption,
    pipeline_failure,
    // service
    invalid_email,
    not_found,
    conflict,
    invalid_config,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace fieldbabel
