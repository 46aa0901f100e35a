#include "fieldbabel/error.hpp"

namespace fieldbabel {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::io_error: return "io_error";
        case ErrorCode::multi_band: return "multi_band";
        case ErrorCode::missing_georeferencing: return "missing_georeferencing";
        case ErrorCode::unsupported_format: return "unsupported_format";
        case ErrorCode::empty_intersection: return "empty_intersection";
        case ErrorCode::crs_mismatch: return "crs_mismatch";
        case ErrorCode::degenerate_polygon: return "degenerate_polygon";
        case ErrorCode::anisotropic_pixels: return "anisotropic_pixels";
        case ErrorCode::geometry_mismatch: return "geometry_mismatch";
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::empty_lut: return "empty_lut";
        case ErrorCode::negative_input: return "negative_input";
        case ErrorCode::malformed_document: return "malformed_document";
        case ErrorCode::not_single_polygon: return "not_single_polygon";
        case ErrorCode::not_polygon_type: return "not_polygon_type";
        case ErrorCode::unclosed_ring: return "unclosed_ring";
        case ErrorCode::invalid_polygon: return "invalid_polygon";
        case ErrorCode::oversized_aoi: return "oversized_aoi";
        case ErrorCode::shape_type_mismatch: return "shape_type_mismatch";
        case ErrorCode::record_count_mismatch: return "record_count_mismatch";
        case ErrorCode::missing_column: return "missing_column";
        case ErrorCode::unknown_crop: return "unknown_crop";
        case ErrorCode::insufficient_distinct_values: return "insufficient_distinct_values";
        case ErrorCode::duplicate_scene: return "duplicate_scene";
        case ErrorCode::missing_polarization: return "missing_polarization";
        case ErrorCode::invalid_sidecar: return "invalid_sidecar";
        case ErrorCode::catalog_corruption: return "catalog_corruption";
        case ErrorCode::pipeline_failure: return "pipeline_failure";
        case ErrorCode::invalid_email: return "invalid_email";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::conflict: return "conflict";
        case ErrorCode::invalid_config: return "invalid_config";
    }
    return "unknown";
}

}  // namespace fieldbabel
