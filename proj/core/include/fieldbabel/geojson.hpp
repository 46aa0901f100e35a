#pragma once

#include <string>
#include <string_view>

#include "fieldbabel/geometry.hpp"

namespace fieldbabel {

/// Largest AOI bounding-box span, in degrees, along either axis (closed bound).
inline constexpr double kMaxAoiSpanDeg = 1.0;

/// Accepts a bare Polygon geometry, a Feature wrapping one, or a
/// FeatureCollection / GeometryCollection with exactly one member. Errors:
/// malformed_document, not_single_polygon, not_polygon_type, unclosed_ring,
/// invalid_polygon.
Polygon parse_geojson_polygon(std::string_view text);

/// RFC 7946 Polygon geometry object, coordinates printed round-trip exact.
std::string polygon_to_geojson(const Polygon& polygon);

/// Throws Error(oversized_aoi) when the bbox is wider or taller than 1°.
void validate_aoi(const Polygon& polygon);

}  // namespace fieldbabel
