#pragma once

#include "fieldbabel/geometry.hpp"

namespace fieldbabel {

/// EPSG codes in the 4000 range are treated as geographic (degrees).
bool is_geographic_crs(int epsg);

/// True for EPSG:4326 and the UTM families handled by project_point:
/// 326zz/327zz (WGS84 UTM north/south) and 258zz (ETRS89 UTM, treated as
/// WGS84 at this accuracy).
bool is_supported_crs(int epsg);

/// WGS84 (lon, lat) to the given CRS. Transverse Mercator via the
/// third-order Krüger series (sub-millimetre inside a zone). Identity for
/// geographic codes. Throws Error(crs_mismatch) for other CRSs.
Point project_point(Point lonlat, int epsg);
Point unproject_point(Point xy, int epsg);

Polygon project_polygon(const Polygon& lonlat, int epsg);

/// Bounding box of the projected rectangle, edges densified so curved
/// images of straight edges are covered.
BBox project_bbox(const BBox& lonlat, int epsg);
BBox unproject_bbox(const BBox& xy, int epsg);

}  // namespace fieldbabel
