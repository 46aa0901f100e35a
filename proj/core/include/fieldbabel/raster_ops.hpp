#pragma once

#include "fieldbabel/geometry.hpp"
#include "fieldbabel/raster.hpp"

namespace fieldbabel {

/// Minimal pixel-aligned sub-grid covering bbox ∩ extent. Samples are copied
/// unmodified and the origin moves by whole pixels. Throws
/// Error(empty_intersection) when the overlap has no area.
Raster subset_bbox(const Raster& raster, const BBox& bbox);
MultiBandRaster subset_bbox(const MultiBandRaster& raster, const BBox& bbox);

/// Bilinear sampling of `raster` at each target pixel centre. Only stencil
/// pixels with non-zero weight are consulted; if any of them is nodata or
/// outside the source grid the target pixel is nodata.
Raster resample_bilinear(const Raster& raster, const GridGeometry& target);

/// Pixels whose centre lies inside `polygon` under the even-odd rule. The
/// polygon must already be in grid coordinates.
Mask rasterize_polygon(const Polygon& polygon, const GridGeometry& grid);

/// Erosion by a Euclidean disk of radius radius_m / pixel_size pixels
/// (centre-to-centre). Cells outside the grid count as unset.
Mask erode_disk(const Mask& mask, double radius_m);

}  // namespace fieldbabel
