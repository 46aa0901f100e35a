#pragma once

#include <string>
#include <vector>

#include "fieldbabel/analytics.hpp"
#include "fieldbabel/raster.hpp"

namespace fieldbabel {

struct BandRange {
    double min = 0.0;
    double max = 0.0;

    bool operator==(const BandRange&) const = default;
};

/// Contrast stretch per composite band. Defaults come from the 2nd–98th
/// percentile analysis shipped as the `color-ranges` subcommand.
struct ColorRanges {
    BandRange vv{-25.0, 0.0};
    BandRange vh{-32.0, -5.0};
    BandRange db_quotient{0.3, 1.0};
    BandRange db_difference{2.0, 12.0};

    const BandRange& ratio(RatioMode mode) const { return mode == RatioMode::db_quotient ? db_quotient : db_difference; }

    bool operator==(const ColorRanges&) const = default;
};

/// Per-band [p_lo, p_hi] percentile ranges over a set of composites.
ColorRanges percentile_ranges(const std::vector<MultiBandRaster>& quotient_composites,
                              const std::vector<MultiBandRaster>& difference_composites, double p_lo = 0.02,
                              double p_hi = 0.98);

enum class LayerKind { composite, parcels, table };

struct ProjectLayer {
    LayerKind kind = LayerKind::composite;
    std::string path;  // relative to the project file, forward slashes
    std::string name;
    int crs = 4326;
};

/// QGIS 3 project document: one multiband-colour raster layer per composite
/// (red VV, green VH, blue ratio, each with its min/max stretch) and vector
/// layers for parcels; tables (CSV) load as geometry-less OGR layers. Output
/// depends only on the arguments.
std::string build_project_descriptor(const std::vector<ProjectLayer>& layers, const ColorRanges& ranges, RatioMode mode,
                                     const std::string& title = "fieldbabel");

/// Layer sources referenced by a project document, in order.
std::vector<std::string> project_datasources(const std::string& document);

}  // namespace fieldbabel
