#pragma once

#include <cstdint>
#include <vector>

#include "fieldbabel/raster.hpp"

namespace fieldbabel {

struct ClusterResult {
    Raster labels;                 // 0..k-1 inside the mask, nodata elsewhere
    std::vector<double> centroids; // ascending
    double sse = 0.0;
    int iterations = 0;            // Lloyd iterations of the winning run
    std::vector<double> sse_trace; // partition SSE after every step of the winning run
    Raster band;                   // the clustered values, kept for sampling
};

inline constexpr int kMaxLloydIterations = 100;
inline constexpr int kRandomRestarts = 5;

/// 1-D k-means over in-mask, non-nodata values. One run starts from value
/// quantiles, five more from seeded random picks of distinct values; each run
/// alternates Lloyd iteration with single-point transfers and merge/split
/// moves until no move lowers the SSE. The lowest-SSE run wins.
/// Throws Error(insufficient_distinct_values) with fewer than k distinct values.
ClusterResult kmeans_cluster(const Raster& raster, const Mask& mask, int k = 3, std::uint64_t seed = 0);

struct SamplePoint {
    int label = 0;
    int col = 0;
    int row = 0;
    double map_x = 0.0;
    double map_y = 0.0;
    double value = 0.0;
};

/// Per label (ascending), the n pixels whose values lie nearest the centroid;
/// ties go to row-major order.
std::vector<SamplePoint> sampling_plan(const ClusterResult& clusters, int n_per_cluster);

}  // namespace fieldbabel
