#pragma once

#include "fieldbabel/raster.hpp"

namespace fieldbabel {

/// Sigma range of the Lee sigma filter for L-look intensity speckle.
struct SigmaRangeParams {
    int looks = 1;
    double sigma = 0.9;
    double a1 = 0.0;        // lower multiplier, (1-sigma)/2 quantile
    double a2 = 0.0;        // upper multiplier, 1-(1-sigma)/2 quantile
    double sigma_vn = 0.0;  // std/mean of speckle truncated to [a1, a2]
};

/// Speckle v ~ Gamma(shape=L, mean=1). a1/a2 are the equal-tail quantiles
/// enclosing mass `sigma`, found by bisection on the regularized incomplete
/// gamma function; sigma_vn comes from numerically integrated truncated
/// moments. Throws Error(invalid_argument) unless L >= 1 and 0 < sigma < 1.
SigmaRangeParams compute_sigma_range(int looks, double sigma);

struct SpeckleFilterParams {
    int window = 7;
    int target_window = 3;
    int looks = 1;
    double sigma = 0.9;
    double point_target_percentile = 0.98;
    int point_target_min_count = 5;
    int min_in_range = 4;

    /// Throws Error(invalid_argument) on even windows, target_window > window
    /// or out-of-range fractions.
    void validate() const;
};

/*
 * Lee sigma filter on linear-power input, per pixel:
 *
 *  1. Point targets: with Z = point_target_percentile quantile of all valid
 *     samples (nearest rank), a centre >= Z with at least
 *     point_target_min_count target-window pixels >= Z is copied unchanged.
 *  2. A-priori mean x̂ = MMSE over the target window with σv = 1/√L.
 *  3. Sigma range [a1·x̂, a2·x̂].
 *  4. MMSE over the in-range valid pixels of the full window with σvn.
 *  5. Fewer than min_in_range pixels in range: output x̂.
 *
 * MMSE: x = ȳ + b(y − ȳ), b = max(0, (var − ȳ²σ²) / ((1+σ²)·var)), b = 0 when
 * var = 0, where y is the centre value. Window statistics are accumulated in
 * double in row-major order: ȳ = Σy/n, var = Σ(y−ȳ)²/n. Every pixel is
 * computed independently, so the result does not depend on `threads`.
 *
 * Nodata centres stay nodata; windows clip at the image border.
 * Throws Error(negative_input) if any valid sample is negative.
 */
Raster lee_sigma_filter(const Raster& raster, const SpeckleFilterParams& params = {}, unsigned threads = 0);

/// Nearest-rank quantile of the valid samples: sorted[ceil(p·n) − 1].
/// Returns nodata when there are no valid samples.
float valid_quantile(const Raster& raster, double p);

}  // namespace fieldbabel
