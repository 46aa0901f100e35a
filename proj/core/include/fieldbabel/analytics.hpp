#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fieldbabel/parcels.hpp"
#include "fieldbabel/raster.hpp"
#include "fieldbabel/time.hpp"

namespace fieldbabel {

/// How the third composite band and the per-sample ratio are formed.
enum class RatioMode {
    db_quotient,    // VV_dB / VH_dB
    db_difference,  // VV_dB − VH_dB
};

std::string_view to_string(RatioMode mode);
/// Throws Error(invalid_argument) on unknown names.
RatioMode parse_ratio_mode(std::string_view text);

/// NaN when the quotient is undefined (VH_dB == 0).
double ratio_of(double vv_db, double vh_db, RatioMode mode);

/// Bands: VV_dB, VH_dB, ratio. Nodata in either input, or an undefined
/// quotient, gives nodata in all three (band 3 only for the quotient case).
MultiBandRaster composite_rgb(const Raster& vv_db, const Raster& vh_db, RatioMode mode = RatioMode::db_quotient);

struct ZonalMean {
    double mean = 0.0;
    std::size_t count = 0;

    bool empty() const { return count == 0; }
};

/// Mean over in-mask, non-nodata pixels, accumulated in double in row-major
/// order. An all-nodata or empty mask yields count 0.
ZonalMean zonal_mean(const Raster& raster, const Mask& mask);

/// Analysis-ready dB layers of one acquisition, already on a common grid.
struct SceneLayers {
    std::string scene_id;
    Timestamp acquired_at;
    Raster vv_db;
    Raster vh_db;
};

struct TimeSample {
    Timestamp timestamp;
    std::string scene_id;
    double mean_vv_db = 0.0;
    double mean_vh_db = 0.0;
    double ratio = 0.0;  // ratio of the two zonal means
    std::size_t pixel_count = 0;
};

struct TimeSeries {
    std::string parcel_id;
    std::vector<TimeSample> samples;  // strictly increasing timestamps
    bool eroded_away = false;         // erosion left no interior pixel
};

inline constexpr double kDefaultErosionM = 30.0;

/// Per-scene zonal means over the eroded parcel interior. `polygon` must be
/// in the scenes' grid coordinates. Scenes whose interior holds no valid
/// pixel are skipped; of scenes sharing an acquisition instant only the
/// first by scene_id is kept.
TimeSeries build_field_time_series(const std::string& parcel_id, const Polygon& polygon,
                                   const std::vector<SceneLayers>& scenes, double erosion_m = kDefaultErosionM,
                                   RatioMode mode = RatioMode::db_quotient);

/// Same, for an LPIS parcel in WGS84: the geometry is projected onto the
/// grid CRS of the scenes first.
TimeSeries build_field_time_series(const FieldParcel& parcel, const std::vector<SceneLayers>& scenes,
                                   double erosion_m = kDefaultErosionM, RatioMode mode = RatioMode::db_quotient);

struct GrowthStageObservation {
    std::string parcel_id;
    Date date;
    double stage = 0.0;  // decimal growth-stage code, 0..99
};

struct AlignedSample {
    TimeSample sample;
    std::optional<double> stage;
};

/// Stage linearly interpolated (in time) between the bracketing observations
/// of the series' parcel; samples outside the observed span stay
/// unannotated. Observations are taken at 00:00 UTC of their date.
std::vector<AlignedSample> align_growth_stages(const TimeSeries& series,
                                               const std::vector<GrowthStageObservation>& observations);

struct Peak {
    Timestamp timestamp;
    double ratio = 0.0;           // raw ratio of the chosen sample
    double smoothed_ratio = 0.0;  // moving-average value that won
    std::size_t index = 0;
};

/// Global maximum of the centred moving average of the ratio (edges average
/// the samples available). Earliest sample wins ties. Fewer than three
/// samples → nullopt.
std::optional<Peak> detect_peak(const TimeSeries& series, int window = 3);

// CSV interchange.
//   growth stages:  parcel_id,date,stage
//   time series:    parcel_id,timestamp,scene_id,mean_vv_db,mean_vh_db,ratio,pixel_count,stage
std::vector<GrowthStageObservation> parse_growth_stage_csv(std::string_view text);
std::string growth_stage_csv(const std::vector<GrowthStageObservation>& observations);
std::string time_series_csv(const std::string& parcel_id, const std::vector<AlignedSample>& rows);

}  // namespace fieldbabel
