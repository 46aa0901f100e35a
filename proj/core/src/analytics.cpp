#include "fieldbabel/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "fieldbabel/crs.hpp"
#include "fieldbabel/error.hpp"
#include "fieldbabel/raster_ops.hpp"

namespace fieldbabel {

std::string_view to_string(RatioMode mode) {
    return mode == RatioMode::db_quotient ? "db_quotient" : "db_difference";
}

RatioMode parse_ratio_mode(std::string_view text) {
    if (text == "db_quotient") return RatioMode::db_quotient;
    if (text == "db_difference") return RatioMode::db_difference;
    throw Error(ErrorCode::invalid_argument, fmt::format("unknown ratio mode '{}'", text));
}

double ratio_of(double vv_db, double vh_db, RatioMode mode) {
    if (mode == RatioMode::db_difference) return vv_db - vh_db;
    if (vh_db == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return vv_db / vh_db;
}

MultiBandRaster composite_rgb(const Raster& vv_db, const Raster& vh_db, RatioMode mode) {
    if (!(vv_db.geometry == vh_db.geometry)) {
        throw Error(ErrorCode::geometry_mismatch, "VV and VH layers are on different grids");
    }
    MultiBandRaster out;
    out.geometry = vv_db.geometry;
    out.nodata = kNodata;
    out.bands.assign(3, std::vector<float>(vv_db.values.size(), kNodata));
    for (std::size_t i = 0; i < vv_db.values.size(); ++i) {
        const float vv = vv_db.values[i];
        const float vh = vh_db.values[i];
        if (vv_db.is_nodata(vv) || vh_db.is_nodata(vh)) continue;
        out.bands[0][i] = vv;
        out.bands[1][i] = vh;
        const double r = ratio_of(vv, vh, mode);
        if (!std::isnan(r)) out.bands[2][i] = static_cast<float>(r);
    }
    return out;
}

ZonalMean zonal_mean(const Raster& raster, const Mask& mask) {
    if (!(raster.geometry == mask.geometry)) {
        throw Error(ErrorCode::geometry_mismatch, "mask and raster are on different grids");
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < raster.values.size(); ++i) {
        if (!mask.bits[i] || raster.is_nodata(raster.values[i])) continue;
        sum += raster.values[i];
        ++n;
    }
    return n == 0 ? ZonalMean{} : ZonalMean{sum / static_cast<double>(n), n};
}

TimeSeries build_field_time_series(const std::string& parcel_id, const Polygon& polygon,
                                   const std::vector<SceneLayers>& scenes, double erosion_m, RatioMode mode) {
    TimeSeries series;
    series.parcel_id = parcel_id;

    std::vector<const SceneLayers*> ordered;
    for (const auto& s : scenes) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(), [](const SceneLayers* a, const SceneLayers* b) {
        return std::tie(a->acquired_at, a->scene_id) < std::tie(b->acquired_at, b->scene_id);
    });

    std::optional<GridGeometry> mask_grid;
    Mask interior;
    bool any_interior = false;
    for (const auto* scene : ordered) {
        if (!(scene->vv_db.geometry == scene->vh_db.geometry)) {
            throw Error(ErrorCode::geometry_mismatch, fmt::format("scene {} has misaligned VV/VH layers", scene->scene_id));
        }
        if (!mask_grid || !(*mask_grid == scene->vv_db.geometry)) {
            mask_grid = scene->vv_db.geometry;
            interior = erode_disk(rasterize_polygon(polygon, *mask_grid), erosion_m);
        }
        if (interior.count() == 0) continue;
        any_interior = true;
        if (!series.samples.empty() && series.samples.back().timestamp == scene->acquired_at) continue;

        // Only pixels valid in both polarisations contribute.
        Mask both = interior;
        for (std::size_t i = 0; i < both.bits.size(); ++i) {
            if (scene->vv_db.is_nodata(scene->vv_db.values[i]) || scene->vh_db.is_nodata(scene->vh_db.values[i])) {
                both.bits[i] = 0;
            }
        }
        const auto vv = zonal_mean(scene->vv_db, both);
        const auto vh = zonal_mean(scene->vh_db, both);
        if (vv.empty()) continue;
        series.samples.push_back(
            {scene->acquired_at, scene->scene_id, vv.mean, vh.mean, ratio_of(vv.mean, vh.mean, mode), vv.count});
    }
    series.eroded_away = !ordered.empty() && !any_interior;
    return series;
}

TimeSeries build_field_time_series(const FieldParcel& parcel, const std::vector<SceneLayers>& scenes, double erosion_m,
                                   RatioMode mode) {
    if (scenes.empty()) return TimeSeries{parcel.parcel_id, {}, false};
    const auto projected = project_polygon(parcel.geometry, scenes.front().vv_db.geometry.crs);
    return build_field_time_series(parcel.parcel_id, projected, scenes, erosion_m, mode);
}

std::vector<AlignedSample> align_growth_stages(const TimeSeries& series,
                                               const std::vector<GrowthStageObservation>& observations) {
    std::vector<std::pair<Timestamp, double>> obs;
    for (const auto& o : observations) {
        if (o.parcel_id == series.parcel_id) obs.emplace_back(start_of(o.date), o.stage);
    }
    std::stable_sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<AlignedSample> out;
    for (const auto& s : series.samples) {
        AlignedSample row{s, std::nullopt};
        const auto t = s.timestamp;
        if (!obs.empty() && t >= obs.front().first && t <= obs.back().first) {
            const auto upper = std::upper_bound(obs.begin(), obs.end(), t,
                                                [](Timestamp v, const auto& o) { return v < o.first; });
            const auto& lo = *(upper - 1);
            if (lo.first == t || upper == obs.end()) {
                row.stage = lo.second;
            } else {
                const double f = days_between(lo.first, t) / days_between(lo.first, upper->first);
                row.stage = lo.second + f * (upper->second - lo.second);
            }
        }
        out.push_back(std::move(row));
    }
    return out;
}

std::optional<Peak> detect_peak(const TimeSeries& series, int window) {
    const auto& s = series.samples;
    if (s.size() < 3) return std::nullopt;
    if (window < 1 || window % 2 == 0) throw Error(ErrorCode::invalid_argument, "smoothing window must be odd and positive");
    const int half = window / 2;
    const int n = static_cast<int>(s.size());

    std::optional<Peak> best;
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        int count = 0;
        for (int j = std::max(0, i - half); j <= std::min(n - 1, i + half); ++j) {
            if (std::isnan(s[j].ratio)) continue;
            sum += s[j].ratio;
            ++count;
        }
        if (count == 0) continue;
        const double smoothed = sum / count;
        if (!best || smoothed > best->smoothed_ratio) {
            best = Peak{s[i].timestamp, s[i].ratio, smoothed, static_cast<std::size_t>(i)};
        }
    }
    return best;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == sep) {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::string_view strip(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return s;
}

std::string number(double v) { return std::isnan(v) ? std::string() : fmt::format("{}", v); }

}  // namespace

std::vector<GrowthStageObservation> parse_growth_stage_csv(std::string_view text) {
    std::vector<GrowthStageObservation> out;
    bool header = true;
    std::size_t line_no = 0;
    for (auto line : split(text, '\n')) {
        ++line_no;
        line = strip(line);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (header) {
            if (cells.size() != 3 || strip(cells[0]) != "parcel_id" || strip(cells[1]) != "date" || strip(cells[2]) != "stage") {
                throw Error(ErrorCode::invalid_argument, "growth-stage CSV header must be 'parcel_id,date,stage'");
            }
            header = false;
            continue;
        }
        if (cells.size() != 3) throw Error(ErrorCode::invalid_argument, fmt::format("line {}: expected 3 columns", line_no));
        GrowthStageObservation o;
        o.parcel_id = std::string(strip(cells[0]));
        o.date = parse_date(strip(cells[1]));
        const auto stage_text = std::string(strip(cells[2]));
        try {
            std::size_t used = 0;
            o.stage = std::stod(stage_text, &used);
            if (used != stage_text.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error(ErrorCode::invalid_argument, fmt::format("line {}: bad stage '{}'", line_no, stage_text));
        }
        if (!(o.stage >= 0.0 && o.stage <= 99.0)) {
            throw Error(ErrorCode::invalid_argument, fmt::format("line {}: stage {} outside [0, 99]", line_no, o.stage));
        }
        out.push_back(std::move(o));
    }
    return out;
}

std::string growth_stage_csv(const std::vector<GrowthStageObservation>& observations) {
    std::string out = "parcel_id,date,stage\n";
    for (const auto& o : observations) out += fmt::format("{},{},{}\n", o.parcel_id, format_date(o.date), o.stage);
    return out;
}

std::string time_series_csv(const std::string& parcel_id, const std::vector<AlignedSample>& rows) {
    std::string out = "parcel_id,timestamp,scene_id,mean_vv_db,mean_vh_db,ratio,pixel_count,stage\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", parcel_id, format_timestamp(r.sample.timestamp), r.sample.scene_id,
                           number(r.sample.mean_vv_db), number(r.sample.mean_vh_db), number(r.sample.ratio),
                           r.sample.pixel_count, r.stage ? number(*r.stage) : std::string());
    }
    return out;
}

}  // namespace fieldbabel
