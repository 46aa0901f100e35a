#include "fieldbabel/config.hpp"

#include <algorithm>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "fieldbabel/bytes.hpp"
#include "fieldbabel/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fieldbabel {

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

BandRange band_range(const json& j) {
    if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::invalid_config, "colour ranges are [min, max] pairs");
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace

void ServiceConfig::validate() const {
    filter.validate();
    if (grid) grid->validate();
    if (workers < 1 || workers > 64) throw Error(ErrorCode::invalid_config, "workers must be in [1, 64]");
    if (bind_port < 0 || bind_port > 65535) throw Error(ErrorCode::invalid_config, "bind port out of range");
    if (!(erosion_m >= 0.0)) throw Error(ErrorCode::invalid_config, "erosion_m must be non-negative");
    for (const auto* r : {&color_ranges.vv, &color_ranges.vh, &color_ranges.db_quotient, &color_ranges.db_difference}) {
        if (!(r->min < r->max)) throw Error(ErrorCode::invalid_config, "colour range min must be below max");
    }
}

ServiceConfig parse_service_config(std::string_view text, const fs::path& base_dir) {
    ServiceConfig c;
    try {
        const auto j = json::parse(text);
        if (!j.is_object()) throw Error(ErrorCode::invalid_config, "configuration must be a JSON object");
        for (const auto& [key, _] : j.items()) {
            static const std::vector<std::string> known{"catalog_root", "state_dir", "grid",     "lpis",       "growth_stages_csv",
                                                        "filter",       "color_ranges", "erosion_m", "workers",    "bind",
                                                        "public_url",   "static_root"};
            if (std::find(known.begin(), known.end(), key) == known.end()) {
                throw Error(ErrorCode::invalid_config, fmt::format("unknown configuration key '{}'", key));
            }
        }
        if (j.contains("catalog_root")) c.catalog_root = j["catalog_root"].get<std::string>();
        c.catalog_root = resolve(base_dir, c.catalog_root.string());
        if (j.contains("state_dir")) c.state_dir = j["state_dir"].get<std::string>();
        c.state_dir = resolve(base_dir, c.state_dir.string());
        if (j.contains("grid")) c.grid = parse_analysis_grid(j["grid"].dump());
        if (j.contains("lpis")) {
            const auto& l = j["lpis"];
            LpisSource src;
            src.shp = resolve(base_dir, l.at("shp").get<std::string>());
            src.dbf = l.contains("dbf") ? resolve(base_dir, l["dbf"].get<std::string>()) : fs::path(src.shp).replace_extension(".dbf");
            src.columns.parcel_id = l.value("id_column", src.columns.parcel_id);
            src.columns.crop_code = l.value("crop_column", src.columns.crop_code);
            src.columns.applicant_id = l.value("applicant_column", src.columns.applicant_id);
            c.lpis = std::move(src);
        }
        if (j.contains("growth_stages_csv")) c.growth_stages_csv = resolve(base_dir, j["growth_stages_csv"].get<std::string>());
        if (j.contains("filter")) {
            const auto& f = j["filter"];
            c.filter.window = f.value("window", c.filter.window);
            c.filter.target_window = f.value("target_window", c.filter.target_window);
            c.filter.looks = f.value("looks", c.filter.looks);
            c.filter.sigma = f.value("sigma", c.filter.sigma);
            c.filter.point_target_percentile = f.value("point_target_percentile", c.filter.point_target_percentile);
            c.filter.point_target_min_count = f.value("point_target_min_count", c.filter.point_target_min_count);
            c.filter.min_in_range = f.value("min_in_range", c.filter.min_in_range);
        }
        if (j.contains("color_ranges")) {
            const auto& r = j["color_ranges"];
            if (r.contains("vv")) c.color_ranges.vv = band_range(r["vv"]);
            if (r.contains("vh")) c.color_ranges.vh = band_range(r["vh"]);
            if (r.contains("db_quotient")) c.color_ranges.db_quotient = band_range(r["db_quotient"]);
            if (r.contains("db_difference")) c.color_ranges.db_difference = band_range(r["db_difference"]);
        }
        c.erosion_m = j.value("erosion_m", c.erosion_m);
        c.workers = j.value("workers", c.workers);
        if (j.contains("bind")) {
            const auto bind = j["bind"].get<std::string>();
            const auto colon = bind.rfind(':');
            if (colon == std::string::npos) throw Error(ErrorCode::invalid_config, "bind must be host:port");
            c.bind_host = bind.substr(0, colon);
            c.bind_port = std::stoi(bind.substr(colon + 1));
        }
        c.public_url = j.value("public_url", c.public_url);
        if (j.contains("static_root")) c.static_root = resolve(base_dir, j["static_root"].get<std::string>());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_config, fmt::format("bad configuration: {}", e.what()));
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::invalid_config, "bad port in bind");
    } catch (const Error& e) {
        if (e.code() == ErrorCode::invalid_config) throw;
        throw Error(ErrorCode::invalid_config, e.what());
    }
    try {
        c.validate();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::invalid_config) throw;
        throw Error(ErrorCode::invalid_config, e.what());
    }
    return c;
}

ServiceConfig load_service_config(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    return parse_service_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                                fs::absolute(path).parent_path());
}

}  // namespace fieldbabel
