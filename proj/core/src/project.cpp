#include "fieldbabel/project.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "fieldbabel/error.hpp"

namespace fieldbabel {

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string xml_unescape(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out += s[i];
            continue;
        }
        const auto semi = s.find(';', i);
        if (semi == std::string_view::npos) {
            out += s.substr(i);
            break;
        }
        const auto ent = s.substr(i, semi - i + 1);
        if (ent == "&amp;") out += '&';
        else if (ent == "&lt;") out += '<';
        else if (ent == "&gt;") out += '>';
        else if (ent == "&quot;") out += '"';
        else if (ent == "&apos;") out += '\'';
        else out += ent;
        i = semi;
    }
    return out;
}

std::string contrast(const char* tag, const BandRange& r) {
    return fmt::format(
        "          <{0}>\n"
        "            <minValue>{1}</minValue>\n"
        "            <maxValue>{2}</maxValue>\n"
        "            <algorithm>StretchToMinimumMaximum</algorithm>\n"
        "          </{0}>\n",
        tag, r.min, r.max);
}

std::string layer_id(const ProjectLayer& l, std::size_t i) {
    std::string id = fmt::format("layer_{:03d}_", i);
    for (char c : l.name) id += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return id;
}

std::string srs(int epsg) {
    return fmt::format("<srs><spatialrefsys><authid>EPSG:{}</authid></spatialrefsys></srs>", epsg);
}

float percentile(std::vector<float> v, double p) {
    if (v.empty()) return std::nanf("");
    std::sort(v.begin(), v.end());
    const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
    return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

}  // namespace

ColorRanges percentile_ranges(const std::vector<MultiBandRaster>& quotient, const std::vector<MultiBandRaster>& difference,
                              double p_lo, double p_hi) {
    if (!(p_lo >= 0.0 && p_lo < p_hi && p_hi <= 1.0)) throw Error(ErrorCode::invalid_argument, "need 0 <= p_lo < p_hi <= 1");
    auto collect = [](const std::vector<MultiBandRaster>& rs, std::size_t band) {
        std::vector<float> v;
        for (const auto& r : rs) {
            for (float x : r.bands.at(band)) {
                if (x != r.nodata) v.push_back(x);
            }
        }
        return v;
    };
    auto range = [&](std::vector<float> v, BandRange fallback) {
        if (v.empty()) return fallback;
        return BandRange{percentile(v, p_lo), percentile(v, p_hi)};
    };
    ColorRanges out;
    std::vector<MultiBandRaster> all = quotient;
    all.insert(all.end(), difference.begin(), difference.end());
    out.vv = range(collect(all, 0), out.vv);
    out.vh = range(collect(all, 1), out.vh);
    out.db_quotient = range(collect(quotient, 2), out.db_quotient);
    out.db_difference = range(collect(difference, 2), out.db_difference);
    return out;
}

std::string build_project_descriptor(const std::vector<ProjectLayer>& layers, const ColorRanges& ranges, RatioMode mode,
                                     const std::string& title) {
    const int project_crs = layers.empty() ? 4326 : layers.front().crs;
    std::string tree, maplayers;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const auto id = layer_id(l, i);
        const auto source = "./" + l.path;
        tree += fmt::format("    <layer-tree-layer id=\"{}\" name=\"{}\" source=\"{}\" providerKey=\"{}\" checked=\"Qt::Checked\"/>\n",
                            id, xml_escape(l.name), xml_escape(source), l.kind == LayerKind::composite ? "gdal" : "ogr");
        if (l.kind == LayerKind::composite) {
            maplayers += fmt::format(
                "    <maplayer type=\"raster\">\n"
                "      <id>{}</id>\n"
                "      <datasource>{}</datasource>\n"
                "      <layername>{}</layername>\n"
                "      {}\n"
                "      <provider>gdal</provider>\n"
                "      <pipe>\n"
                "        <rasterrenderer type=\"multibandcolor\" opacity=\"1\" redBand=\"1\" greenBand=\"2\" blueBand=\"3\">\n"
                "{}{}{}"
                "        </rasterrenderer>\n"
                "      </pipe>\n"
                "    </maplayer>\n",
                id, xml_escape(source), xml_escape(l.name), srs(l.crs), contrast("redContrastEnhancement", ranges.vv),
                contrast("greenContrastEnhancement", ranges.vh), contrast("blueContrastEnhancement", ranges.ratio(mode)));
        } else if (l.kind == LayerKind::table) {
            maplayers += fmt::format(
                "    <maplayer type=\"vector\" geometry=\"No geometry\">\n"
                "      <id>{}</id>\n"
                "      <datasource>{}</datasource>\n"
                "      <layername>{}</layername>\n"
                "      <provider encoding=\"UTF-8\">ogr</provider>\n"
                "    </maplayer>\n",
                id, xml_escape(source), xml_escape(l.name));
        } else {
            maplayers += fmt::format(
                "    <maplayer type=\"vector\" geometry=\"Polygon\">\n"
                "      <id>{}</id>\n"
                "      <datasource>{}</datasource>\n"
                "      <layername>{}</layername>\n"
                "      {}\n"
                "      <provider encoding=\"UTF-8\">ogr</provider>\n"
                "    </maplayer>\n",
                id, xml_escape(source), xml_escape(l.name), srs(l.crs));
        }
    }
    return fmt::format(
        "<!DOCTYPE qgis PUBLIC 'http://mrcc.com/qgis.dtd' 'SYSTEM'>\n"
        "<qgis projectname=\"{0}\" version=\"3.22.0\">\n"
        "  <title>{0}</title>\n"
        "  <projectCrs>\n"
        "    <spatialrefsys><authid>EPSG:{1}</authid></spatialrefsys>\n"
        "  </projectCrs>\n"
        "  <properties>\n"
        "    <Paths><Absolute type=\"bool\">false</Absolute></Paths>\n"
        "  </properties>\n"
        "  <layer-tree-group>\n"
        "{2}"
        "  </layer-tree-group>\n"
        "  <projectlayers>\n"
        "{3}"
        "  </projectlayers>\n"
        "</qgis>\n",
        xml_escape(title), project_crs, tree, maplayers);
}

std::vector<std::string> project_datasources(const std::string& document) {
    std::vector<std::string> out;
    const std::string open = "<datasource>";
    const std::string close = "</datasource>";
    for (std::size_t at = document.find(open); at != std::string::npos; at = document.find(open, at)) {
        at += open.size();
        const auto end = document.find(close, at);
        if (end == std::string::npos) break;
        auto src = xml_unescape(std::string_view(document).substr(at, end - at));
        if (src.rfind("./", 0) == 0) src.erase(0, 2);
        out.push_back(std::move(src));
        at = end;
    }
    return out;
}

}  // namespace fieldbabel
