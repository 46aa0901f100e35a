#include "fieldbabel/parcels.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "fieldbabel/bytes.hpp"
#include "fieldbabel/error.hpp"

namespace fieldbabel {

namespace {

constexpr std::int32_t kFileCode = 9994;
constexpr std::int32_t kVersion = 1000;
constexpr std::int32_t kShapeNull = 0;
constexpr std::int32_t kShapePolygon = 5;
constexpr std::size_t kHeaderBytes = 100;
constexpr std::size_t kMaxFieldWidth = 254;

void write_main_header(ByteWriter& w, std::size_t file_bytes, const BBox& box) {
    w.i32be(kFileCode);
    for (int i = 0; i < 5; ++i) w.i32be(0);
    w.i32be(static_cast<std::int32_t>(file_bytes / 2));
    w.i32le(kVersion);
    w.i32le(kShapePolygon);
    w.f64le(box.min_x);
    w.f64le(box.min_y);
    w.f64le(box.max_x);
    w.f64le(box.max_y);
    for (int i = 0; i < 4; ++i) w.f64le(0.0);
}

std::vector<Ring> shapefile_rings(const Polygon& p) {
    std::vector<Ring> rings;
    Ring ext = p.exterior;
    if (signed_area2(ext) > 0) std::reverse(ext.begin(), ext.end());
    rings.push_back(std::move(ext));
    for (Ring h : p.holes) {
        if (signed_area2(h) < 0) std::reverse(h.begin(), h.end());
        rings.push_back(std::move(h));
    }
    return rings;
}

struct DbfField {
    std::string name;
    char type = 'C';
    std::size_t width = 0;
    std::size_t offset = 0;  // within the record, after the deletion flag
};

std::vector<std::uint8_t> encode_dbf(const std::vector<FieldParcel>& parcels, const ParcelColumns& columns) {
    const bool with_applicant =
        std::any_of(parcels.begin(), parcels.end(), [](const auto& p) { return p.applicant_id.has_value(); });

    std::vector<DbfField> fields{{columns.parcel_id, 'C', 1, 0}, {columns.crop_code, 'C', 1, 0}};
    if (with_applicant) fields.push_back({columns.applicant_id, 'C', 1, 0});
    auto value = [&](const FieldParcel& p, std::size_t f) -> std::string {
        if (f == 0) return p.parcel_id;
        if (f == 1) return p.crop_code;
        return p.applicant_id.value_or("");
    };
    for (const auto& f : fields) {
        if (f.name.empty() || f.name.size() > 10) {
            throw Error(ErrorCode::invalid_argument, fmt::format("dbf column name '{}' must be 1..10 bytes", f.name));
        }
    }
    for (const auto& p : parcels) {
        for (std::size_t f = 0; f < fields.size(); ++f) {
            const auto v = value(p, f);
            if (v.size() > kMaxFieldWidth) {
                throw Error(ErrorCode::invalid_argument, fmt::format("attribute of parcel '{}' exceeds {} bytes", p.parcel_id, kMaxFieldWidth));
            }
            fields[f].width = std::max(fields[f].width, v.size());
        }
    }

    std::size_t record_len = 1;
    for (const auto& f : fields) record_len += f.width;
    const std::size_t header_len = 32 + 32 * fields.size() + 1;

    ByteWriter w;
    w.u8(0x03);
    w.u8(95);  // fixed last-update date (1995-07-26) keeps output deterministic
    w.u8(7);
    w.u8(26);
    w.u32le(static_cast<std::uint32_t>(parcels.size()));
    w.u16le(static_cast<std::uint16_t>(header_len));
    w.u16le(static_cast<std::uint16_t>(record_len));
    w.zeros(20);
    for (const auto& f : fields) {
        w.bytes(f.name);
        w.zeros(11 - f.name.size());
        w.u8(static_cast<std::uint8_t>(f.type));
        w.zeros(4);
        w.u8(static_cast<std::uint8_t>(f.width));
        w.u8(0);
        w.zeros(14);
    }
    w.u8(0x0D);
    for (const auto& p : parcels) {
        w.u8(' ');
        for (std::size_t f = 0; f < fields.size(); ++f) {
            const auto v = value(p, f);
            w.bytes(v);
            w.bytes(std::string(fields[f].width - v.size(), ' '));
        }
    }
    w.u8(0x1A);
    return w.take();
}

struct DbfTable {
    std::vector<DbfField> fields;
    std::vector<std::vector<std::string>> rows;
    std::vector<bool> deleted;
};

std::string rtrim(std::string_view s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\0')) s.remove_suffix(1);
    return std::string(s);
}

std::string trim(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return rtrim(s);
}

DbfTable decode_dbf(std::span<const std::uint8_t> bytes) {
    const ByteReader r(bytes, ErrorCode::io_error, ".dbf");
    DbfTable t;
    const std::size_t n = r.u32le(4);
    const std::size_t header_len = r.u16le(8);
    const std::size_t record_len = r.u16le(10);
    std::size_t offset = 1;
    for (std::size_t at = 32; at + 32 <= header_len && r.u8(at) != 0x0D; at += 32) {
        DbfField f;
        f.name = rtrim(r.str(at, 11));
        f.type = static_cast<char>(r.u8(at + 11));
        f.width = r.u8(at + 16);
        f.offset = offset;
        offset += f.width;
        t.fields.push_back(std::move(f));
    }
    if (offset != record_len) throw Error(ErrorCode::unsupported_format, ".dbf field widths do not add up to the record length");
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t at = header_len + i * record_len;
        t.deleted.push_back(r.u8(at) == '*');
        std::vector<std::string> row;
        for (const auto& f : t.fields) {
            const auto raw = r.str(at + f.offset, f.width);
            row.push_back(f.type == 'C' ? rtrim(raw) : trim(raw));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::size_t column_index(const DbfTable& t, const std::string& name) {
    for (std::size_t i = 0; i < t.fields.size(); ++i) {
        if (t.fields[i].name == name) return i;
    }
    throw Error(ErrorCode::missing_column, fmt::format(".dbf has no column '{}'", name));
}

Polygon assemble_polygon(std::vector<Ring> rings, std::size_t record) {
    Polygon p;
    std::vector<Ring> holes;
    bool have_exterior = false;
    for (auto& ring : rings) {
        if (signed_area2(ring) <= 0) {  // clockwise: exterior
            if (have_exterior) {
                throw Error(ErrorCode::invalid_polygon, fmt::format("record {} has several exterior rings (multi-part parcels are unsupported)", record));
            }
            p.exterior = std::move(ring);
            have_exterior = true;
        } else {
            holes.push_back(std::move(ring));
        }
    }
    if (!have_exterior) throw Error(ErrorCode::invalid_polygon, fmt::format("record {} has no exterior ring", record));
    p.holes = std::move(holes);
    return with_rfc7946_orientation(std::move(p));
}

}  // namespace

ShapefileBytes encode_parcels_shapefile(const std::vector<FieldParcel>& parcels, const ParcelColumns& columns) {
    ByteWriter records;
    std::vector<std::pair<std::size_t, std::size_t>> index;  // offset, content length (bytes)
    BBox total{0, 0, 0, 0};
    for (std::size_t i = 0; i < parcels.size(); ++i) {
        const auto rings = shapefile_rings(parcels[i].geometry);
        std::size_t points = 0;
        for (const auto& r : rings) points += r.size();
        const std::size_t content = 4 + 32 + 4 + 4 + 4 * rings.size() + 16 * points;
        index.emplace_back(kHeaderBytes + records.size(), content);

        const auto box = bbox_of(parcels[i].geometry);
        if (i == 0) {
            total = box;
        } else {
            total = BBox{std::min(total.min_x, box.min_x), std::min(total.min_y, box.min_y),
                         std::max(total.max_x, box.max_x), std::max(total.max_y, box.max_y)};
        }
        records.i32be(static_cast<std::int32_t>(i + 1));
        records.i32be(static_cast<std::int32_t>(content / 2));
        records.i32le(kShapePolygon);
        records.f64le(box.min_x);
        records.f64le(box.min_y);
        records.f64le(box.max_x);
        records.f64le(box.max_y);
        records.i32le(static_cast<std::int32_t>(rings.size()));
        records.i32le(static_cast<std::int32_t>(points));
        std::size_t start = 0;
        for (const auto& r : rings) {
            records.i32le(static_cast<std::int32_t>(start));
            start += r.size();
        }
        for (const auto& r : rings) {
            for (const auto& pt : r) {
                records.f64le(pt.x);
                records.f64le(pt.y);
            }
        }
    }

    ShapefileBytes out;
    ByteWriter shp;
    write_main_header(shp, kHeaderBytes + records.size(), total);
    shp.bytes(records.data());
    out.shp = shp.take();

    ByteWriter shx;
    write_main_header(shx, kHeaderBytes + 8 * index.size(), total);
    for (const auto& [off, len] : index) {
        shx.i32be(static_cast<std::int32_t>(off / 2));
        shx.i32be(static_cast<std::int32_t>(len / 2));
    }
    out.shx = shx.take();
    out.dbf = encode_dbf(parcels, columns);
    return out;
}

std::vector<FieldParcel> decode_parcels_shapefile(std::span<const std::uint8_t> shp_bytes,
                                                  std::span<const std::uint8_t> dbf_bytes, const ParcelColumns& columns) {
    const ByteReader r(shp_bytes, ErrorCode::io_error, ".shp");
    if (r.i32be(0) != kFileCode) throw Error(ErrorCode::unsupported_format, "not a shapefile (bad file code)");
    const auto file_type = r.i32le(32);
    if (file_type != kShapePolygon) {
        throw Error(ErrorCode::shape_type_mismatch, fmt::format("shape type {} is not polygon (5)", file_type));
    }
    const std::size_t file_bytes = static_cast<std::size_t>(r.i32be(24)) * 2;
    if (file_bytes > r.size()) throw Error(ErrorCode::io_error, ".shp: truncated data");

    std::vector<Polygon> shapes;
    for (std::size_t at = kHeaderBytes; at < file_bytes;) {
        const std::size_t content = static_cast<std::size_t>(r.i32be(at + 4)) * 2;
        const std::size_t c = at + 8;
        const auto type = r.i32le(c);
        if (type == kShapeNull) {
            throw Error(ErrorCode::shape_type_mismatch, fmt::format("record {} is a null shape", shapes.size() + 1));
        }
        if (type != kShapePolygon) {
            throw Error(ErrorCode::shape_type_mismatch, fmt::format("record {} has shape type {}", shapes.size() + 1, type));
        }
        const auto parts = static_cast<std::size_t>(r.i32le(c + 36));
        const auto points = static_cast<std::size_t>(r.i32le(c + 40));
        if (44 + 4 * parts + 16 * points > content) throw Error(ErrorCode::io_error, ".shp: record overruns its length");
        std::vector<std::size_t> starts;
        for (std::size_t i = 0; i < parts; ++i) starts.push_back(static_cast<std::size_t>(r.i32le(c + 44 + 4 * i)));
        starts.push_back(points);
        const std::size_t pts_at = c + 44 + 4 * parts;
        std::vector<Ring> rings;
        for (std::size_t i = 0; i < parts; ++i) {
            if (starts[i] >= starts[i + 1] || starts[i + 1] > points) throw Error(ErrorCode::io_error, ".shp: bad part index");
            Ring ring;
            for (std::size_t k = starts[i]; k < starts[i + 1]; ++k) {
                ring.push_back({r.f64le(pts_at + 16 * k), r.f64le(pts_at + 16 * k + 8)});
            }
            rings.push_back(std::move(ring));
        }
        shapes.push_back(assemble_polygon(std::move(rings), shapes.size() + 1));
        at = c + content;
    }

    const auto table = decode_dbf(dbf_bytes);
    if (table.rows.size() != shapes.size()) {
        throw Error(ErrorCode::record_count_mismatch,
                    fmt::format(".shp has {} records but .dbf has {}", shapes.size(), table.rows.size()));
    }
    const auto id_col = column_index(table, columns.parcel_id);
    const auto crop_col = column_index(table, columns.crop_code);
    std::optional<std::size_t> applicant_col;
    for (std::size_t i = 0; i < table.fields.size(); ++i) {
        if (table.fields[i].name == columns.applicant_id) applicant_col = i;
    }

    std::vector<FieldParcel> out;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        if (table.deleted[i]) continue;
        FieldParcel p;
        p.parcel_id = table.rows[i][id_col];
        p.crop_code = table.rows[i][crop_col];
        p.geometry = std::move(shapes[i]);
        if (applicant_col && !table.rows[i][*applicant_col].empty()) p.applicant_id = table.rows[i][*applicant_col];
        if (p.parcel_id.empty()) throw Error(ErrorCode::invalid_argument, fmt::format("record {} has an empty parcel id", i + 1));
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<FieldParcel> read_parcels_shapefile(const std::filesystem::path& shp, const std::filesystem::path& dbf,
                                                const ParcelColumns& columns) {
    return decode_parcels_shapefile(read_file_bytes(shp), read_file_bytes(dbf), columns);
}

void write_parcels_shapefile(const std::vector<FieldParcel>& parcels, const std::filesystem::path& stem,
                             const ParcelColumns& columns) {
    const auto bytes = encode_parcels_shapefile(parcels, columns);
    auto with_ext = [&](const char* ext) {
        auto p = stem;
        p += ext;
        return p;
    };
    write_file_atomic(with_ext(".shp"), bytes.shp);
    write_file_atomic(with_ext(".shx"), bytes.shx);
    write_file_atomic(with_ext(".dbf"), bytes.dbf);
}

std::vector<FieldParcel> clip_parcels_bbox(const std::vector<FieldParcel>& parcels, const BBox& bbox) {
    std::vector<FieldParcel> out;
    for (const auto& p : parcels) {
        if (bbox_of(p.geometry).intersects(bbox)) out.push_back(p);
    }
    return out;
}

}  // namespace fieldbabel
