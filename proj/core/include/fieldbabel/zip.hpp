#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fieldbabel {

struct ZipEntry {
    std::string name;
    std::vector<std::uint8_t> data;

    bool operator==(const ZipEntry&) const = default;
};

/// Stored (uncompressed) archive with entries sorted by name and every
/// timestamp pinned to 1980-01-01 00:00, so equal inputs give equal bytes.
/// Throws Error(invalid_argument) on duplicate names or archives past 4 GiB.
std::vector<std::uint8_t> write_zip(std::vector<ZipEntry> entries);

/// Reads archives of the stored subset written above, checking CRCs.
/// Throws Error(unsupported_format) on anything else.
std::vector<ZipEntry> read_zip(std::span<const std::uint8_t> bytes);

}  // namespace fieldbabel
