#pragma once

#include <span>
#include <string>
#include <string_view>

#include "fieldbabel/time.hpp"

namespace fieldbabel {

struct MonthDay {
    unsigned month = 1;
    unsigned day = 1;
};

/// Seasonal acquisition window of one crop. Offsets are applied to the
/// reference year, which is the season (harvest) year.
struct CropSeason {
    std::string_view lpis_name;     // Danish LPIS entry; empty for "All"
    std::string_view english_name;
    MonthDay start;
    int start_year_offset = 0;      // -1 or 0
    MonthDay end;
    int end_year_offset = 0;        // 0 or +1
};

struct SeasonWindow {
    Date start;
    Date end;
};

/// The seven crop windows served by the service, "All" first.
std::span<const CropSeason> list_crops();

/// Case-insensitive lookup by English or Danish name. Throws
/// Error(unknown_crop).
const CropSeason& find_crop(std::string_view name);

/// Throws Error(unknown_crop) or Error(invalid_argument) for years outside
/// [1970, 2100].
SeasonWindow season_window(std::string_view crop, int year);

/// Lower-cases ASCII and the Latin-1 uppercase block (Æ, Ø, Å, ...) of UTF-8.
std::string fold_case(std::string_view text);

}  // namespace fieldbabel
