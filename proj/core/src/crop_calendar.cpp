#include "fieldbabel/crop_calendar.hpp"

#include <array>

#include <fmt/format.h>

#include "fieldbabel/error.hpp"

namespace fieldbabel {

namespace {

// "Sugar beat" and "Spring rape" are kept verbatim as published.
constexpr std::array<CropSeason, 7> kCrops{{
    {"", "All", {1, 1}, 0, {12, 31}, 0},
    {"Majs", "Corn", {3, 15}, 0, {11, 15}, 0},
    {"V\xC3\xA5rbyg", "Spring barley", {3, 1}, 0, {9, 1}, 0},
    {"Sukkerroer", "Sugar beat", {4, 1}, 0, {2, 1}, 1},
    {"V\xC3\xA5raps", "Spring rape", {3, 1}, 0, {10, 1}, 0},
    {"Vinterraps", "Winter rapeseed", {7, 1}, -1, {8, 1}, 0},
    {"Vinterhvede", "Winter wheat", {8, 15}, -1, {10, 1}, 0},
}};

Date make_date(int year, MonthDay md) {
    return Date{std::chrono::year{year}, std::chrono::month{md.month}, std::chrono::day{md.day}};
}

}  // namespace

std::string fold_case(std::string_view text) {
    std::string out(text);
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& c = reinterpret_cast<unsigned char&>(out[i]);
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<unsigned char>(c + 32);
        } else if (c == 0xC3 && i + 1 < out.size()) {
            // U+00C0..U+00DE except U+00D7 (multiplication sign).
            auto& next = reinterpret_cast<unsigned char&>(out[i + 1]);
            if (next >= 0x80 && next <= 0x9E && next != 0x97) next = static_cast<unsigned char>(next + 0x20);
            ++i;
        }
    }
    return out;
}

std::span<const CropSeason> list_crops() { return kCrops; }

const CropSeason& find_crop(std::string_view name) {
    const auto key = fold_case(name);
    for (const auto& crop : kCrops) {
        if (fold_case(crop.english_name) == key || (!crop.lpis_name.empty() && fold_case(crop.lpis_name) == key)) {
            return crop;
        }
    }
    throw Error(ErrorCode::unknown_crop, fmt::format("unknown crop '{}'", name));
}

SeasonWindow season_window(std::string_view crop, int year) {
    const auto& season = find_crop(crop);
    if (year < 1970 || year > 2100) {
        throw Error(ErrorCode::invalid_argument, fmt::format("reference year {} outside [1970, 2100]", year));
    }
    return {make_date(year + season.start_year_offset, season.start),
            make_date(year + season.end_year_offset, season.end)};
}

}  // namespace fieldbabel
