#include <gtest/gtest.h>

#include "fieldbabel/crop_calendar.hpp"
#include "fieldbabel/error.hpp"
#include "fieldbabel/time.hpp"

using namespace fieldbabel;
using namespace std::chrono;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error";
    return ErrorCode::io_error;
}

}  // namespace

TEST(CropCalendar, SevenCropsAllFirst) {
    const auto crops = list_crops();
    ASSERT_EQ(crops.size(), 7u);
    EXPECT_EQ(crops[0].english_name, "All");
    EXPECT_TRUE(crops[0].lpis_name.empty());
}

TEST(CropCalendar, LookupIgnoresCaseInBothLanguages) {
    EXPECT_EQ(find_crop("winter WHEAT").lpis_name, "Vinterhvede");
    EXPECT_EQ(find_crop("vinterhvede").english_name, "Winter wheat");
    EXPECT_EQ(find_crop("V\xC3\x85RBYG").english_name, "Spring barley");  // VÅRBYG
    EXPECT_EQ(find_crop("v\xC3\xa5raps").english_name, "Spring rape");
    EXPECT_EQ(code_of([] { find_crop("Barley"); }), ErrorCode::unknown_crop);
    EXPECT_EQ(code_of([] { find_crop(""); }), ErrorCode::unknown_crop);
}

TEST(CropCalendar, FoldCase) {
    EXPECT_EQ(fold_case("\xC3\x86\xC3\x98\xC3\x85 Ab"), "\xC3\xA6\xC3\xB8\xC3\xA5 ab");
    // multiplication sign has no lower case
    EXPECT_EQ(fold_case("\xC3\x97"), "\xC3\x97");
}

TEST(CropCalendar, WindowsCrossYears) {
    auto w = season_window("Sugar beat", 2017);
    EXPECT_EQ(w.start, 2017y / April / 1);
    EXPECT_EQ(w.end, 2018y / February / 1);
    w = season_window("Winter rapeseed", 2017);
    EXPECT_EQ(w.start, 2016y / July / 1);
    EXPECT_EQ(w.end, 2017y / August / 1);
    w = season_window("Corn", 2020);
    EXPECT_EQ(w.start, 2020y / March / 15);
    EXPECT_EQ(w.end, 2020y / November / 15);
    EXPECT_EQ(season_window("all", 2019).end, 2019y / December / 31);
}

TEST(CropCalendar, YearBounds) {
    EXPECT_NO_THROW(season_window("Corn", 1970));
    EXPECT_NO_THROW(season_window("Corn", 2100));
    EXPECT_EQ(code_of([] { season_window("Corn", 1969); }), ErrorCode::invalid_argument);
    EXPECT_EQ(code_of([] { season_window("Corn", 2101); }), ErrorCode::invalid_argument);
    EXPECT_EQ(code_of([] { season_window("Rye", 2017); }), ErrorCode::unknown_crop);
}

TEST(Time, TimestampRoundTrip) {
    const auto t = parse_timestamp("2017-05-20T17:05:00Z");
    EXPECT_EQ(t.time_since_epoch().count(), 1495299900);
    EXPECT_EQ(format_timestamp(t), "2017-05-20T17:05:00Z");
    EXPECT_EQ(parse_timestamp("2017-05-20T17:05:00.987Z"), t);
    EXPECT_EQ(parse_timestamp("2017-05-20"), start_of(2017y / May / 20));
    EXPECT_EQ(date_of(t), 2017y / May / 20);
    EXPECT_DOUBLE_EQ(days_between(start_of(2017y / May / 20), t), (17 * 3600 + 300) / 86400.0);
}

TEST(Time, RejectsMalformed) {
    for (const char* bad : {"", "2017-5-20", "2017-02-30", "2017-05-20T25:00:00Z", "2017-05-20T17:05:00", "20170520",
                            "2017-05-20T17:05:00Zjunk"}) {
        EXPECT_EQ(code_of([&] { parse_timestamp(bad); }), ErrorCode::invalid_argument) << bad;
    }
    EXPECT_EQ(code_of([] { parse_date("2016-02-30"); }), ErrorCode::invalid_argument);
    EXPECT_EQ(parse_date("2016-02-29"), 2016y / February / 29);
    EXPECT_EQ(format_date(2016y / February / 9), "2016-02-09");
}
