#include "fieldbabel/time.hpp"

#include <charconv>

#include <fmt/format.h>

#include "fieldbabel/error.hpp"

namespace fieldbabel {

namespace {

int digits(std::string_view text, std::size_t at, std::size_t n) {
    if (at + n > text.size()) throw Error(ErrorCode::invalid_argument, fmt::format("truncated date/time '{}'", text));
    int v = 0;
    for (std::size_t i = at; i < at + n; ++i) {
        const char c = text[i];
        if (c < '0' || c > '9') throw Error(ErrorCode::invalid_argument, fmt::format("bad digit in date/time '{}'", text));
        v = v * 10 + (c - '0');
    }
    return v;
}

void expect(std::string_view text, std::size_t at, char c) {
    if (at >= text.size() || text[at] != c) {
        throw Error(ErrorCode::invalid_argument, fmt::format("expected '{}' at position {} in '{}'", c, at, text));
    }
}

}  // namespace

Date parse_date(std::string_view text) {
    if (text.size() < 10) throw Error(ErrorCode::invalid_argument, fmt::format("'{}' is not a YYYY-MM-DD date", text));
    const int y = digits(text, 0, 4);
    expect(text, 4, '-');
    const int m = digits(text, 5, 2);
    expect(text, 7, '-');
    const int d = digits(text, 8, 2);
    const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) throw Error(ErrorCode::invalid_argument, fmt::format("'{}' is not a calendar date", text));
    if (text.size() != 10) throw Error(ErrorCode::invalid_argument, fmt::format("trailing characters in date '{}'", text));
    return date;
}

std::string format_date(Date d) {
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                       static_cast<unsigned>(d.day()));
}

Timestamp parse_timestamp(std::string_view text) {
    if (text.size() == 10) return start_of(parse_date(text));
    const Date date = parse_date(text.substr(0, 10));
    expect(text, 10, 'T');
    const int hh = digits(text, 11, 2);
    expect(text, 13, ':');
    const int mm = digits(text, 14, 2);
    expect(text, 16, ':');
    const int ss = digits(text, 17, 2);
    std::size_t at = 19;
    if (at < text.size() && text[at] == '.') {
        ++at;
        while (at < text.size() && text[at] >= '0' && text[at] <= '9') ++at;
    }
    expect(text, at, 'Z');
    if (at + 1 != text.size()) throw Error(ErrorCode::invalid_argument, fmt::format("trailing characters in '{}'", text));
    if (hh > 23 || mm > 59 || ss > 60) throw Error(ErrorCode::invalid_argument, fmt::format("bad time of day in '{}'", text));
    return start_of(date) + std::chrono::hours{hh} + std::chrono::minutes{mm} + std::chrono::seconds{ss};
}

std::string format_timestamp(Timestamp t) {
    const auto day = std::chrono::floor<std::chrono::days>(t);
    const std::chrono::hh_mm_ss hms{t - day};
    return fmt::format("{}T{:02d}:{:02d}:{:02d}Z", format_date(Date{day}), hms.hours().count(), hms.minutes().count(),
                       hms.seconds().count());
}

}  // namespace fieldbabel
