#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace fieldbabel {

/// UTC instant with second resolution.
using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::year_month_day;

/// "YYYY-MM-DDTHH:MM:SS[.fff]Z" (fractional seconds are truncated). A bare
/// date "YYYY-MM-DD" is read as midnight UTC. Throws Error(invalid_argument).
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

/// "YYYY-MM-DD", validated against the calendar.
Date parse_date(std::string_view text);
std::string format_date(Date d);

inline Date date_of(Timestamp t) { return Date{std::chrono::floor<std::chrono::days>(t)}; }
inline Timestamp start_of(Date d) { return Timestamp{std::chrono::sys_days{d}}; }

/// Fractional days between two instants (b − a).
inline double days_between(Timestamp a, Timestamp b) {
    return std::chrono::duration<double, std::ratio<86400>>(b - a).count();
}

}  // namespace fieldbabel
