#pragma once

#include <cstdint>
#include <string>

namespace fleetcast {

// Timestamps are UTC epoch seconds, always aligned to whole hours.
using Timestamp = std::int64_t;

inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr int kHoursPerDay = 24;

struct CivilDate {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31
};

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(int year, int month, int day);

// Inverse of days_from_civil.
CivilDate civil_from_days(std::int64_t days);

// Parses "YYYY-MM-DDTHH:MM", "YYYY-MM-DDTHH:MM:SS" (optionally with a
// trailing 'Z'; a space is accepted in place of 'T').  Throws
// std::invalid_argument on malformed input or non-hour-aligned times.
Timestamp parse_timestamp(const std::string& text);

// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp t);

// Hour of day in [0, 23].
int hour_of_day(Timestamp t);

// Midnight UTC of the day containing t.
Timestamp day_start(Timestamp t);

// 1-based day of year in [1, 366].
int day_of_year(Timestamp t);

// Calendar month in [1, 12].
int month_of_year(Timestamp t);

CivilDate civil_date(Timestamp t);

// Midnight UTC of the first day of the month containing t.
Timestamp month_start(Timestamp t);

// Adds a number of calendar months to a midnight timestamp, clamping the
// day of month to the target month's length.
Timestamp add_months(Timestamp t, int months);

// Formats just the date part, "YYYY-MM-DD".
std::string format_date(Timestamp t);

}  // namespace fleetcast
