#include "fleetcast/time.hpp"

#include <array>
#include <cstdio>
#include <stdexcept>

namespace fleetcast {

namespace {

bool is_leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

int last_day_of_month(int y, int m) {
    static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30,
                                                  31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return kDays[static_cast<std::size_t>(m - 1)];
}

[[noreturn]] void bad_timestamp(const std::string& text) {
    throw std::invalid_argument("malformed timestamp: '" + text + "'");
}

int parse_fixed_digits(const std::string& s, std::size_t pos, int width) {
    int v = 0;
    for (int i = 0; i < width; ++i) {
        char c = s[pos + static_cast<std::size_t>(i)];
        if (c < '0' || c > '9') throw std::invalid_argument("bad digit");
        v = v * 10 + (c - '0');
    }
    return v;
}

}  // namespace

std::int64_t days_from_civil(int y, int m, int d) {
    // Howard Hinnant's algorithm, days since 1970-01-01.
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m),
                     static_cast<int>(d)};
}

Timestamp parse_timestamp(const std::string& text) {
    // Accepted: YYYY-MM-DD[T ]HH:MM[:SS][Z]
    if (text.size() < 16) bad_timestamp(text);
    int year, month, day, hour, minute, second = 0;
    try {
        year = parse_fixed_digits(text, 0, 4);
        if (text[4] != '-') bad_timestamp(text);
        month = parse_fixed_digits(text, 5, 2);
        if (text[7] != '-') bad_timestamp(text);
        day = parse_fixed_digits(text, 8, 2);
        if (text[10] != 'T' && text[10] != ' ') bad_timestamp(text);
        hour = parse_fixed_digits(text, 11, 2);
        if (text[13] != ':') bad_timestamp(text);
        minute = parse_fixed_digits(text, 14, 2);
        std::size_t pos = 16;
        if (pos < text.size() && text[pos] == ':') {
            second = parse_fixed_digits(text, pos + 1, 2);
            pos += 3;
        }
        if (pos < text.size() && text[pos] == 'Z') ++pos;
        if (pos != text.size()) bad_timestamp(text);
    } catch (const std::invalid_argument&) {
        bad_timestamp(text);
    }
    if (month < 1 || month > 12) bad_timestamp(text);
    if (day < 1 || day > last_day_of_month(year, month)) bad_timestamp(text);
    if (hour > 23 || minute > 59 || second > 59) bad_timestamp(text);
    if (minute != 0 || second != 0) {
        throw std::invalid_argument("timestamp not hour-aligned: '" + text +
                                    "'");
    }
    return days_from_civil(year, month, day) * kSecondsPerDay +
           hour * kSecondsPerHour;
}

std::string format_timestamp(Timestamp t) {
    if (t % kSecondsPerHour != 0) {
        throw std::invalid_argument("timestamp not hour-aligned");
    }
    std::int64_t days = t / kSecondsPerDay;
    std::int64_t rem = t - days * kSecondsPerDay;
    if (rem < 0) {
        rem += kSecondsPerDay;
        --days;
    }
    const CivilDate cd = civil_from_days(days);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", cd.year,
                  cd.month, cd.day, static_cast<int>(rem / kSecondsPerHour), 0,
                  0);
    return std::string(buf);
}

int hour_of_day(Timestamp t) {
    std::int64_t s = t % kSecondsPerDay;
    if (s < 0) s += kSecondsPerDay;
    return static_cast<int>(s / kSecondsPerHour);
}

Timestamp day_start(Timestamp t) {
    std::int64_t s = t % kSecondsPerDay;
    if (s < 0) s += kSecondsPerDay;
    return t - s;
}

CivilDate civil_date(Timestamp t) {
    return civil_from_days(day_start(t) / kSecondsPerDay);
}

int day_of_year(Timestamp t) {
    const CivilDate cd = civil_date(t);
    const std::int64_t jan1 = days_from_civil(cd.year, 1, 1);
    return static_cast<int>(day_start(t) / kSecondsPerDay - jan1) + 1;
}

int month_of_year(Timestamp t) { return civil_date(t).month; }

Timestamp month_start(Timestamp t) {
    const CivilDate cd = civil_date(t);
    return days_from_civil(cd.year, cd.month, 1) * kSecondsPerDay;
}

Timestamp add_months(Timestamp t, int months) {
    if (t % kSecondsPerDay != 0) {
        throw std::invalid_argument("add_months expects a midnight timestamp");
    }
    CivilDate cd = civil_date(t);
    int idx = cd.year * 12 + (cd.month - 1) + months;
    int year = idx / 12;
    int month = idx % 12;
    if (month < 0) {
        month += 12;
        --year;
    }
    ++month;
    int day = cd.day;
    int last = last_day_of_month(year, month);
    if (day > last) day = last;
    return days_from_civil(year, month, day) * kSecondsPerDay;
}

std::string format_date(Timestamp t) {
    const CivilDate cd = civil_date(t);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", cd.year, cd.month,
                  cd.day);
    return std::string(buf);
}

}  // namespace fleetcast
