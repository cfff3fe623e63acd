#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace epistate {

/// Calendar day, stored as days since 1970-01-01. Parsed from / printed as
/// ISO-8601 (YYYY-MM-DD). One model step corresponds to one day.
class Date {
public:
    Date() = default;
    explicit Date(std::int32_t days_since_epoch) : days_(days_since_epoch) {}

    static Date from_ymd(int y, int m, int d);
    static Date parse(const std::string& iso);

    std::string to_string() const;

    std::int32_t days_since_epoch() const { return days_; }
    int day_of_week() const {  // 0 = Monday .. 6 = Sunday
        return static_cast<int>(((days_ % 7) + 7 + 3) % 7);
    }

    Date operator+(int n) const { return Date(days_ + n); }
    Date operator-(int n) const { return Date(days_ - n); }
    int operator-(Date other) const { return days_ - other.days_; }
    Date& operator++() { ++days_; return *this; }
    auto operator<=>(const Date&) const = default;

private:
    std::int32_t days_ = 0;
};

namespace detail {

// Civil-calendar conversions (proleptic Gregorian).
inline std::int32_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int32_t>(doe) - 719468;
}

inline void civil_from_days(std::int32_t z, int& y, int& m, int& d) {
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y += m <= 2;
}

}  // namespace detail

inline Date Date::from_ymd(int y, int m, int d) {
    if (m < 1 || m > 12 || d < 1 || d > 31)
        throw std::invalid_argument("invalid calendar date");
    return Date(detail::days_from_civil(y, m, d));
}

inline Date Date::parse(const std::string& iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
        throw std::invalid_argument("expected ISO date YYYY-MM-DD, got '" + iso + "'");
    for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (iso[i] < '0' || iso[i] > '9')
            throw std::invalid_argument("expected ISO date YYYY-MM-DD, got '" + iso + "'");
    int y = std::stoi(iso.substr(0, 4));
    int m = std::stoi(iso.substr(5, 2));
    int d = std::stoi(iso.substr(8, 2));
    return from_ymd(y, m, d);
}

inline std::string Date::to_string() const {
    int y, m, d;
    detail::civil_from_days(days_, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

}  // namespace epistate
