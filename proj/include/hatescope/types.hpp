#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "hatescope/error.hpp"

namespace hatescope {

/// Opaque, stable 64-bit user identifier.
struct UserId {
    std::uint64_t value = 0;

    constexpr UserId() = default;
    constexpr explicit UserId(std::uint64_t v) : value(v) {}

    friend constexpr auto operator<=>(const UserId&, const UserId&) = default;
};

inline std::string to_string(UserId id) { return std::to_string(id.value); }

inline UserId parse_user_id(std::string_view text) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw DataError("invalid user id '" + std::string(text) + "'");
    }
    return UserId{v};
}

using Timestamp = std::chrono::sys_seconds;

namespace detail {

// Howard Hinnant's days_from_civil.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
    std::int64_t y;
    unsigned m, d;
};

constexpr Civil civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {y + (m <= 2), m, d};
}

inline bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc{} && ptr == s.data() + pos + len;
}

}  // namespace detail

/// Parses ISO-8601 "YYYY-MM-DD[THH:MM:SS[.fff]][Z|+00:00]". Only UTC offsets
/// are accepted; fractional seconds are truncated.
inline Timestamp parse_timestamp(std::string_view s) {
    auto fail = [&]() -> Timestamp {
        throw DataError("invalid ISO-8601 UTC timestamp '" + std::string(s) + "'");
    };
    int year = 0, month = 0, day = 0, hh = 0, mm = 0, ss = 0;
    if (!detail::read_int(s, 0, 4, year) || s.size() < 10 || s[4] != '-' ||
        !detail::read_int(s, 5, 2, month) || s[7] != '-' || !detail::read_int(s, 8, 2, day)) {
        return fail();
    }
    std::size_t pos = 10;
    if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
        if (!detail::read_int(s, pos + 1, 2, hh) || s.size() < pos + 9 || s[pos + 3] != ':' ||
            !detail::read_int(s, pos + 4, 2, mm) || s[pos + 6] != ':' ||
            !detail::read_int(s, pos + 7, 2, ss)) {
            return fail();
        }
        pos += 9;
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        }
    }
    std::string_view zone = s.substr(pos);
    if (!(zone.empty() || zone == "Z" || zone == "+00:00" || zone == "+0000")) return fail();
    if (month < 1 || month > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 60) return fail();
    const auto days = detail::days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    return Timestamp{std::chrono::seconds{days * 86400 + hh * 3600 + mm * 60 + ss}};
}

inline std::string format_timestamp(Timestamp t) {
    const std::int64_t secs = t.time_since_epoch().count();
    std::int64_t days = secs / 86400;
    std::int64_t rem = secs % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const auto c = detail::civil_from_days(days);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<long long>(c.y), c.m,
                  c.d, static_cast<long long>(rem / 3600), static_cast<long long>(rem / 60 % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

/// Fractional days between two instants.
inline double days_between(Timestamp from, Timestamp to) {
    return static_cast<double>((to - from).count()) / 86400.0;
}

inline double days_since_epoch(Timestamp t) { return static_cast<double>(t.time_since_epoch().count()) / 86400.0; }

}  // namespace hatescope

template <>
struct std::hash<hatescope::UserId> {
    std::size_t operator()(const hatescope::UserId& id) const noexcept { return std::hash<std::uint64_t>{}(id.value); }
};
