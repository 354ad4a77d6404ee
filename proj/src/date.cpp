#include "impactkit/date.hpp"

#include <cstdio>

#include "impactkit/errors.hpp"

namespace impactkit {

Date make_date(int year, unsigned month, unsigned day) {
    const Date d{std::chrono::year{year}, std::chrono::month{month},
                 std::chrono::day{day}};
    if (!d.ok()) {
        throw InvalidArgumentError("invalid calendar date " + std::to_string(year) +
                                   "-" + std::to_string(month) + "-" +
                                   std::to_string(day));
    }
    return d;
}

std::optional<Date> parse_date(std::string_view iso) {
    // Strict "YYYY-MM-DD"; Semantic Scholar also emits this shape.
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
    auto digits = [&](size_t from, size_t len, int& out) {
        out = 0;
        for (size_t i = from; i < from + len; ++i) {
            const char c = iso[i];
            if (c < '0' || c > '9') return false;
            out = out * 10 + (c - '0');
        }
        return true;
    };
    int y = 0, m = 0, d = 0;
    if (!digits(0, 4, y) || !digits(5, 2, m) || !digits(8, 2, d)) {
        return std::nullopt;
    }
    const Date date{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                    std::chrono::day{unsigned(d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(d.year()),
                  unsigned(d.month()), unsigned(d.day()));
    return buf;
}

Date add_calendar_months(const Date& d, int months) {
    const auto shifted = d.year() / d.month() + std::chrono::months{months};
    Date result = shifted / d.day();
    if (!result.ok()) result = shifted / std::chrono::last;
    return result;
}

DateWindow make_window(const Date& start, const Date& end) {
    if (start > end) {
        throw InvalidArgumentError("date window start " + format_date(start) +
                                   " is after end " + format_date(end));
    }
    return DateWindow{start, end};
}

}  // namespace impactkit
