#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace impactkit {

/// Calendar date (proleptic Gregorian). Comparison and ordering come from
/// std::chrono; all toolkit dates are day-granular.
using Date = std::chrono::year_month_day;

/// Builds a validated date. Throws InvalidArgumentError for impossible
/// combinations such as 2021-02-30.
Date make_date(int year, unsigned month, unsigned day);

/// Parses "YYYY-MM-DD". Returns nullopt on any syntactic or calendar error.
std::optional<Date> parse_date(std::string_view iso);

/// Formats as "YYYY-MM-DD" (zero-padded).
std::string format_date(const Date& d);

/// Shifts by whole calendar months. When the source day does not exist in
/// the target month, clamps to the last valid day (2021-08-31 - 6 months
/// -> 2021-02-28).
Date add_calendar_months(const Date& d, int months);

/// Inclusive [start, end] day-granular range.
struct DateWindow {
    Date start;
    Date end;

    bool contains(const Date& d) const { return start <= d && d <= end; }

    friend bool operator==(const DateWindow&, const DateWindow&) = default;
};

/// Validated constructor for DateWindow; throws InvalidArgumentError when
/// start > end.
DateWindow make_window(const Date& start, const Date& end);

}  // namespace impactkit
