#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace psmatch {

/// Calendar date. Comparisons follow chronological order.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  auto operator<=>(const Date&) const = default;

  bool valid() const;

  /// Days since 1970-01-01 (negative before). Valid for any Gregorian date.
  std::int64_t serial() const;

  Date add_days(std::int64_t n) const;

  /// ISO-8601 "YYYY-MM-DD".
  std::string to_string() const;
};

/// Parses strict ISO-8601 "YYYY-MM-DD". Returns nullopt on malformed input
/// or an invalid calendar date.
std::optional<Date> parse_date(std::string_view text);

/// Inclusive day count between two dates; 1 when start == end.
std::int64_t span_days(const Date& start, const Date& end);

}  // namespace psmatch
